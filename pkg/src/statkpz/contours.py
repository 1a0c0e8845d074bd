"""Integration contours in the complex plane and quadrature rules over them.

A Contour is an ordered list of directed polygonal segments; rays (infinite
segments) may appear only first/last.  build_quadrature truncates rays,
splits every segment into panels (geometrically graded along rays, refined
near caller-supplied markers) and lays Gauss-Legendre nodes on each panel.
Contour weights carry the parametrization derivative and the 1/(2*pi*i)
measure convention; half-line rules are plain Lebesgue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

TWO_PI_I = 2.0j * math.pi

__all__ = [
    "GeometryError",
    "Segment",
    "Contour",
    "Quadrature",
    "wedge",
    "contour_cv",
    "contour_cs",
    "vertical_line",
    "rectangle",
    "build_quadrature",
    "halfline_quadrature",
    "pole_clearance",
    "truncation_radius_for",
]


class GeometryError(ValueError):
    """Contour construction failed a geometric safety check."""


@dataclass(frozen=True)
class Segment:
    """Directed segment.

    kind == "line": straight segment from start to end.
    kind == "ray": infinite piece; the finite anchor is one endpoint and the
    other endpoint is anchor + direction.  If the anchor is ``start`` the
    traversal runs outward (anchor -> infinity), if it is ``end`` it runs
    inward (infinity -> anchor).
    """

    start: complex
    end: complex
    kind: str = "line"
    anchor_is_start: bool = True

    def direction(self) -> complex:
        d = self.end - self.start if self.anchor_is_start else self.start - self.end
        return d / abs(d)

    def anchor(self) -> complex:
        return self.start if self.anchor_is_start else self.end


@dataclass(frozen=True)
class Contour:
    segments: tuple[Segment, ...]
    orientation: int = +1
    # optional points near which quadrature panels should be refined
    markers: tuple[complex, ...] = ()

    def __post_init__(self):
        for k, s in enumerate(self.segments):
            if s.kind == "ray" and 0 < k < len(self.segments) - 1:
                raise GeometryError("rays may appear only as first/last segment")
        for s0, s1 in zip(self.segments[:-1], self.segments[1:]):
            p0 = s0.anchor() if s0.kind == "ray" else s0.end
            p1 = s1.anchor() if s1.kind == "ray" else s1.start
            if abs(p0 - p1) > 1e-12 * max(1.0, abs(p0)):
                raise GeometryError("consecutive segments must share endpoints")


@dataclass
class Quadrature:
    """Nodes/weights realizing integration along a Contour or a half-line."""

    nodes: np.ndarray
    weights: np.ndarray
    truncation_radius: float
    n_per_segment: int
    rebuild: Callable[[int], "Quadrature"] | None = field(default=None, repr=False, compare=False)

    def coarse(self) -> "Quadrature":
        if self.rebuild is None:
            raise ValueError("quadrature does not carry a rebuild recipe")
        return self.rebuild(max(4, self.n_per_segment // 2))


# ---------------------------------------------------------------------------
# contour constructors
# ---------------------------------------------------------------------------

def wedge(apex: complex, angle_in: float, angle_out: float, markers: Sequence[complex] = ()) -> Contour:
    """Two-ray wedge traversed from infinity along angle_in into the apex and
    out to infinity along angle_out."""
    d_in = complex(math.cos(angle_in), math.sin(angle_in))
    d_out = complex(math.cos(angle_out), math.sin(angle_out))
    seg_in = Segment(start=apex + d_in, end=apex, kind="ray", anchor_is_start=False)
    seg_out = Segment(start=apex, end=apex + d_out, kind="ray", anchor_is_start=True)
    return Contour(segments=(seg_in, seg_out), markers=tuple(markers))


def contour_cv(a, alpha, phi: float) -> Contour:
    """The left-opening wedge with apex mu = max(a)/2 + min(alpha)/2.

    Rays at angles pi +- phi, oriented with increasing imaginary part; the
    gamma-factor poles at {a_n - j} stay at distance >= (mu - max(a)) sin(phi).
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if alpha.size and a.size and not np.all(alpha.min() - a.max() > 0):
        raise GeometryError("need alpha_m - a_n > 0 for all m, n")
    if not (0.0 < phi <= math.pi / 4):
        raise GeometryError("phi must lie in (0, pi/4]")
    mu = 0.5 * a.max() + 0.5 * (alpha.min() if alpha.size else a.max() + 2.0)
    markers = [complex(an - j, 0.0) for an in a for j in range(3)]
    return wedge(complex(mu, 0.0), math.pi + phi, math.pi - phi, markers=markers)


def _widest_gap_point(lo: float, hi: float, blockers: Sequence[float]) -> float:
    """Midpoint of the widest blocker-free subinterval of (lo, hi)."""
    pts = sorted([lo] + [b for b in blockers if lo < b < hi] + [hi])
    best = (0.0, 0.5 * (lo + hi))
    for p0, p1 in zip(pts[:-1], pts[1:]):
        if p1 - p0 > best[0]:
            best = (p1 - p0, 0.5 * (p0 + p1))
    return best[1]


def contour_cs(v: complex, a, alpha, d: float = 0.1, phi: float = math.pi / 4 - 0.02) -> Contour:
    """Five-segment notched path for the inner s-integral of the K_u kernel.

    Vertical tails at Re s = R = -Re(v) + eta with eta = max(a)/4 + 3 min(alpha)/4,
    joined through a notch crossing the real axis inside (0, 1).  The crossing
    abscissa is placed in the widest gap of (0, 1) left free by the projections
    of the Gamma(alpha_m - v - s) poles (s = alpha_m - v + j), so the path never
    approaches a pole even when v sits near the wedge apex.  d is halved until
    v + Cs{v} stays clear of the v-wedge with apex mu.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    v = complex(v)
    eta = 0.25 * a.max() + 0.75 * (alpha.min() if alpha.size else a.max() + 2.0)
    mu = 0.5 * a.max() + 0.5 * (alpha.min() if alpha.size else a.max() + 2.0)
    R = -v.real + eta
    # keep the vertical tails off the integers (pole set of Gamma(-s)Gamma(1+s))
    if abs(R - round(R)) < 0.25:
        R = round(R) - 0.25 if R >= 0.25 else R + (0.25 - abs(R - round(R)))

    # s-plane pole projections relevant to the crossing window (0, 1)
    blockers = [0.0, 1.0]
    for am in alpha:
        p = complex(am) - v  # j = 0 pole; larger j lie further right
        for j in range(3):
            if abs(p.imag) < 0.5 and -0.5 < p.real + j < 1.5:
                blockers.append(p.real + j)
    x0 = _widest_gap_point(0.0, 1.0, blockers)

    dd = d
    for _ in range(12):
        cs = _notched_path(R, x0, dd)
        if not _intersects_wedge(cs, v, mu, phi):
            markers = [complex(k, 0.0) for k in range(0, int(max(R, x0)) + 2)]
            markers += [complex(am, 0.0) - v + j for am in alpha for j in range(3)]
            return Contour(segments=cs.segments, markers=tuple(markers))
        dd *= 0.5
    raise GeometryError("contour_cs: no valid notch height d found")


def _notched_path(R: float, x0: float, d: float) -> Contour:
    segs = (
        Segment(start=complex(R, -d - 1.0), end=complex(R, -d), kind="ray", anchor_is_start=False),
        Segment(start=complex(R, -d), end=complex(x0, -d)),
        Segment(start=complex(x0, -d), end=complex(x0, d)),
        Segment(start=complex(x0, d), end=complex(R, d)),
        Segment(start=complex(R, d), end=complex(R, d + 1.0), kind="ray", anchor_is_start=True),
    )
    return Contour(segments=segs)


def _intersects_wedge(cs: Contour, v: complex, mu: float, phi: float, clearance: float = 0.02) -> bool:
    """Does v + Cs{v} come within `clearance` of the wedge Cv{mu, phi}?"""
    probe = []
    for s in cs.segments:
        if s.kind == "ray":
            anchor = s.anchor()
            dirn = s.direction()
            ts = np.linspace(0.0, 60.0, 121)
            probe.append(anchor + dirn * ts)
        else:
            ts = np.linspace(0.0, 1.0, 41)
            probe.append(s.start + (s.end - s.start) * ts)
    pts = v + np.concatenate(probe)
    return bool(np.min(_dist_to_wedge(pts, mu, phi)) < clearance)


def _dist_to_wedge(pts: np.ndarray, mu: float, phi: float) -> np.ndarray:
    """Distance from points to the left-opening wedge with apex mu, angles pi+-phi."""
    rel = pts - mu
    d = np.full(pts.shape, np.inf)
    for ang in (math.pi + phi, math.pi - phi):
        u = complex(math.cos(ang), math.sin(ang))
        t = np.maximum(np.real(rel * np.conj(u)), 0.0)  # projection parameter onto the ray
        d = np.minimum(d, np.abs(rel - t * u))
    return d


def vertical_line(x0: float, y_max: float) -> Contour:
    """Segment from x0 - i y_max to x0 + i y_max (increasing imaginary part)."""
    if y_max <= 0:
        raise GeometryError("y_max must be positive")
    return Contour(segments=(Segment(complex(x0, -y_max), complex(x0, y_max)),))


def rectangle(x0: float, x1: float, y0: float, y1: float) -> Contour:
    """Closed anticlockwise rectangle (used by residue-theorem tests)."""
    c = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1), complex(x0, y0)]
    return Contour(segments=tuple(Segment(p, q) for p, q in zip(c[:-1], c[1:])))


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def _chord_dist(mk: np.ndarray, a: complex, b: complex) -> float:
    """Distance from the nearest marker to the chord [a, b]."""
    d = b - a
    L2 = abs(d) ** 2
    if L2 == 0.0:
        return float(np.min(np.abs(mk - a)))
    t = np.clip(((mk - a) * d.conjugate()).real / L2, 0.0, 1.0)
    return float(np.min(np.abs(mk - (a + t * d))))


def _panelize(p0: complex, p1: complex, markers: Sequence[complex], min_panel: float,
              panel_max: float | None = None, max_panels: int = 160):
    """Split [p0, p1] into panels: length capped at panel_max (if given) and
    graded so panel length stays below ~2.5x the distance to the nearest
    marker (distance measured to the whole panel chord)."""
    L = abs(p1 - p0)
    if L == 0.0:
        return []
    nbase = 1 if panel_max is None else max(1, int(math.ceil(L / panel_max)))
    edges = np.linspace(0.0, 1.0, nbase + 1)
    panels = [(float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])]
    if markers:
        mk = np.asarray(markers, dtype=complex)
        done = []
        while panels and len(done) + len(panels) < max_panels:
            t0, t1 = panels.pop()
            a = p0 + t0 * (p1 - p0)
            b = p0 + t1 * (p1 - p0)
            plen = abs(b - a)
            dist = _chord_dist(mk, a, b)
            if plen > max(2.5 * dist, min_panel, 1e-9 * L):
                tm = 0.5 * (t0 + t1)
                panels.extend([(t0, tm), (tm, t1)])
            else:
                done.append((t0, t1))
        done.extend(panels)
        panels = sorted(done)
    return panels


def _gl(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _check_simple(points_per_segment: list[np.ndarray]):
    """Pairwise intersection test on the truncated polyline (coarse)."""
    chords = []
    for pts in points_per_segment:
        chords.append((pts[0], pts[-1]))
    for i in range(len(chords)):
        for j in range(i + 2, len(chords)):
            if _segments_cross(*chords[i], *chords[j]):
                raise GeometryError("contour is not simple after truncation")


def _segments_cross(a0, a1, b0, b1) -> bool:
    def orient(p, q, r):
        return np.sign((q.real - p.real) * (r.imag - p.imag) - (q.imag - p.imag) * (r.real - p.real))

    o1, o2 = orient(a0, a1, b0), orient(a0, a1, b1)
    o3, o4 = orient(b0, b1, a0), orient(b0, b1, a1)
    return bool(o1 != o2 and o3 != o4 and o1 != 0 and o3 != 0)


def build_quadrature(
    c: Contour,
    n_per_segment: int = 16,
    truncation: float = 30.0,
    markers: Sequence[complex] | None = None,
    min_panel: float = 1e-4,
    panel_max: float | None = None,
) -> Quadrature:
    """Gauss-Legendre quadrature along a contour, measure dz/(2*pi*i).

    Rays are truncated at `truncation` (arc distance from their anchor) and
    panelized geometrically; lines are split into panels no longer than
    panel_max (when given) and refined near markers.  Every panel carries
    `n_per_segment` GL nodes, so polynomials of degree <= 2 n_per_segment - 1
    integrate exactly per segment.
    """
    if n_per_segment < 4:
        raise ValueError("n_per_segment must be >= 4")
    mk = list(c.markers) + list(markers or ())
    xg, wg = _gl(n_per_segment)
    nodes, weights = [], []
    seg_points = []
    for seg in c.segments:
        if seg.kind == "ray":
            anchor = seg.anchor()
            dirn = seg.direction()
            # geometric grading outward from the anchor
            edges = [0.0]
            step = min(0.75, truncation / 4.0, panel_max or math.inf)
            while edges[-1] < truncation:
                edges.append(min(edges[-1] + step, truncation))
                if panel_max is None or 2.0 * step <= panel_max:
                    step *= 2.0
            pieces = []
            for r0, r1 in zip(edges[:-1], edges[1:]):
                p0, p1 = anchor + r0 * dirn, anchor + r1 * dirn
                for t0, t1 in _panelize(p0, p1, mk, min_panel):
                    pieces.append((p0 + t0 * (p1 - p0), p0 + t1 * (p1 - p0)))
            if not seg.anchor_is_start:  # traversal from infinity toward the anchor
                pieces = [(b, a) for a, b in reversed(pieces)]
        else:
            pieces = []
            for t0, t1 in _panelize(seg.start, seg.end, mk, min_panel, panel_max):
                pieces.append((seg.start + t0 * (seg.end - seg.start), seg.start + t1 * (seg.end - seg.start)))
        pts = []
        for a, b in pieces:
            zm = 0.5 * (b - a) * xg + 0.5 * (a + b)
            nodes.append(zm)
            weights.append(0.5 * (b - a) * wg)
            pts.append(zm)
        seg_points.append(np.concatenate(pts))
    _check_simple(seg_points)
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights) / TWO_PI_I
    if nodes.size == 0:
        raise GeometryError("empty quadrature")

    def rebuild(n: int) -> Quadrature:
        return build_quadrature(c, n, truncation, markers, min_panel, panel_max)

    return Quadrature(nodes=nodes, weights=weights, truncation_radius=truncation,
                      n_per_segment=n_per_segment, rebuild=rebuild)


def halfline_quadrature(n: int = 64, scale: float = 1.0) -> Quadrature:
    """Positive nodes/weights approximating int_0^infty under x = scale*t/(1-t).

    Composite Gauss-Legendre on t in (0,1); nodes cluster near 0 and reach
    x ~ scale/(1-t) far into the tail, which suits exponentially and
    polynomially decaying integrands alike.
    """
    if n < 8:
        raise ValueError("n must be >= 8")
    if scale <= 0:
        raise ValueError("scale must be positive")
    xg, wg = _gl(n)
    t = 0.5 * xg + 0.5
    wt = 0.5 * wg
    x = scale * t / (1.0 - t)
    w = wt * scale / (1.0 - t) ** 2

    def rebuild(m: int) -> Quadrature:
        return halfline_quadrature(max(8, m), scale)

    return Quadrature(nodes=x, weights=w, truncation_radius=float(x.max()),
                      n_per_segment=n, rebuild=rebuild)


# ---------------------------------------------------------------------------
# audits
# ---------------------------------------------------------------------------

def pole_clearance(q: Quadrature, poles: Sequence[complex]) -> float:
    """Minimum distance from quadrature nodes to a pole list (reported)."""
    if len(poles) == 0:
        return math.inf
    p = np.asarray(poles, dtype=complex)
    return float(np.min(np.abs(q.nodes[:, None] - p[None, :])))


def truncation_radius_for(envelope: Callable[[np.ndarray], np.ndarray],
                          anchor: complex, direction: complex,
                          r_max: float = 200.0, rel_floor: float = 1e-14) -> float:
    """Radius along anchor + r*direction where `envelope` falls below
    rel_floor of its maximum (scanned on a geometric grid)."""
    r = np.geomspace(1e-3, r_max, 400)
    vals = np.abs(envelope(anchor + r * direction / abs(direction)))
    peak = np.max(vals)
    if peak == 0.0 or not np.isfinite(peak):
        return r_max
    keep = np.nonzero(vals > rel_floor * peak)[0]
    if keep.size == 0:
        return float(r[0])
    return float(r[min(keep[-1] + 1, r.size - 1)])
