"""q-Whittaker moment formulas and the e_q-Laplace Fredholm determinant.

Implements, for the measure on partitions specified by (a~, alpha~, beta~,
gamma~, q):

* the explicit N = 1 marginal pmf (from the generating series of the
  specialization) and brute-force moment sums,
* the k-fold nested contour integral for E[q^{-k lambda_1}] (k <= 3),
* the Fredholm determinant representing E[1/(zeta q^{-lambda_1}; q)_inf]
  on the right-opening wedge contour, with the notched Mellin-Barnes
  s-contour rebuilt per w-node,
* the closed form of that expectation under a pure single-beta
  specialization (lambda is then a single column), used as an oracle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import contours as ct
from . import fredholm as fr
from .specfun import DomainError, q_pochhammer

__all__ = [
    "QParams",
    "QWhittakerSpec",
    "FinitenessError",
    "qw_pmf_n1",
    "qw_pmf_n1_general",
    "qw_moment_bruteforce_n1",
    "qw_moment_contour",
    "qw_laplace_det",
    "qw_pure_beta_closed",
    "pure_beta_column_weights",
]

ETA = 1.2  # nested-contour spacing exponent; the formulas need only eta > 1


class FinitenessError(ArithmeticError):
    """The requested moment is infinite (divergence condition holds)."""


@dataclass(frozen=True)
class QParams:
    q: float

    def __post_init__(self):
        if not (0.0 < self.q < 1.0):
            raise DomainError("q must lie strictly in (0,1)")


@dataclass(frozen=True)
class QWhittakerSpec:
    a_tilde: tuple
    qp: QParams
    alpha_tilde: tuple = ()
    beta_tilde: tuple = ()
    gamma_tilde: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.a_tilde, dtype=float)
        al = np.asarray(self.alpha_tilde, dtype=float)
        be = np.asarray(self.beta_tilde, dtype=float)
        if np.any(a <= 0):
            raise DomainError("a~ entries must be positive")
        if np.any(al < 0) or np.any(be < 0) or self.gamma_tilde < 0:
            raise DomainError("specialization parameters must be non-negative")
        if al.size and al.max() * a.max() >= 1.0:
            raise DomainError("need max(alpha~) * max(a~) < 1")
        if be.size and be.max() >= 1.0 / a.max():
            raise DomainError("need max(beta~) < min(1/a~)")

    @property
    def n(self):
        return len(self.a_tilde)


# ---------------------------------------------------------------------------
# N = 1 marginals and brute-force moments (oracles)
# ---------------------------------------------------------------------------

def qw_pmf_n1(lambda1: int, a1: float, alpha1: float, qp: QParams) -> float:
    """P(lambda_1 = l) for N = 1 under the pure single-alpha specialization:
    (a1 alpha1)^l (a1 alpha1; q)_inf / (q; q)_l."""
    if lambda1 < 0:
        return 0.0
    c = a1 * alpha1
    if c >= 1.0:
        raise FinitenessError("a1*alpha1 >= 1: measure not normalizable")
    q = qp.q
    return float(
        c ** lambda1
        * q_pochhammer(c, q).real
        / q_pochhammer(q, q, lambda1).real
    )


def _series_coefficients(spec: QWhittakerSpec, nmax: int) -> np.ndarray:
    """g_n of the specialization: coefficients of
    e^{gamma u} prod_i (1 + beta_i u) / (alpha_i u; q)_inf up to u^nmax."""
    q = spec.qp.q
    g = np.zeros(nmax + 1)
    g[0] = 1.0
    # e^{gamma u}
    if spec.gamma_tilde > 0:
        ex = np.empty(nmax + 1)
        ex[0] = 1.0
        for n in range(1, nmax + 1):
            ex[n] = ex[n - 1] * spec.gamma_tilde / n
        g = np.convolve(g, ex)[: nmax + 1]
    for b in spec.beta_tilde:
        g = np.convolve(g, [1.0, b])[: nmax + 1]
    for al in spec.alpha_tilde:
        # 1/(alpha u; q)_inf = sum_n alpha^n u^n / (q;q)_n
        poch = np.array([q_pochhammer(q, q, n).real for n in range(nmax + 1)])
        g = np.convolve(g, al ** np.arange(nmax + 1) / poch)[: nmax + 1]
    return g


def qw_pmf_n1_general(lambda_max: int, a1: float, spec: QWhittakerSpec) -> np.ndarray:
    """N = 1 pmf vector P(lambda = 0..lambda_max) for a general specialization,
    built from the generating-series coefficients; the normalization
    Pi(a1; rho) is summed from the same series so the vector is consistent."""
    g = _series_coefficients(spec, lambda_max)
    w = a1 ** np.arange(lambda_max + 1) * g
    # normalization Pi(a1; rho) in closed form
    q = spec.qp.q
    z = math.exp(spec.gamma_tilde * a1)
    for b in spec.beta_tilde:
        z *= 1.0 + b * a1
    for al in spec.alpha_tilde:
        z /= q_pochhammer(al * a1, q).real
    return w / z


def qw_moment_bruteforce_n1(k: int, a1: float, alpha1: float, qp: QParams,
                            cutoff: int | None = None) -> float:
    """E[q^{-k lambda_1}] for N = 1 pure-alpha by direct summation.

    Requires a1*alpha1 < q^k (else the moment is infinite and we raise).
    The summand is bounded by a geometric sequence with ratio
    a1*alpha1*q^{-k} < 1, giving a rigorous tail bound kept below 1e-12.
    """
    q = qp.q
    c = a1 * alpha1
    if c >= q ** k:
        raise FinitenessError(f"moment k={k} diverges: a1*alpha1 >= q^k")
    ratio = c * q ** (-k)
    if cutoff is None:
        # term(l) <= (c q^-k)^l (c;q)_inf / (q;q)_inf; geometric tail
        head = q_pochhammer(c, q).real / q_pochhammer(q, q).real
        cutoff = 20
        while head * ratio ** (cutoff + 1) / (1 - ratio) > 1e-13 and cutoff < 100000:
            cutoff *= 2
    total = 0.0
    for l in range(cutoff + 1):
        total += q ** (-k * l) * qw_pmf_n1(l, a1, alpha1, qp)
    tail = q ** (-k * cutoff) * qw_pmf_n1(cutoff, a1, alpha1, qp) * ratio / (1 - ratio)
    if tail > 1e-12 * max(total, 1.0):
        raise ArithmeticError("brute-force cutoff too small for 1e-12 tail bound")
    return total


# ---------------------------------------------------------------------------
# nested contour moments
# ---------------------------------------------------------------------------

def _g_ratio(z: np.ndarray, spec: QWhittakerSpec) -> np.ndarray:
    """g(z)/g(q z) in closed product form (poles at 1/a~_n and alpha~_i/q):

    prod_n 1/(1 - a_n z) * e^{-gamma (1-q)/(q z)}
      * prod_i 1/(1 - alpha_i/(q z)) * prod_i (q z + beta_i)/(q (z + beta_i)).
    """
    q = spec.qp.q
    out = np.ones_like(z, dtype=complex)
    for an in spec.a_tilde:
        out = out / (1.0 - an * z)
    if spec.gamma_tilde:
        # g carries exp(-gamma/z) (from 1/Pi(z^{-1}; rho)); the ratio is then
        # exp(+gamma (1-q)/(q z)), which the Poisson-marginal oracle confirms
        out = out * np.exp(spec.gamma_tilde * (1.0 - q) / (q * z))
    for al in spec.alpha_tilde:
        out = out / (1.0 - al / (q * z))
    for be in spec.beta_tilde:
        out = out * (q * z + be) / (q * (z + be))
    return out


def _moment_contour_quadrature(k: int, spec: QWhittakerSpec, phi: float,
                               n_per_segment: int, truncation: float):
    """Nested wedges with apexes c q^{eta (k-i)}, innermost first.

    Inner contours get progressively steeper opening angles so the
    cross-factor pole sheets z_A = q z_B (which sit at constant distance from
    equally-angled scaled copies all the way to infinity) instead recede
    linearly; the deformation from the equal-angle family crosses no poles.
    """
    q = spec.qp.q
    a = np.asarray(spec.a_tilde, dtype=float)
    al = np.asarray(spec.alpha_tilde, dtype=float)
    amax = al.max() if al.size else 0.0
    lo = q ** (-ETA * k) * amax
    hi = 1.0 / a.max()
    if lo >= hi:
        raise FinitenessError(
            f"no contour exists for k={k}: max(a~ alpha~) >= q^(eta k)")
    c = math.sqrt(lo * hi) if lo > 0 else hi / 2.0
    dphi = min(0.15, (math.pi / 2 - phi) / max(k - 1, 1)) if k > 1 else 0.0
    apexes = [c * q ** (ETA * (k - i)) for i in range(1, k + 1)]
    quads = []
    for i in range(1, k + 1):
        phi_i = phi + (k - i) * dphi
        scale = q ** (ETA * (k - i))
        mk = [complex(q * ap, 0.0) for ap in apexes] + [complex(1.0 / an, 0.0) for an in a]
        w = ct.wedge(complex(apexes[i - 1], 0.0), phi_i, -phi_i, markers=mk)
        quads.append(ct.build_quadrature(w, n_per_segment, truncation * scale))
    return quads


def qw_moment_contour(k: int, spec: QWhittakerSpec, phi: float = math.pi / 3,
                      n_per_segment: int = 24, truncation: float = 1e9) -> float:
    """E[q^{-k lambda_1^{(N)}}] by the k-fold nested contour integral, k <= 3.

    Integrand: prod_{A<B} (z_A - z_B)/(z_A - q z_B) prod_i g(z_i)/g(q z_i) / z_i
    with prefactor (-1)^k q^{k(k-1)/2}; contours are scaled wedges with
    decreasing imaginary part and spacing ratio q^eta.
    """
    if not (1 <= k <= 3):
        raise DomainError("k must be 1, 2 or 3")
    q = spec.qp.q
    quads = _moment_contour_quadrature(k, spec, phi, n_per_segment, truncation)
    fw = [
        _g_ratio(qd.nodes, spec) / qd.nodes * qd.weights
        for qd in quads
    ]
    pref = (-1.0) ** k * q ** (k * (k - 1) / 2.0)
    if k == 1:
        val = pref * np.sum(fw[0])
    elif k == 2:
        z1, z2 = quads[0].nodes, quads[1].nodes
        cross = (z1[:, None] - z2[None, :]) / (z1[:, None] - q * z2[None, :])
        val = pref * np.einsum("i,j,ij->", fw[0], fw[1], cross)
    else:
        z1, z2, z3 = (qd.nodes for qd in quads)
        t12 = (z1[:, None] - z2[None, :]) / (z1[:, None] - q * z2[None, :])
        t13 = (z1[:, None] - z3[None, :]) / (z1[:, None] - q * z3[None, :])
        t23 = (z2[:, None] - z3[None, :]) / (z2[:, None] - q * z3[None, :])
        val = pref * np.einsum("i,j,l,ij,il,jl->", fw[0], fw[1], fw[2], t12, t13, t23)
    val = complex(val)
    if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
        raise ArithmeticError(f"moment has non-negligible imaginary part: {val}")
    return val.real


# ---------------------------------------------------------------------------
# e_q-Laplace Fredholm determinant
# ---------------------------------------------------------------------------

def _cw_pre_wedge(spec: QWhittakerSpec, phi: float):
    a = np.asarray(spec.a_tilde, dtype=float)
    al = np.asarray(spec.alpha_tilde, dtype=float)
    be = np.asarray(spec.beta_tilde, dtype=float)
    top = max(al.max() if al.size else 0.0, be.max() if be.size else 0.0)
    mu = 0.5 * top + 0.5 * (1.0 / a.max())
    return mu, top, ct.wedge(complex(mu, 0.0), phi, -phi)


def _cs_pre_quadrature(w: complex, spec: QWhittakerSpec, mu: float, top: float,
                       phi: float, n_per_segment: int):
    """Notched Mellin-Barnes contour for the inner s-integral at a given w.

    R is set so the circle traced by q^s w on the vertical tails has radius
    rho0 strictly between max(alpha~, beta~) (enclosing them) and mu (staying
    left of the w-wedge); d shrinks like 1/|w| so the excursion of q^s w to
    radius sqrt(q)|w| stays inside the angular gap below the wedge.
    """
    q = spec.qp.q
    lq = math.log(1.0 / q)
    rho0 = math.sqrt(top * mu) if top > 0 else 0.5 * mu
    R = max(math.log(abs(w) / rho0) / lq, 1.5)
    if abs(R - round(R)) < 0.2:
        R += 0.25 if R - round(R) >= 0 else -0.25
    d = min(0.2, 0.25 * mu * math.sin(phi) * (q ** -0.5 - 1.0) / (lq * max(abs(w), 1.0)))

    # blockers inside (0,1): projections of the g-poles q^s w = alpha_i q^j
    blockers = []
    for al in spec.alpha_tilde:
        if al <= 0:
            continue
        s0 = complex(np.log(al / complex(w)) / math.log(q))  # + j marches right
        for j in range(3):
            sj = s0 + j
            if abs(sj.imag) < 0.5 and -0.5 < sj.real < 1.5:
                blockers.append(sj.real)
    x0 = ct._widest_gap_point(0.0, 1.0, blockers) if blockers else 0.5

    y_trunc = 14.0
    segs = (
        ct.Segment(complex(R, -d - 1.0), complex(R, -d), kind="ray", anchor_is_start=False),
        ct.Segment(complex(R, -d), complex(x0, -d)),
        ct.Segment(complex(x0, -d), complex(x0, d)),
        ct.Segment(complex(x0, d), complex(R, d)),
        ct.Segment(complex(R, d), complex(R, d + 1.0), kind="ray", anchor_is_start=True),
    )
    markers = [complex(j, 0.0) for j in range(0, int(R) + 2)]
    csq = ct.build_quadrature(ct.Contour(segments=segs, markers=tuple(markers)),
                              n_per_segment, truncation=y_trunc)
    return csq


def _laplace_kernel_row(w: complex, wprime: np.ndarray, zeta: complex,
                        spec: QWhittakerSpec, csq) -> np.ndarray:
    q = spec.qp.q
    s = csq.nodes
    qsw = np.exp(s * math.log(q)) * w

    gg = np.ones_like(s, dtype=complex)
    for an, mult in _unique_counts(spec.a_tilde):
        gg = gg * (q_pochhammer(qsw * an, q) / complex(q_pochhammer(w * an, q))) ** mult
    for al, mult in _unique_counts(spec.alpha_tilde):
        gg = gg * (complex(q_pochhammer(al / w, q)) / q_pochhammer(al / qsw, q)) ** mult
    for be, mult in _unique_counts(spec.beta_tilde):
        gg = gg * ((1.0 + be / qsw) / (1.0 + be / w)) ** mult
    if spec.gamma_tilde:
        gg = gg * np.exp(spec.gamma_tilde * (1.0 / qsw - 1.0 / w))

    # Gamma(-s) Gamma(1+s) = -pi / sin(pi s); branch cut of (-zeta)^s on R_+
    gamma_pair = -math.pi / np.sin(math.pi * s)
    zs = np.exp(s * np.log(-zeta))
    amplitude = csq.weights * gamma_pair * zs * gg
    return amplitude @ (1.0 / (qsw[:, None] - wprime[None, :]))


def _unique_counts(vals):
    if not vals:
        return []
    u, c = np.unique(np.asarray(vals, dtype=float), return_counts=True)
    return list(zip(u, c))


def qw_laplace_det(zeta: complex, spec: QWhittakerSpec, phi: float = math.pi / 3,
                   n_w: int = 16, n_s: int = 12, truncation: float = 40.0):
    """det(Id + K_zeta) on the right-opening wedge: equals
    E[1/(zeta q^{-lambda_1^{(N)}}; q)_inf] for zeta off the positive reals.

    N < 9 is allowed but flagged: the determinant identity is only proven for
    N >= 9 (the restriction is believed technical).
    """
    zeta = complex(zeta)
    if zeta.imag == 0.0 and zeta.real >= 0.0:
        raise DomainError("zeta must avoid the branch cut on R_+")
    if spec.n < 9:
        warnings.warn("qw_laplace_det: N < 9 lies outside the proven range of "
                      "the determinant identity", stacklevel=2)
    mu, top, wq_contour = _cw_pre_wedge(spec, phi)
    wq = ct.build_quadrature(wq_contour, n_w, truncation)
    # pole audit: kernel poles in w at a~^{-1} q^{-j} sit inside the wedge
    poles = [1.0 / an * spec.qp.q ** (-j) for an in spec.a_tilde for j in range(4)]
    if ct.pole_clearance(wq, poles) < 1e-3:
        raise ct.GeometryError("w-contour runs too close to a kernel pole")

    nodes = wq.nodes
    # s-contours depend on w only through |w| (via R and d); bucket
    # geometrically and share one quadrature per bucket
    cs_cache: dict[int, object] = {}

    def s_quad(w: complex):
        key = int(round(math.log(max(abs(w), 1e-9)) / 0.1))
        if key not in cs_cache:
            wb = math.exp(0.1 * key + 0.05)  # bucket top: d shrinks with |w|
            cs_cache[key] = _cs_pre_quadrature(complex(wb), spec, mu, top, phi, n_s)
        return cs_cache[key]

    K = np.empty((nodes.size, nodes.size), dtype=complex)
    for i, w in enumerate(nodes):
        K[i, :] = _laplace_kernel_row(w, nodes, zeta, spec, s_quad(w))
    M = K * wq.weights[None, :]
    if not np.all(np.isfinite(M)):
        raise fr.NumericsError("laplace kernel matrix not finite")
    return complex(np.linalg.det(np.eye(nodes.size) + M))


# ---------------------------------------------------------------------------
# pure-beta closed form (oracle)
# ---------------------------------------------------------------------------

def pure_beta_column_weights(a_tilde, beta1: float) -> np.ndarray:
    """P(lambda = 1^m), m = 0..N, under the single-beta specialization.

    The weights e_m(a~) beta1^m / prod_n (1 + beta1 a~_n) are re-derived from
    the Cauchy normalization at construction time: their sum must reproduce
    prod_n (1 + beta1 a~_n) = Pi(a~; rho) to 1e-12 before use.
    """
    a = np.asarray(a_tilde, dtype=float)
    # elementary symmetric polynomials via the coefficients of prod (1 + a_n t)
    coeffs = np.array([1.0])
    for an in a:
        coeffs = np.convolve(coeffs, [1.0, an])
    e_m = coeffs  # e_m(a) = coefficient of t^m
    norm = np.prod(1.0 + beta1 * a)
    w = e_m * beta1 ** np.arange(len(e_m))
    if abs(w.sum() - norm) > 1e-12 * norm:
        raise ArithmeticError("column-weight normalization check failed")
    return w / norm


def qw_pure_beta_closed(zeta: complex, a_tilde, beta1: float, qp: QParams) -> complex:
    """E[1/(zeta q^{-lambda_1}; q)_inf] for the pure single-beta measure.

    lambda is a single column there, so lambda_1 in {0, 1}:
    p0/(zeta; q)_inf + (1 - p0)/(zeta/q; q)_inf with p0 = P(lambda = empty).
    """
    w = pure_beta_column_weights(a_tilde, beta1)
    p0 = float(w[0])
    q = qp.q
    return p0 / complex(q_pochhammer(zeta, q)) + (1.0 - p0) / complex(
        q_pochhammer(zeta / q, q)
    )
