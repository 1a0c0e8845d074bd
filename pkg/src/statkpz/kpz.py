"""Continuum kernels for the stationary KPZ formulas.

Everything lives on two vertical lines Re w = -1/(4 sigma), Re z = +1/(4 sigma)
(bumped inward for K_{b,beta} so they cross between the Gamma poles b/sigma
and beta/sigma) and on the positive half-line:

  Kbar_{b,beta}(x,y) = (2 pi i)^{-2} int dw int dz
      [sigma pi S^{sigma(z-w)} / sin(sigma pi (z-w))]
      e^{z^3/3 - z y} / e^{w^3/3 - w x}
      Gamma(beta - sigma z)/Gamma(sigma z - b) Gamma(sigma w - b)/Gamma(beta - sigma w)

  q_{u,v}(x), r_s(x) = e^{s^3/(3 sigma^3) - s x/sigma},

  Xi(S,b,sigma) = -det(Id - Kbar_b) [ b^2/sigma^2 + sigma(2 gamma_E + ln S)
      + <(Id-Kbar)^{-1}(Kbar r_{-b} + q_b), r_b>
      + <(Id-Kbar)^{-1}(r_{-b} + q_b), q_{-b}> ].

Scalar products against the non-L2 factors r_{+-b} are evaluated through the
contour representation (the x-integrals against e^{w x} are geometric and done
in closed form), and the resolvent is paired with Kbar^T r_b so every
half-line integrand decays at rate 1/(4 sigma) or faster.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import contours as ct
from .specfun import EULER_GAMMA, DomainError, airy_ai, gamma_ratio_sym, lngamma

__all__ = [
    "KpzParams",
    "BoundaryFunctions",
    "kernel_bar",
    "kernel_kbbeta",
    "det_two_sided",
    "boundary_functions",
    "airy_pert",
    "kbar_spectral_form",
    "xi",
    "xi_result",
    "XiResult",
    "norm_check",
]


@dataclass(frozen=True)
class KpzParams:
    """Continuum parameters; sigma = (2/T)^(1/3), effective drifts b + X/T."""

    T: float
    X: float = 0.0
    b: float = 0.0
    beta: float = 0.0
    S: complex = 1.0

    def __post_init__(self):
        if self.T <= 0:
            raise DomainError("T must be positive")
        if complex(self.S).real <= 0:
            raise DomainError("Re S must be positive")
        if self.beta < self.b:
            raise DomainError("need beta >= b")

    @property
    def sigma(self) -> float:
        return (2.0 / self.T) ** (1.0 / 3.0)

    @property
    def b_eff(self) -> float:
        return self.b + self.X / self.T

    @property
    def beta_eff(self) -> float:
        return self.beta + self.X / self.T


def _vline_quad(x0: float, sigma: float, n: int = 12, markers=(), bumps=None,
                extra_span: float = 0.0) -> ct.Quadrature:
    """Quadrature on a vertical line (optionally with a rectangular bump
    crossing the real axis at a prescribed abscissa) for cubic-exponential
    kernels: |e^{+-z^3/3}| decays like e^{-|x0| y^2} off the real axis."""
    rate = max(abs(x0), 1e-2)
    y_max = math.sqrt(50.0 / rate) + extra_span
    if bumps is None:
        cont = ct.Contour(segments=ct.vertical_line(x0, y_max).segments,
                          markers=tuple(markers))
    else:
        xc, r = bumps  # crossing abscissa and half-height
        segs = (
            ct.Segment(complex(x0, -y_max), complex(x0, -r)),
            ct.Segment(complex(x0, -r), complex(xc, -r)),
            ct.Segment(complex(xc, -r), complex(xc, r)),
            ct.Segment(complex(xc, r), complex(x0, r)),
            ct.Segment(complex(x0, r), complex(x0, y_max)),
        )
        cont = ct.Contour(segments=segs, markers=tuple(markers))
    return ct.build_quadrature(cont, n, panel_max=max(0.4, y_max / 20.0))


class _BarKernel:
    """Kbar_{b,beta} (vertical lines) or K_{b,beta} (bumped contours when
    crossings are prescribed), with the S-independent factor cached."""

    def __init__(self, b: float, beta: float, S: complex, sigma: float,
                 n: int = 12, crossings: tuple | None = None):
        self.b, self.beta, self.S, self.sigma = b, beta, complex(S), sigma
        x_w, x_z = -1.0 / (4 * sigma), 1.0 / (4 * sigma)
        mk_w = [complex(b / sigma, 0.0), complex((b - 1) / sigma, 0.0)]
        mk_z = [complex(beta / sigma, 0.0), complex((beta + 1) / sigma, 0.0)]
        if crossings is None:
            self.wq = _vline_quad(x_w, sigma, n, markers=mk_w)
            self.zq = _vline_quad(x_z, sigma, n, markers=mk_z)
        else:
            (cw, cz, r) = crossings
            bump_w = None if abs(cw - x_w) < 1e-12 else (cw, r)
            bump_z = None if abs(cz - x_z) < 1e-12 else (cz, r)
            self.wq = _vline_quad(x_w, sigma, n, markers=mk_w, bumps=bump_w)
            self.zq = _vline_quad(x_z, sigma, n, markers=mk_z, bumps=bump_z)
        w = self.wq.nodes
        z = self.zq.nodes
        dzw = sigma * (z[None, :] - w[:, None])
        sine = np.sin(math.pi * dzw)
        if np.min(np.abs(sine)) < 1e-12:
            raise ct.GeometryError("sine factor degenerates: contours collide")
        if b == beta:
            gz = gamma_ratio_sym(b - sigma * z)          # Gamma(b-sz)/Gamma(sz-b)
            gw = gamma_ratio_sym(sigma * w - b)          # Gamma(sw-b)/Gamma(b-sw)
        else:
            gz = np.exp(lngamma(beta - sigma * z) - lngamma(sigma * z - b))
            gw = np.exp(lngamma(sigma * w - b) - lngamma(beta - sigma * w))
        cube = np.exp(z ** 3 / 3.0)[None, :] * np.exp(-w ** 3 / 3.0)[:, None]
        self._G = (sigma * math.pi / sine) * cube * gw[:, None] * gz[None, :]
        self._C = self._G * np.exp(dzw * np.log(self.S))
        # weights folded on both sides
        self._CW = self.wq.weights[:, None] * self._C * self.zq.weights[None, :]

    def matrix(self, xs, ys, tilt_row: float = 0.0, tilt_col: float = 0.0) -> np.ndarray:
        """K(x,y) e^{tilt_row x} e^{tilt_col y}: tilts fold into the contour
        exponents so balanced matrices never form inf*0 products."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        Ew = np.exp(np.multiply.outer(xs, self.wq.nodes + tilt_row))   # (nx, nw)
        Ez = np.exp(np.multiply.outer(ys, -self.zq.nodes + tilt_col))  # (ny, nz)
        return Ew @ self._CW @ Ez.T

    # --- contour-exact applications against r_{+-b} ------------------------
    def apply_r_minus(self, xs, tilt: float = 0.0) -> np.ndarray:
        """(Kbar r_{-b})(x) e^{tilt x} = e^{-b^3/3s^3} int int C(w,z) e^{(w+tilt)x} / (z - b/s)."""
        s = self.sigma
        vec = self._CW @ (1.0 / (self.zq.nodes - self.b / s))
        Ew = np.exp(np.multiply.outer(np.asarray(xs, float), self.wq.nodes + tilt))
        return math.exp(-self.b ** 3 / (3 * s ** 3)) * (Ew @ vec)

    def apply_adj_r_plus(self, xs) -> np.ndarray:
        """(Kbar^T r_b)(x) = e^{b^3/3s^3} int int C(w,z) e^{-zx} / (b/s - w)."""
        s = self.sigma
        vec = (1.0 / (self.b / s - self.wq.nodes)) @ self._CW
        Ez = np.exp(np.multiply.outer(-np.asarray(xs, float), self.zq.nodes))
        return math.exp(self.b ** 3 / (3 * s ** 3)) * (Ez @ vec)

    def inner_r_minus_r_plus(self) -> complex:
        """<Kbar r_{-b}, r_b> = int int C(w,z) / ((b/s - w)(z - b/s))."""
        s = self.sigma
        left = 1.0 / (self.b / s - self.wq.nodes)
        right = 1.0 / (self.zq.nodes - self.b / s)
        return complex(left @ self._CW @ right)

    def apply_q(self, qfun_wamp, xs) -> np.ndarray:
        """(Kbar q)(x) where q(y) = int dw' A(w') e^{w' y}: the y-integral is
        geometric, giving int int int C(w,z) A(w') e^{wx} / (z - w')."""
        amps, wnodes = qfun_wamp
        vec = self._CW @ (1.0 / (self.zq.nodes[:, None] - wnodes[None, :]) @ amps)
        Ew = np.exp(np.multiply.outer(np.asarray(xs, float), self.wq.nodes))
        return Ew @ vec


class _QFunction:
    """q_{u,v} via the w-line (e^{+wx}) or z-line (e^{-zx}) representation."""

    def __init__(self, u: float, v: float, S: complex, sigma: float,
                 rep: str = "w", n: int = 12):
        self.u, self.v, self.S, self.sigma, self.rep = u, v, complex(S), sigma, rep
        if rep == "w":
            q = _vline_quad(-1.0 / (4 * sigma), sigma, n,
                            markers=[complex(u / sigma, 0.0), complex((u - 1) / sigma, 0.0)])
            w = q.nodes
            amp = (sigma * math.pi * np.exp((v - sigma * w) * np.log(self.S))
                   / np.sin(math.pi * (v - sigma * w))
                   * np.exp(-w ** 3 / 3.0))
            if u == v:
                amp = amp * gamma_ratio_sym(sigma * w - u)
            else:
                amp = amp * np.exp(lngamma(sigma * w - u) - lngamma(v - sigma * w))
        else:
            q = _vline_quad(1.0 / (4 * sigma), sigma, n,
                            markers=[complex(-u / sigma, 0.0), complex((1 - u) / sigma, 0.0)])
            w = q.nodes
            amp = (sigma * math.pi * np.exp((sigma * w + v) * np.log(self.S))
                   / np.sin(math.pi * (sigma * w + v))
                   * np.exp(w ** 3 / 3.0))
            if u == -v:
                amp = amp * (1.0 / gamma_ratio_sym(sigma * w + v))
            else:
                amp = amp * np.exp(lngamma(-u - sigma * w) - lngamma(sigma * w + v))
        self.nodes = w
        self.amps = amp * q.weights

    def __call__(self, xs, tilt: float = 0.0) -> np.ndarray:
        """q(x) e^{tilt x}, the tilt folded into the contour exponent."""
        xs = np.asarray(xs, dtype=float)
        nodes = self.nodes if self.rep == "w" else -self.nodes
        E = np.exp(np.multiply.outer(xs, nodes + tilt))
        return E @ self.amps

    def inner_exp(self, c: float) -> complex:
        """int_0^infty q(x) e^{c x} dx (geometric in x; converges when the
        node exponents keep negative real part after the shift)."""
        if self.rep == "w":
            denom = -(self.nodes + c)
        else:
            denom = self.nodes - c
        if np.min(np.real(denom)) <= 0:
            raise ArithmeticError("inner_exp: x-integral does not converge")
        return complex(self.amps @ (1.0 / denom))


def r_function(s: float, sigma: float):
    """r_s(x) = exp(s^3/(3 sigma^3) - s x / sigma)."""
    def r(x):
        return np.exp(s ** 3 / (3 * sigma ** 3) - s * np.asarray(x, float) / sigma)
    return r


@dataclass
class BoundaryFunctions:
    q_plus: object    # q_{b,b}
    q_minus: object   # q_{-b,-b}
    r_plus: object    # r_b
    r_minus: object   # r_{-b}
    rep_mismatch: float


def boundary_functions(b: float, S: complex, sigma: float, n: int = 12,
                       check_points=(0.1, 1.0, 5.0)) -> BoundaryFunctions:
    """q_{b,b}, q_{-b,-b} (both integral representations cross-checked) and
    the closed-form r_{+-b}."""
    if not (-0.25 < b < 0.25):
        raise DomainError("need b in (-1/4, 1/4)")
    qp_w = _QFunction(b, b, S, sigma, rep="w", n=n)
    qp_z = _QFunction(b, b, S, sigma, rep="z", n=n)
    qm_w = _QFunction(-b, -b, S, sigma, rep="w", n=n)
    qm_z = _QFunction(-b, -b, S, sigma, rep="z", n=n)
    pts = np.asarray(check_points, dtype=float)
    mismatch = max(
        float(np.max(np.abs(qp_w(pts) - qp_z(pts)))),
        float(np.max(np.abs(qm_w(pts) - qm_z(pts)))),
    )
    if mismatch > 1e-9:
        raise ArithmeticError(
            f"q_(u,v) representations disagree by {mismatch:.2e} (quadrature failure)")
    return BoundaryFunctions(q_plus=qp_w, q_minus=qm_w,
                             r_plus=r_function(b, sigma), r_minus=r_function(-b, sigma),
                             rep_mismatch=mismatch)


def kernel_bar(b: float, S: complex, sigma: float, n: int = 12):
    """KernelHandle for Kbar_{b,b} on R_+ x R_+."""
    from .fredholm import KernelHandle

    if not (-0.25 < b < 0.25):
        raise DomainError("need b in (-1/4, 1/4)")
    bar = _BarKernel(b, b, S, sigma, n=n)
    return KernelHandle(
        eval=lambda x, y: complex(bar.matrix([float(np.real(x))], [float(np.real(y))])[0, 0]),
        eval_matrix=lambda xs, ys: bar.matrix(np.real(xs), np.real(ys)),
    )


def kernel_kbbeta(p: KpzParams, n: int = 12):
    """KernelHandle for K_{b,beta} with the crossing prescription: contours
    cross the real axis at (2b+beta)/(3 sigma) and (b+2 beta)/(3 sigma) when
    the lines -+1/(4 sigma) do not already pass between the poles."""
    from .fredholm import KernelHandle

    bar = _kbbeta_bar(p, n)
    return KernelHandle(
        eval=lambda x, y: complex(bar.matrix([float(np.real(x))], [float(np.real(y))])[0, 0]),
        eval_matrix=lambda xs, ys: bar.matrix(np.real(xs), np.real(ys)),
    )


def _halfline(sigma: float, n: int = 320) -> ct.Quadrature:
    return ct.halfline_quadrature(n=n, scale=4.0 * sigma)


def _kbbeta_bar(p: KpzParams, n: int) -> _BarKernel:
    b, beta, sigma = p.b_eff, p.beta_eff, p.sigma
    if beta - b < 1e-4:
        raise ct.GeometryError("beta - b below the 1e-4 collision floor; use xi")
    x_w, x_z = -1.0 / (4 * sigma), 1.0 / (4 * sigma)
    cw = x_w if b < -0.25 < beta else (2 * b + beta) / (3 * sigma)
    cz = x_z if b < 0.25 < beta else (b + 2 * beta) / (3 * sigma)
    r = min(1.0 / (8 * sigma), (beta - b) / (3 * sigma))
    return _BarKernel(b, beta, p.S, sigma, n=n, crossings=(cw, cz, r))


def det_two_sided(p: KpzParams, n_half: int = 240, n_line: int = 12) -> float:
    """Gamma(beta-b) det(Id - K_{b+X/T, beta+X/T}) on L2(R_+).

    The Nystrom matrix is conjugated by diag(e^{-c x_i}) with c between the
    rightmost w-node and leftmost z-node, so the kernel's e^{c_w x} row
    growth (an artifact of the bumped contour) never overflows; the
    determinant is invariant under the similarity.
    """
    bar = _kbbeta_bar(p, n_line)
    c = 0.5 * (float(np.max(np.real(bar.wq.nodes))) + float(np.min(np.real(bar.zq.nodes))))
    q = _halfline(p.sigma, n_half)
    xs = np.real(q.nodes)
    ws = q.weights
    M = bar.matrix(xs, xs, tilt_row=-c, tilt_col=c) * ws[None, :]
    if not np.all(np.isfinite(M)):
        raise ArithmeticError("balanced K_{b,beta} matrix not finite")
    det = complex(np.linalg.det(np.eye(len(xs)) - M))
    gam = np.exp(lngamma(p.beta_eff - p.b_eff))
    val = complex(gam) * det
    if abs(val.imag) > 1e-6 * max(1.0, abs(val.real)):
        raise ArithmeticError(f"det_two_sided has imaginary residue: {val}")
    return float(val.real)


# ---------------------------------------------------------------------------
# perturbed Airy function and the spectral form of Kbar
# ---------------------------------------------------------------------------

def airy_pert(x, b: float, sigma: float, n: int = 20):
    """Ai^pert(x,b,sigma) = (2 pi i)^{-1} int_{delta+iR} e^{z^3/3-zx}
    Gamma(-sigma z + b)/Gamma(sigma z - b) dz, 0 < delta < (b+1)/sigma.

    The Gamma ratio is evaluated as -Gamma(1-sigma z+b)/Gamma(1+sigma z-b),
    regular at sigma z = b.  delta adapts to sqrt(x) (saddle) within the
    allowed window; for x <= 0 a small delta avoids cancellation.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x).astype(float)
    out = np.empty_like(x)
    dmax = 0.9 * (b + 1.0) / sigma
    if dmax <= 0:
        raise DomainError("need (b+1)/sigma > 0")
    edges = [-np.inf, -24.0, -10.0, -3.0, 2.0, 8.0, 18.0, 32.0, np.inf]
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (x > lo) & (x <= hi)
        if not m.any():
            continue
        xm = x[m]
        delta = min(dmax, max(0.6, math.sqrt(max(float(xm.max()), 0.0))))
        xmin = float(xm.min())
        ymax = math.sqrt(50.0 / delta) + (math.sqrt(-xmin / delta) if xmin < 0 else 0.0)
        # phase y^3/3 + |x| y oscillates at frequency up to ymax^2 + |x|;
        # keep ~n/3 oscillation periods per panel
        freq = ymax ** 2 + max(0.0, -xmin) + 1.0
        pmax = max(min(0.5, (n / 3.0) * 2.0 * math.pi / freq), 0.02)
        q = ct.build_quadrature(ct.vertical_line(delta, ymax), n, panel_max=pmax)
        z = q.nodes
        amp = q.weights * np.exp(z ** 3 / 3.0) / gamma_ratio_sym(sigma * z - b)
        E = np.exp(np.multiply.outer(-xm, z))
        vals = E @ amp
        out[m] = np.real(vals)
    return float(out[0]) if scalar else out


def kbar_spectral_form(b: float, S: float, sigma: float, x: float, y: float,
                       n_lambda: int = 700, check: bool = True,
                       check_tol: float = 1e-6) -> float:
    """Kbar_{b,b}(x,y) = int dlambda S/(S + e^{-lambda/sigma})
    Ai^pert(x+lambda,-b,sigma) Ai^pert(y+lambda,b,sigma).

    Truncation: the Fermi factor decays like S e^{lambda/sigma} to the left,
    the Airy factors superexponentially to the right.
    """
    if S <= 0:
        raise DomainError("spectral form needs real S > 0")
    lam_lo = -sigma * (45.0 + abs(math.log(S)))
    lam_hi = 16.0 + max(0.0, -min(x, y))
    xg, wg = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(lam_lo, lam_hi, max(8, n_lambda // 16) + 1)
    lam = np.concatenate([0.5 * (bb - aa) * xg + 0.5 * (aa + bb) for aa, bb in zip(edges[:-1], edges[1:])])
    wl = np.concatenate([0.5 * (bb - aa) * wg for aa, bb in zip(edges[:-1], edges[1:])])
    fermi = S / (S + np.exp(-lam / sigma))
    val = float(np.sum(wl * fermi * airy_pert(x + lam, -b, sigma) * airy_pert(y + lam, b, sigma)))
    if check:
        direct = float(np.real(_BarKernel(b, b, S, sigma).matrix([x], [y])[0, 0]))
        if abs(val - direct) > check_tol:
            raise ArithmeticError(
                f"spectral and contour forms of Kbar disagree: {val} vs {direct}")
    return val


# ---------------------------------------------------------------------------
# Xi and the operator-norm audit
# ---------------------------------------------------------------------------

@dataclass
class XiResult:
    xi: float
    det_bar: float
    bracket: float
    xi_det_form: float
    n_half: int
    mismatch: float


def xi_result(S, b: float, sigma: float, n_half: int = 320, n_line: int = 12,
              cross_check: bool = True) -> XiResult:
    """Xi(S,b,sigma) by the scalar-product form, cross-checked against the
    three-determinant rewrite (both on the same Nystrom grid)."""
    if not (-0.25 < b < 0.25):
        raise DomainError("need b in (-1/4, 1/4)")
    S = float(S) if not isinstance(S, complex) else S
    if isinstance(S, complex):
        if S.imag != 0.0:
            raise DomainError("xi is defined here for real positive S")
        S = S.real
    if S <= 0:
        raise DomainError("xi needs S > 0")
    sigma = float(sigma)
    bar = _BarKernel(b, b, S, sigma, n=n_line)
    bf = boundary_functions(b, S, sigma, n=n_line)
    hq = _halfline(sigma, n_half)
    xs = np.real(hq.nodes)
    ws = np.real(hq.weights)

    Kw = np.real(bar.matrix(xs, xs)) * ws[None, :]
    eye = np.eye(len(xs))
    det_bar = float(np.linalg.det(eye - Kw))
    if abs(det_bar) < 1e-8:
        raise ArithmeticError("Id - Kbar numerically singular")

    q_b = np.real(bf.q_plus(xs))
    q_mb = np.real(bf.q_minus(xs))
    kr_minus = np.real(bar.apply_r_minus(xs))        # Kbar r_{-b}
    kT_r_plus = np.real(bar.apply_adj_r_plus(xs))    # Kbar^T r_b
    kq_b = np.real(bar.apply_q((bf.q_plus.amps, bf.q_plus.nodes), xs))  # Kbar q_b

    # contour-exact scalar products against r_{+-b}
    s3 = sigma ** 3
    ip_krm_rb = float(np.real(bar.inner_r_minus_r_plus()))
    ip_qb_rb = float(np.real(math.exp(b ** 3 / (3 * s3)) * bf.q_plus.inner_exp(-b / sigma)))
    ip_rm_qmb = float(np.real(math.exp(-b ** 3 / (3 * s3)) * bf.q_minus.inner_exp(b / sigma)))
    ip_qb_qmb = float(np.real(_inner_qq(bf.q_plus, _QFunction(-b, -b, S, sigma, rep="z", n=n_line))))

    A = eye - Kw
    sol3 = np.linalg.solve(A, kr_minus + q_b)
    term3 = (ip_krm_rb + ip_qb_rb) + float(sol3 @ (kT_r_plus * ws))
    sol4 = np.linalg.solve(A, kr_minus + kq_b)
    term4 = (ip_rm_qmb + ip_qb_qmb) + float(sol4 @ (q_mb * ws))

    lnS = math.log(S)
    bracket = b ** 2 / sigma ** 2 + sigma * (2.0 * EULER_GAMMA + lnS) + term3 + term4
    xi_val = -det_bar * bracket

    mismatch = math.nan
    xi_det = math.nan
    if cross_check:
        # determinant-combination rewrite.  Each rank-one determinant is
        # conjugated by diag(e^{c x_i}) with c chosen so that both rank-one
        # factors and both kernel directions decay at the matched rate
        # (1/4 +- b)/(2 sigma); tilts fold into the contour exponents so no
        # inf*0 products can form.
        c1 = (b - 0.25) / (2.0 * sigma)
        M1 = np.real(bar.matrix(xs, xs, tilt_row=-c1, tilt_col=c1)) * ws[None, :]
        f1 = np.real(bar.apply_r_minus(xs, tilt=-c1) + bf.q_plus(xs, tilt=-c1))
        g1 = math.exp(b ** 3 / (3 * s3)) * np.exp((c1 - b / sigma) * xs)
        d1 = float(np.linalg.det(eye - M1 - np.outer(f1, g1 * ws)))
        c2 = (b + 0.25) / (2.0 * sigma)
        M2 = np.real(bar.matrix(xs, xs, tilt_row=-c2, tilt_col=c2)) * ws[None, :]
        f2 = math.exp(-b ** 3 / (3 * s3)) * np.exp((b / sigma - c2) * xs) \
            + np.real(bf.q_plus(xs, tilt=-c2))
        g2 = np.real(bf.q_minus(xs, tilt=c2))
        d2 = float(np.linalg.det(eye - M2 - np.outer(f2, g2 * ws)))
        xi_det = d1 + d2 - det_bar * (2.0 + b ** 2 / sigma ** 2
                                      + sigma * (2.0 * EULER_GAMMA + lnS))
        mismatch = abs(xi_det - xi_val)
        # The determinant route evaluates the r_b pairings on the grid, whose
        # integrand decays only at (1/4-|b|)/sigma while oscillating; past
        # |b| ~ 0.15 no fixed half-line rule resolves that tail, so the check
        # is reported rather than asserted there (the beta->b extrapolation
        # provides the independent validation instead).
        tol = 1e-7 if abs(b) <= 0.15 else 1e-2
        if mismatch > tol * max(1.0, abs(xi_val)):
            raise ArithmeticError(
                f"Xi forms disagree: scalar {xi_val} vs determinant {xi_det}")
    return XiResult(xi=float(xi_val), det_bar=det_bar, bracket=bracket,
                    xi_det_form=xi_det, n_half=len(xs), mismatch=mismatch)


def _inner_qq(q_w: _QFunction, q_z: _QFunction) -> complex:
    """<q1, q2> with q1 in the w-representation and q2 in the z-representation:
    int_0^infty e^{(w-z)x} dx = 1/(z-w)."""
    denom = q_z.nodes[:, None] - q_w.nodes[None, :]
    return complex(q_z.amps @ (1.0 / denom) @ q_w.amps)


def xi(S, b: float, sigma: float, n_half: int = 320, n_line: int = 12) -> float:
    return xi_result(S, b, sigma, n_half=n_half, n_line=n_line).xi


def norm_check(b: float, S, sigma: float, n_half: int = 320, n_line: int = 12,
               iters: int = 60) -> float:
    """Power-iteration estimate of ||P_0 Kbar_{b,b} P_0|| on L2(R_+); < 1."""
    bar = _BarKernel(b, b, S, sigma, n=n_line)
    hq = _halfline(sigma, n_half)
    xs = np.real(hq.nodes)
    ws = np.real(hq.weights)
    A = np.sqrt(ws)[:, None] * np.real(bar.matrix(xs, xs)) * np.sqrt(ws)[None, :]
    rng = np.random.default_rng(7)
    v = rng.standard_normal(len(xs))
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        v = A.T @ (A @ v)
        nv = np.linalg.norm(v)
        if nv == 0:
            return 0.0
        est = math.sqrt(nv)
        v /= nv
    return est
