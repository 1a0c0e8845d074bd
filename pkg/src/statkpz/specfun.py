"""Scalar special functions used by every kernel in the package.

Everything here is self-contained (no scipy.special): complex log-gamma via a
fixed Lanczos rational series with reflection, the digamma family by
recurrence + Bernoulli asymptotics, modified Bessel K through its
cosh-integral representation, the Airy function by a saddle-adapted contour
integral (x > 0) and series/asymptotics (x <= 0), the regularized upper
incomplete gamma, and the q-deformations (q-Pochhammer, q-Gamma, e_q).

All functions accept numpy arrays and broadcast; scalars in give scalars out.
"""

from __future__ import annotations

import math

import numpy as np

EULER_GAMMA = 0.5772156649015328606

__all__ = [
    "EULER_GAMMA",
    "PoleInputError",
    "DomainError",
    "lngamma",
    "gammafn",
    "gamma_ratio_sym",
    "digamma_family",
    "theta_of_kappa",
    "bessel_k",
    "airy_ai",
    "reg_gamma_upper",
    "q_pochhammer",
    "q_gamma",
    "e_q",
    "q_factorial",
    "q_functions",
]


class PoleInputError(ValueError):
    """Argument sits on (or numerically on) a pole of the function."""


class DomainError(ValueError):
    """Argument outside the supported domain."""


# ---------------------------------------------------------------------------
# log-Gamma and the digamma family
# ---------------------------------------------------------------------------

# Lanczos g=7, n=9 coefficients; relative error of exp(lngamma) ~ 1e-13.
_LANCZOS_G = 7.0
_LANCZOS_C = np.array(
    [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ]
)


def _check_nonpositive_integer(z, tol=1e-12):
    z = np.asarray(z)
    re = np.real(z)
    im = np.imag(z)
    near = (np.abs(im) < tol) & (re < 0.5) & (np.abs(re - np.round(re)) < tol)
    if np.any(near):
        raise PoleInputError("argument coincides with a pole at a non-positive integer")


def lngamma(z):
    """Complex log-gamma, exp-consistent branch (principal on Re z >= 0.5).

    Reflection ln Gamma(z) = ln(pi) - ln sin(pi z) - ln Gamma(1-z) is used for
    Re z < 0.5; the branch of the result may differ from the principal one by
    2*pi*i on parts of the left half-plane, which is immaterial for every use
    in this package (ratios raised to integer powers, or exponentiated once).
    """
    z = np.asarray(z, dtype=complex)
    _check_nonpositive_integer(z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)

    refl = np.real(z) < 0.5
    zz = np.where(refl, 1.0 - z, z)

    # Lanczos on Re zz >= 0.5
    x = zz - 1.0
    acc = np.full_like(zz, _LANCZOS_C[0])
    for k in range(1, len(_LANCZOS_C)):
        acc = acc + _LANCZOS_C[k] / (x + k)
    t = x + _LANCZOS_G + 0.5
    val = 0.5 * math.log(2.0 * math.pi) + (x + 0.5) * np.log(t) - t + np.log(acc)

    if np.any(refl):
        # ln Gamma(z) = ln pi - ln sin(pi z) - ln Gamma(1 - z)
        zr = z[refl]
        im = np.imag(zr)
        small = np.abs(im) < 200.0
        logsin = np.empty_like(zr)
        if small.any():
            logsin[small] = np.log(np.sin(math.pi * zr[small]))
        if (~small).any():
            # sin(pi z) = -exp(-i pi z sgn) (1 - e^{2 i pi z sgn}) / (2i sgn)
            zb = zr[~small]
            sgn = np.sign(np.imag(zb))
            logsin[~small] = (
                -1j * math.pi * zb * sgn
                + np.log1p(-np.exp(2j * math.pi * zb * sgn))
                + np.log(0.5j * sgn)
            )
        out[refl] = math.log(math.pi) - logsin - val[refl]
    out[~refl] = val[~refl]
    return out[0] if scalar else out


def gammafn(z):
    """Gamma(z) = exp(lngamma(z))."""
    return np.exp(lngamma(z))


def gamma_ratio_sym(a):
    """Gamma(a)/Gamma(-a) computed as -Gamma(1+a)/Gamma(1-a).

    The rewritten form is regular at a = 0 (value -1), where the direct ratio
    is 0/0; it is used wherever kernels contain the pair Gamma(x)/Gamma(-x).
    """
    a = np.asarray(a, dtype=complex)
    return -np.exp(lngamma(1.0 + a) - lngamma(1.0 - a))


# Bernoulli numbers B_2 .. B_14
_BERN = np.array([1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730, 7.0 / 6])


def digamma_family(z, order=0):
    """Psi(z), Psi'(z) or Psi''(z) for order in {0, 1, 2}.

    Recurrence pushes the argument to Re z >= 14 where the Bernoulli
    asymptotic series is accurate to ~1e-14; reflection handles Re z < 0.
    """
    if order not in (0, 1, 2):
        raise DomainError("order must be 0, 1 or 2")
    z = np.asarray(z, dtype=complex)
    _check_nonpositive_integer(z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z).astype(complex)

    refl = np.real(z) < 0.0
    zz = np.where(refl, 1.0 - z, z)

    # recurrence up to Re >= 14
    shift = np.zeros_like(zz)
    zcur = zz.copy()
    nmax = int(max(0.0, 14.0 - np.min(np.real(zz))))
    for _ in range(nmax + 1):
        mask = np.real(zcur) < 14.0
        if not mask.any():
            break
        if order == 0:
            shift[mask] -= 1.0 / zcur[mask]
        elif order == 1:
            shift[mask] += 1.0 / zcur[mask] ** 2
        else:
            shift[mask] -= 2.0 / zcur[mask] ** 3
        zcur[mask] += 1.0

    w = zcur
    iw2 = 1.0 / (w * w)
    if order == 0:
        s = np.log(w) - 0.5 / w
        term = iw2.copy()
        for n, b in enumerate(_BERN, start=1):
            s = s - b / (2 * n) * term
            term = term * iw2
    elif order == 1:
        s = 1.0 / w + 0.5 * iw2
        term = iw2 / w
        for b in _BERN:
            s = s + b * term
            term = term * iw2
    else:
        s = -iw2 - iw2 / w
        term = iw2 * iw2
        for n, b in enumerate(_BERN, start=1):
            s = s - (2 * n + 1) * b * term
            term = term * iw2
    s = s + shift

    if np.any(refl):
        zr = z[refl]
        pz = math.pi * zr
        if order == 0:
            s_refl = s[refl] - math.pi / np.tan(pz)
        elif order == 1:
            s_refl = math.pi ** 2 / np.sin(pz) ** 2 - s[refl]
        else:
            s_refl = s[refl] - 2.0 * math.pi ** 3 * np.cos(pz) / np.sin(pz) ** 3
        s[refl] = s_refl

    if scalar:
        return s[0]
    return s


def theta_of_kappa(kappa, tol=1e-13, maxiter=80):
    """Invert the trigamma function: return theta > 0 with Psi'(theta) = kappa.

    Safeguarded Newton iteration.  The large-theta series
    kappa(theta) = 1/theta + 1/(2 theta^2) + 1/(6 theta^3) + ... provides the
    initial guess for small kappa; theta ~ kappa^{-1/2} for large kappa.
    """
    if kappa <= 0:
        raise DomainError("kappa must be positive")
    if kappa < 1.0:
        theta = (1.0 + math.sqrt(1.0 + 2.0 * kappa)) / (2.0 * kappa)
    else:
        theta = 1.0 / math.sqrt(kappa)
    lo, hi = 1e-300, math.inf
    for _ in range(maxiter):
        f = float(np.real(digamma_family(theta, 1))) - kappa
        if f > 0:
            lo = max(lo, theta)
        else:
            hi = min(hi, theta)
        df = float(np.real(digamma_family(theta, 2)))
        step = f / df
        theta_new = theta - step
        if not (lo < theta_new < hi):
            theta_new = 0.5 * (lo + (hi if math.isfinite(hi) else 2.0 * theta))
        if abs(theta_new - theta) < tol * theta:
            theta = theta_new
            break
        theta = theta_new
    else:
        raise ArithmeticError("theta_of_kappa: Newton iteration did not converge")
    if abs(float(np.real(digamma_family(theta, 1))) - kappa) > 1e-11 * kappa:
        raise ArithmeticError("theta_of_kappa: residual tolerance not met")
    return theta


# ---------------------------------------------------------------------------
# Bessel K via the cosh-integral representation
# ---------------------------------------------------------------------------

def _bessel_nodes(nu, xmin, xmax, npanel=18):
    """Composite Gauss-Legendre nodes on [0, tmax] for K_nu integrands.

    tmax: where cosh(nu t) exp(-x cosh t) < 1e-18 of its peak for x = xmin.
    """
    nu = abs(nu)
    probe = np.linspace(0.0, 80.0, 4001)
    logf = np.logaddexp(nu * probe, -nu * probe) - math.log(2.0) - xmin * np.cosh(probe)
    peak = logf.max()
    keep = np.nonzero(logf > peak - 45.0)[0]
    tmax = probe[min(keep[-1] + 1, len(probe) - 1)]
    tmax = max(tmax, 1.0)
    # panel size limited by the peak width ~ 1/sqrt(xmax) of the sharpest case
    width = 1.0 / math.sqrt(xmax + 1.0)
    h = max(min(0.5, 4.0 * width), 0.02)
    edges = np.arange(0.0, tmax + h, h)
    xg, wg = np.polynomial.legendre.leggauss(npanel)
    nodes = []
    weights = []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * xg + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * wg)
    return np.concatenate(nodes), np.concatenate(weights)


def bessel_k(nu, x, chunk=65536):
    """Modified Bessel function K_nu(x) for real nu in [-4, 4], x > 0.

    Uses K_nu(x) = int_0^infty cosh(nu t) exp(-x cosh t) dt, truncated where
    the integrand falls below 1e-18 of its peak.  Vectorized over x.
    """
    nu = float(nu)
    if abs(nu) > 4.0:
        raise DomainError("bessel_k supports |nu| <= 4")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x <= 0.0) or not np.all(np.isfinite(x)):
        raise DomainError("bessel_k requires x > 0")
    t, w = _bessel_nodes(nu, float(x.min()), float(x.max()))
    cosh_t = np.cosh(t)
    cosh_nut = np.cosh(nu * t)
    out = np.empty_like(x)
    for i in range(0, x.size, chunk):
        xs = x[i : i + chunk, None]
        out[i : i + chunk] = np.einsum(
            "j,ij->i", w * cosh_nut, np.exp(-xs * cosh_t[None, :])
        )
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Airy function
# ---------------------------------------------------------------------------

def _airy_series(x):
    """Ascending two-series on (-8.8, 1]: Ai = c1 f - c2 g.

    Evaluated in extended precision: the two sums cancel to ~1e-10 of their
    largest term near x = -8.6, which double precision cannot absorb.
    """
    c1 = np.longdouble("0.35502805388781723926")  # 3^(-2/3)/Gamma(2/3)
    c2 = np.longdouble("0.25881940379280679841")  # 3^(-1/3)/Gamma(1/3)
    x = x.astype(np.longdouble)
    x3 = x ** 3
    f = np.ones_like(x)
    g = x.copy()
    tf = np.ones_like(x)
    tg = x.copy()
    for k in range(0, 64):
        tf = tf * x3 / ((3 * k + 2) * (3 * k + 3))
        tg = tg * x3 / ((3 * k + 3) * (3 * k + 4))
        f = f + tf
        g = g + tg
        if max(np.max(np.abs(tf)), np.max(np.abs(tg))) < 1e-22:
            break
    return (c1 * f - c2 * g).astype(float)


def _airy_neg_asymptotic(x):
    """Oscillatory asymptotic expansion for x <= -8.0 (error < 1e-11 there)."""
    t = -x
    zeta = 2.0 / 3.0 * t ** 1.5
    # c_k = Gamma(3k+1/2) / (54^k k! Gamma(k+1/2))
    cs = [1.0]
    for k in range(1, 14):
        cs.append(cs[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / (216.0 * k * (2 * k - 1)))
    even = np.zeros_like(t)
    odd = np.zeros_like(t)
    for k in range(0, 7):
        even = even + (-1) ** k * cs[2 * k] * zeta ** (-2 * k)
        odd = odd + (-1) ** k * cs[2 * k + 1] * zeta ** (-2 * k - 1)
    ph = zeta + 0.25 * math.pi
    return (np.sin(ph) * even - np.cos(ph) * odd) / (math.sqrt(math.pi) * t ** 0.25)


def _airy_contour_pos(x):
    """Saddle-adapted vertical-line integral for x > 0.

    Ai(x) = e^{delta^3/3 - delta x}/pi * int_0^inf e^{-delta y^2}
            cos(delta^2 y - y^3/3 - x y) dy  with delta = max(sqrt(x), 0.8),
    which is cancellation-free at the saddle delta = sqrt(x).
    """
    out = np.empty_like(x)
    # group by similar delta to share nodes: process each unique x (vector ops inside)
    delta = np.maximum(np.sqrt(x), 0.8)
    ymax = np.sqrt(45.0 / delta)
    # phase range governs node count
    for i, (xi, di, yi) in enumerate(zip(x, delta, ymax)):
        phase_span = di * di * yi + yi ** 3 / 3.0 + xi * yi
        n = int(min(3000, max(160, 8.0 * phase_span / (2 * math.pi) * 4)))
        xg, wg = _leggauss_cached(24)
        edges = np.linspace(0.0, yi, max(4, n // 24) + 1)
        a = edges[:-1]
        b = edges[1:]
        y = (0.5 * (b - a)[:, None] * xg[None, :] + 0.5 * (a + b)[:, None]).ravel()
        w = (0.5 * (b - a)[:, None] * wg[None, :]).ravel()
        integ = np.exp(-di * y * y) * np.cos(di * di * y - y ** 3 / 3.0 - xi * y)
        out[i] = math.exp(di ** 3 / 3.0 - di * xi) / math.pi * float(integ @ w)
    return out


_LEGGAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _leggauss_cached(n):
    if n not in _LEGGAUSS_CACHE:
        _LEGGAUSS_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _LEGGAUSS_CACHE[n]


def airy_ai(x):
    """Airy function Ai(x) on [-30, 30], absolute accuracy ~1e-11 or better.

    x > 0: saddle-adapted contour integral; -7.5 < x <= 0: ascending series;
    x <= -7.5: oscillatory asymptotic expansion (the two-series split loses
    precision to cancellation below about -8).
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x).astype(float)
    out = np.zeros_like(x)
    # smooth blend across the series/asymptotic hand-off so that finite
    # differences across the boundary do not amplify the branch mismatch
    blend_lo, blend_hi = -8.6, -7.6
    mpos = x > 0.0
    mser = (~mpos) & (x > blend_lo)
    masy = x <= blend_hi
    if mpos.any():
        out[mpos] = _airy_contour_pos(x[mpos])
    if mser.any():
        out[mser] = _airy_series(x[mser])
    if masy.any():
        asy = _airy_neg_asymptotic(x[masy])
        xb = x[masy]
        t = np.clip((xb - blend_lo) / (blend_hi - blend_lo), 0.0, 1.0)
        w = t * t * t * (t * (6.0 * t - 15.0) + 10.0)  # C^2 smoothstep
        out[masy] = w * out[masy] + (1.0 - w) * asy
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Regularized upper incomplete gamma
# ---------------------------------------------------------------------------

def reg_gamma_upper(alpha, x):
    """Q(alpha, x) = Gamma(alpha, x)/Gamma(alpha), the upper regularized gamma.

    Series for the lower part when x < alpha + 1, modified Lentz continued
    fraction otherwise.  This is the CDF complement of the Gamma(alpha) law
    and hence the CDF of -ln Gamma(alpha) variables after x -> exp(-x).
    """
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x).astype(float)
    if np.any(x < 0):
        raise DomainError("x must be non-negative")
    out = np.empty_like(x)
    lg = float(np.real(lngamma(alpha)))

    ser = x < alpha + 1.0
    if ser.any():
        xs = x[ser]
        term = np.full_like(xs, 1.0 / alpha)
        total = term.copy()
        ap = alpha
        for _ in range(400):
            ap += 1.0
            term = term * xs / ap
            total += term
            if np.all(np.abs(term) < 1e-17 * np.abs(total)):
                break
        with np.errstate(divide="ignore"):
            logp = np.where(xs > 0, -xs + alpha * np.log(np.where(xs > 0, xs, 1.0)) - lg, -np.inf)
        out[ser] = 1.0 - np.exp(logp) * total

    cf = ~ser
    if cf.any():
        xc = x[cf]
        tiny = 1e-300
        b = xc + 1.0 - alpha
        c = np.full_like(xc, 1.0 / tiny)
        d = 1.0 / b
        h = d.copy()
        for i in range(1, 400):
            an = -i * (i - alpha)
            b = b + 2.0
            d = an * d + b
            d = np.where(np.abs(d) < tiny, tiny, d)
            c = b + an / c
            c = np.where(np.abs(c) < tiny, tiny, c)
            d = 1.0 / d
            delta = d * c
            h = h * delta
            if np.all(np.abs(delta - 1.0) < 1e-16):
                break
        out[cf] = np.exp(-xc + alpha * np.log(xc) - lg) * h

    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# q-deformations (Appendix-G style definitions)
# ---------------------------------------------------------------------------

def _check_q(q):
    if not (0.0 < q < 1.0):
        raise DomainError("q must lie strictly in (0, 1)")


def q_pochhammer(a, q, n=None):
    """(a; q)_n = prod_{k=0}^{n-1} (1 - a q^k); n=None means the infinite product.

    The infinite product is truncated at the first factor within 1e-17 of 1,
    i.e. once |a| q^k < 1e-17; the geometric decay bounds the dropped tail.
    """
    _check_q(q)
    a = np.asarray(a)
    scalar = a.ndim == 0
    a = np.atleast_1d(a).astype(complex)
    out = np.ones_like(a)
    if n is not None:
        if n < 0:
            raise DomainError("n must be >= 0")
        qk = 1.0
        for _ in range(n):
            out = out * (1.0 - a * qk)
            qk *= q
    else:
        amax = float(np.max(np.abs(a)))
        if amax > 0.0:
            kmax = int(math.ceil((math.log(1e-17) - math.log(amax)) / math.log(q))) + 1
            qk = 1.0
            for _ in range(max(kmax, 1)):
                out = out * (1.0 - a * qk)
                qk *= q
    return out[0] if scalar else out


def q_factorial(n, q):
    """n_q! = (q;q)_n / (1-q)^n."""
    _check_q(q)
    return complex(q_pochhammer(q, q, n)).real / (1.0 - q) ** n


def q_gamma(x, q):
    """Gamma_q(x) = (q;q)_inf / (q^x;q)_inf * (1-q)^(1-x)."""
    _check_q(q)
    x = np.asarray(x)
    scalar = x.ndim == 0
    x = np.atleast_1d(x).astype(complex)
    qx = np.exp(x * math.log(q))
    num = q_pochhammer(q, q)
    den = q_pochhammer(qx, q)
    if np.any(np.abs(den) < 1e-250):
        raise PoleInputError("q_gamma pole (q^x hits q^{-k})")
    out = num / den * np.exp((1.0 - x) * math.log(1.0 - q))
    return out[0] if scalar else out


def e_q(x, q):
    """First q-exponential e_q(x) = 1/((1-q) x; q)_inf; -> e^x as q -> 1."""
    _check_q(q)
    x = np.asarray(x)
    scalar = x.ndim == 0
    x = np.atleast_1d(x).astype(complex)
    den = q_pochhammer((1.0 - q) * x, q)
    if np.any(np.abs(den) < 1e-250):
        raise PoleInputError("e_q pole ((1-q)x hits q^{-k})")
    out = 1.0 / den
    return out[0] if scalar else out


def q_functions(kind, args, qp):
    """Dispatcher over the q-deformed family.

    kind in {"pochhammer_n", "pochhammer_inf", "q_gamma", "e_q"};
    args is the tuple of positional arguments; qp carries q in (0,1).
    """
    q = qp.q if hasattr(qp, "q") else float(qp)
    if kind == "pochhammer_n":
        a, n = args
        return q_pochhammer(a, q, int(n))
    if kind == "pochhammer_inf":
        (a,) = args if isinstance(args, (tuple, list)) else (args,)
        return q_pochhammer(a, q)
    if kind == "q_gamma":
        (x,) = args if isinstance(args, (tuple, list)) else (args,)
        return q_gamma(x, q)
    if kind == "e_q":
        (x,) = args if isinstance(args, (tuple, list)) else (args,)
        return e_q(x, q)
    raise DomainError(f"unknown q-function kind: {kind!r}")
