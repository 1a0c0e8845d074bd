"""Numerics for the stationary KPZ / semi-discrete polymer determinant formulas.

Subpackages are organized by layer:

* ``specfun``       scalar special functions (complex log-gamma, digamma family,
                    Bessel K, Airy, regularized gamma tails, q-deformations),
* ``contours``      integration contours in the complex plane and quadrature rules,
* ``fredholm``      Nystrom evaluation of Fredholm determinants and resolvents,
* ``qwhittaker``    q-Whittaker moment / e_q-Laplace identities with brute-force oracles,
* ``semidiscrete``  the semi-discrete polymer kernel K_u and its determinant,
* ``polymer_mc``    Monte-Carlo polymer samplers (counter-based RNG, reproducible),
* ``kpz``           continuum kernels K_{b,beta}, Kbar, boundary functions and Xi,
* ``distributions`` stationary one-point CDF, Baik-Rains-type law, universality gap,
* ``cli``           batch front end writing CSV tables with JSON sidecars.
"""

from . import specfun, contours, fredholm, qwhittaker, semidiscrete, polymer_mc, kpz, distributions

__all__ = [
    "specfun",
    "contours",
    "fredholm",
    "qwhittaker",
    "semidiscrete",
    "polymer_mc",
    "kpz",
    "distributions",
]

__version__ = "0.1.0"
