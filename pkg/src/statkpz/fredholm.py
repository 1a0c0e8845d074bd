"""Nystrom evaluation of Fredholm determinants and resolvent inner products.

det(Id +- K) is discretized as det(delta_ij +- K(x_i, x_j) w_j) on a
Quadrature; weights stay complex and unsplit (contour kernels are
non-Hermitian, and the determinant is invariant under the similarity that
would symmetrize them).  Dense LU throughout; node counts are a few hundred.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .contours import Quadrature

__all__ = [
    "NumericsError",
    "KernelHandle",
    "FredholmResult",
    "nystrom_matrix",
    "fredholm_det",
    "resolvent_inner",
    "det_rank_perturbation",
]

MAX_NODES = 4096


class NumericsError(ArithmeticError):
    """Discretized operator contains non-finite entries or is near-singular."""


@dataclass
class KernelHandle:
    """Pure two-argument kernel.  eval_matrix, when provided, must return
    K(xs[i], ys[j]) as an (len(xs), len(ys)) array and is the fast path."""

    eval: Callable[[complex, complex], complex]
    eval_matrix: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def matrix(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        if self.eval_matrix is not None:
            return np.asarray(self.eval_matrix(xs, ys), dtype=complex)
        out = np.empty((len(xs), len(ys)), dtype=complex)
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                out[i, j] = self.eval(x, y)
        return out


@dataclass
class FredholmResult:
    value: complex
    error_estimate: float
    n_nodes: int


def nystrom_matrix(K: KernelHandle, Q: Quadrature) -> np.ndarray:
    """K(x_i, x_j) w_j on the node set, validated finite."""
    if Q.nodes.size > MAX_NODES:
        raise NumericsError(f"node count {Q.nodes.size} exceeds dense-LU cap {MAX_NODES}")
    M = K.matrix(Q.nodes, Q.nodes) * Q.weights[None, :]
    if not np.all(np.isfinite(M)):
        raise NumericsError("kernel matrix contains non-finite entries")
    return M


def _det_once(K: KernelHandle, Q: Quadrature, sgn: float) -> complex:
    M = nystrom_matrix(K, Q)
    return complex(np.linalg.det(np.eye(len(M)) + sgn * M))


def fredholm_det(K: KernelHandle, Q: Quadrature, sign: str = "plus") -> FredholmResult:
    """det(Id +- K) with an error estimate from a half-resolution re-run."""
    sgn = {"plus": 1.0, "minus": -1.0}[sign]
    val = _det_once(K, Q, sgn)
    try:
        val_half = _det_once(K, Q.coarse(), sgn)
        err = abs(val - val_half)
    except ValueError:
        err = float("nan")
    return FredholmResult(value=val, error_estimate=err, n_nodes=int(Q.nodes.size))


def _solve(K: KernelHandle, Q: Quadrature, rhs: np.ndarray) -> np.ndarray:
    A = np.eye(Q.nodes.size) - nystrom_matrix(K, Q)
    if abs(np.linalg.det(A)) <= 1e-8:
        raise NumericsError("Id - K is numerically singular on this quadrature")
    return np.linalg.solve(A, rhs)


def resolvent_inner(K: KernelHandle, f, g, Q: Quadrature) -> complex:
    """<(Id - K)^{-1} f, g> on the quadrature measure."""
    fv = np.asarray([f(x) for x in Q.nodes], dtype=complex) if callable(f) else np.asarray(f, dtype=complex)
    gv = np.asarray([g(x) for x in Q.nodes], dtype=complex) if callable(g) else np.asarray(g, dtype=complex)
    x = _solve(K, Q, fv)
    return complex(np.sum(x * gv * Q.weights))


def det_rank_perturbation(K: KernelHandle, f, g, Q: Quadrature) -> complex:
    """Both sides of det(Id-K) <(Id-K)^{-1} f, g> = det(Id-K) - det(Id-K-f(x)g(y)).

    Returns the left side after asserting the two sides agree to 1e-8
    relative; disagreement signals quadrature under-resolution.
    """
    fv = np.asarray([f(x) for x in Q.nodes], dtype=complex) if callable(f) else np.asarray(f, dtype=complex)
    gv = np.asarray([g(x) for x in Q.nodes], dtype=complex) if callable(g) else np.asarray(g, dtype=complex)
    M = nystrom_matrix(K, Q)
    eye = np.eye(len(M))
    detK = complex(np.linalg.det(eye - M))
    if abs(detK) <= 1e-8:
        raise NumericsError("Id - K is numerically singular on this quadrature")
    x = np.linalg.solve(eye - M, fv)
    lhs = detK * complex(np.sum(x * gv * Q.weights))
    rank1 = fv[:, None] * (gv * Q.weights)[None, :]
    rhs = detK - complex(np.linalg.det(eye - M - rank1))
    if abs(lhs - rhs) > 1e-8 * max(1.0, abs(lhs)):
        raise NumericsError(f"rank-perturbation identity violated: |{lhs} - {rhs}|")
    return lhs
