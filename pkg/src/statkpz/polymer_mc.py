"""Monte-Carlo polymer samplers with counter-based, reproducible RNG.

Samples are generated in fixed-size batches; batch b of a run draws from
Philox(key=(seed, stream_id), counter=(0,0,b,0)), so estimates are
bit-identical for any worker-pool size (batch partitioning never depends on
the thread count and the reduction runs in batch order).

The partition function is simulated by the log-space grid recursion

    L_n(t_k) = b_{n,k} + logaddexp( L_n(t_{k-1}), ln(dt) + L_{n-1}(t_{k-1}) )

with b_{n,k} ~ Normal(a_n dt, dt) and L_n(0) from the discrete boundary DP;
for M = 0 only level 1 is reachable at time zero (L_1(0)=0, rest -inf).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .semidiscrete import PolymerParams
from .specfun import DomainError

__all__ = [
    "RngStream",
    "MCEstimate",
    "set_worker_threads",
    "get_worker_threads",
    "sample_log_gamma",
    "boundary_partition",
    "simulate_partition",
    "sample_ln_partition",
    "mc_laplace",
    "burke_series",
]

BATCH = 16384

_WORKERS = 1


def set_worker_threads(n: int) -> None:
    global _WORKERS
    _WORKERS = max(1, int(n))


def get_worker_threads() -> int:
    return _WORKERS


@dataclass(frozen=True)
class RngStream:
    """Counter-based stream: distinct (seed, stream_id) are independent."""

    seed: int
    stream_id: int = 0

    def generator(self, batch: int = 0, stream_offset: int = 0) -> np.random.Generator:
        key = [np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF),
               np.uint64((self.stream_id + stream_offset) & 0xFFFFFFFFFFFFFFFF)]
        counter = [np.uint64(0), np.uint64(0), np.uint64(batch), np.uint64(0)]
        return np.random.Generator(np.random.Philox(key=key, counter=counter))


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n: int
    seed: int

    @classmethod
    def from_samples(cls, samples: np.ndarray, seed: int) -> "MCEstimate":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        if n < 2:
            raise DomainError("need at least two samples")
        m = float(samples.mean())
        se = float(samples.std(ddof=1) / math.sqrt(n))
        return cls(mean=m, stderr=se, n=n, seed=seed)

    @classmethod
    def from_moments(cls, total: float, total_sq: float, n: int, seed: int) -> "MCEstimate":
        m = total / n
        var = max(total_sq / n - m * m, 0.0) * n / (n - 1)
        return cls(mean=m, stderr=math.sqrt(var / n), n=n, seed=seed)


def _map_batches(fn, n_batches: int):
    """Apply fn(batch_index) for all batches, preserving batch order."""
    if _WORKERS == 1 or n_batches == 1:
        return [fn(b) for b in range(n_batches)]
    with ThreadPoolExecutor(max_workers=_WORKERS) as pool:
        return list(pool.map(fn, range(n_batches)))


def sample_log_gamma(theta: float, rng: RngStream, size=None):
    """W ~ -ln Gamma(theta), i.e. -log of a unit-scale Gamma(theta) draw."""
    if theta <= 0:
        raise DomainError("theta must be positive")
    gen = rng.generator()
    draws = gen.gamma(theta, size=size)
    return -np.log(draws)


def _boundary_batch(p: PolymerParams, gen: np.random.Generator, nbatch: int,
                    zero_corner: bool) -> np.ndarray:
    """ln Z_n(0) for n = 1..N: DP over the discrete boundary columns."""
    N, M = p.N, p.M
    out = np.full((nbatch, N), -np.inf)
    out[:, 0] = 0.0
    if M == 0:
        return out
    a = np.asarray(p.a, dtype=float)
    # omega[b, m, n] ~ -ln Gamma(alpha_m - a_n); columns ordered -M..-1
    D = None
    for m in range(M - 1, -1, -1):  # position -(m+1): leftmost first
        theta = p.alpha[m] - a  # length N
        om = -np.log(gen.gamma(np.broadcast_to(theta, (nbatch, N))))
        if zero_corner and m == 0:
            om[:, 0] = 0.0
        col = np.empty((nbatch, N))
        if D is None:
            col[:, 0] = om[:, 0]
            for n in range(1, N):
                col[:, n] = om[:, n] + col[:, n - 1]
        else:
            col[:, 0] = om[:, 0] + D[:, 0]
            for n in range(1, N):
                col[:, n] = om[:, n] + np.logaddexp(D[:, n], col[:, n - 1])
        D = col
    return D


def boundary_partition(p: PolymerParams, rng: RngStream, zero_corner: bool = False) -> np.ndarray:
    """One sample of (ln Z_1(0), ..., ln Z_N(0))."""
    return _boundary_batch(p, rng.generator(), 1, zero_corner)[0]


def _evolve_batch(p: PolymerParams, dt: float, gen: np.random.Generator,
                  L: np.ndarray, n_steps: int, checkpoints=None):
    """Advance the log-space recursion n_steps; optionally record L_: at
    given step indices.  Returns (L, snapshots)."""
    nbatch, N = L.shape
    a = np.asarray(p.a, dtype=float)
    lndt = math.log(dt)
    sq = math.sqrt(dt)
    snaps = {}
    want = set(checkpoints or ())
    for k in range(1, n_steps + 1):
        b = gen.normal(0.0, 1.0, size=(nbatch, N)) * sq + a * dt
        if N > 1:
            upd = b[:, 1:] + np.logaddexp(L[:, 1:], lndt + L[:, :-1])
            L[:, 0] += b[:, 0]
            L[:, 1:] = upd
        else:
            L[:, 0] += b[:, 0]
        if k in want:
            snaps[k] = L.copy()
    return L, snaps


def _check_dt(tau: float, dt: float) -> int:
    n = round(tau / dt)
    if n < 1 or abs(n * dt - tau) > 1e-9 * max(tau, 1.0):
        raise DomainError("dt must divide tau")
    return int(n)


def simulate_partition(p: PolymerParams, dt: float, rng: RngStream,
                       zero_corner: bool = False) -> float:
    """One sample of ln Z^{N,M}(tau)."""
    n_steps = _check_dt(p.tau, dt)
    gen = rng.generator()
    L = _boundary_batch(p, gen, 1, zero_corner)
    L, _ = _evolve_batch(p, dt, gen, L, n_steps)
    return float(L[0, -1])


def sample_ln_partition(p: PolymerParams, dt: float, rng: RngStream, n_samples: int,
                        zero_corner: bool = False) -> np.ndarray:
    """n_samples of ln Z^{N,M}(tau), batched and reproducible."""
    n_steps = _check_dt(p.tau, dt)
    n_batches = (n_samples + BATCH - 1) // BATCH

    def run(bi: int) -> np.ndarray:
        nb = min(BATCH, n_samples - bi * BATCH)
        gen = rng.generator(batch=bi)
        L = _boundary_batch(p, gen, nb, zero_corner)
        L, _ = _evolve_batch(p, dt, gen, L, n_steps)
        return L[:, -1]

    return np.concatenate(_map_batches(run, n_batches))


def mc_laplace(p: PolymerParams, u: complex, n_samples: int, dt: float,
               rng: RngStream, zero_corner: bool = False) -> MCEstimate:
    """Monte-Carlo estimate of E[exp(-u Z^{N,M}(tau))], Re u > 0."""
    if complex(u).real < 0:
        raise DomainError("need Re u >= 0")
    if u == 0:
        return MCEstimate(mean=1.0, stderr=0.0, n=n_samples, seed=rng.seed)
    n_steps = _check_dt(p.tau, dt)
    n_batches = (n_samples + BATCH - 1) // BATCH
    u = complex(u)

    def run(bi: int):
        nb = min(BATCH, n_samples - bi * BATCH)
        gen = rng.generator(batch=bi)
        L = _boundary_batch(p, gen, nb, zero_corner)
        L, _ = _evolve_batch(p, dt, gen, L, n_steps)
        ln_z = L[:, -1]
        vals = np.where(ln_z > 690.0, 0.0, np.exp(-u.real * np.exp(np.minimum(ln_z, 690.0))))
        return float(vals.sum()), float((vals * vals).sum()), nb

    parts = _map_batches(run, n_batches)
    total = sum(x[0] for x in parts)
    total_sq = sum(x[1] for x in parts)
    return MCEstimate.from_moments(total, total_sq, n_samples, rng.seed)


def burke_series(alpha: float, N: int, tau_grid, dt: float, rng: RngStream,
                 n_samples: int = 20000):
    """Samples of r_k(tau) = ln Zsd(tau, k+1) - ln Zsd(tau, k), k = 1..N-1.

    Model: the stationary specialization a = (alpha, 0, ..., 0), alpha_1 =
    alpha, corner weight zeroed; its boundary increments are iid
    -ln Gamma(alpha) and Burke stationarity says every r_k(tau) is again
    -ln Gamma(alpha), independent across k and stationary in tau.

    Returns an array of shape (n_samples, len(tau_grid), N-1) plus the matrix
    of ln Zsd(tau, N) samples (n_samples, len(tau_grid)).
    """
    if alpha <= 0 or N < 2:
        raise DomainError("need alpha > 0 and N >= 2")
    tau_grid = sorted(float(t) for t in tau_grid)
    p = PolymerParams(N=N, M=1, tau=tau_grid[-1], a=(alpha,) + (0.0,) * (N - 1),
                      alpha=(alpha,))
    steps = [_check_dt(t, dt) for t in tau_grid]
    n_batches = (n_samples + BATCH - 1) // BATCH

    def run(bi: int):
        nb = min(BATCH, n_samples - bi * BATCH)
        gen = rng.generator(batch=bi)
        L = _boundary_batch(p, gen, nb, zero_corner=True)
        _, snaps = _evolve_batch(p, dt, gen, L, steps[-1], checkpoints=steps)
        stack = np.stack([snaps[k] for k in steps], axis=1)  # (nb, T, N)
        return stack

    stacks = np.concatenate(_map_batches(run, n_batches), axis=0)
    r = np.diff(stacks, axis=2)  # r_k = L_{k+1} - L_k
    return r, stacks[:, :, -1]
