"""Stochastic subgradient oracles, minibatching and the batch-size calculus.

Averaging r independent stochastic subgradients at one point shrinks the
noise like 1/sqrt(r); with sub-Gaussian gradient noise of scale sigma on a
domain of radius R, a batch mean is a delta-subgradient at all N query
points with probability >= 1 - beta for

    delta = (sqrt(2) + sqrt(6 ln(N/beta))) * sigma * R / sqrt(r).

Sampling is counter-seeded: sample l of a batch uses the seed
mix(base_seed, l), so the r evaluations can run in parallel in any order
and still reproduce bit-identical batch means (the average is reduced in
fixed index order).  Natural logarithms throughout.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .errors import InvalidArgument, InvalidBatchSize

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_STREAM = _U64(0xD1B54A32D192ED03)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1

# Value-estimation batches draw from a seed domain disjoint from gradient
# batches at the same base seed (XOR tag before mixing).
VALUE_TAG = 0xA0761D6478BD642F


def _mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer; avalanche on uint64 arrays (wraps mod 2^64)."""
    z = z ^ (z >> _U64(30))
    z = z * _MIX1
    z = z ^ (z >> _U64(27))
    z = z * _MIX2
    return z ^ (z >> _U64(31))


def sample_seeds(base_seed: int, r: int) -> np.ndarray:
    """Per-sample seeds mix(base_seed, l) for l = 1..r."""
    idx = np.arange(1, r + 1, dtype=np.uint64)
    return _mix64(_U64(base_seed & _MASK) + _GOLDEN * idx)


def derive_seed(master_seed: int, index: int, tag: int = 0) -> int:
    """A 64-bit stream seed for (master, index) within a tagged domain."""
    # stay on 1-element arrays: numpy integer arrays wrap silently mod 2^64
    z = np.asarray([(master_seed ^ tag) & _MASK], dtype=np.uint64) \
        + _GOLDEN * np.asarray([index & _MASK], dtype=np.uint64)
    return int(_mix64(z)[0])


def unit_uniforms(seeds: np.ndarray, k: int) -> np.ndarray:
    """(len(seeds), k) uniforms in the open interval (0, 1), one row per seed."""
    streams = seeds[:, None] + _STREAM * np.arange(1, k + 1, dtype=np.uint64)[None, :]
    bits = _mix64(streams)
    return ((bits >> _U64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def standard_normals(seeds: np.ndarray, k: int) -> np.ndarray:
    """(len(seeds), k) standard normals via Box-Muller on the seed streams."""
    pairs = (k + 1) // 2
    u = unit_uniforms(seeds, 2 * pairs)
    u1, u2 = u[:, 0::2], u[:, 1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.empty((len(seeds), 2 * pairs))
    z[:, 0::2] = radius * np.cos(angle)
    z[:, 1::2] = radius * np.sin(angle)
    return z[:, :k]


def uniform_indices(seeds: np.ndarray, n: int) -> np.ndarray:
    """One index in [0, n) per seed."""
    u = unit_uniforms(seeds, 1)[:, 0]
    return np.minimum((u * n).astype(np.intp), n - 1)


class StochasticOracle(Protocol):
    """Per-sample value/subgradient oracle with declared noise scale and radius.

    Implementations must be pure in (x, seed): the same pair always yields
    the same realization, and batch evaluation must agree elementwise with
    one-at-a-time evaluation.
    """

    sigma: float
    radius: float
    dim: int

    def sample_batch(self, x: np.ndarray, seeds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (values, grads) of shapes (r,) and (r, n) for the given seeds."""
        ...


def _sequential_mean(a: np.ndarray) -> np.ndarray:
    # accumulate is sequential by definition, so the reduction order is
    # index order regardless of how the samples were produced
    return np.add.accumulate(a, axis=0)[-1] / a.shape[0]


def _batch(oracle: StochasticOracle, x: np.ndarray, seeds: np.ndarray,
           threads: int) -> tuple[np.ndarray, np.ndarray]:
    if threads <= 1 or len(seeds) < 2 * threads:
        return oracle.sample_batch(x, seeds)
    chunks = np.array_split(seeds, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda s: oracle.sample_batch(x, s), chunks))
    values = np.concatenate([p[0] for p in parts])
    grads = np.concatenate([p[1] for p in parts])
    return values, grads


def minibatch_subgradient(oracle: StochasticOracle, x: np.ndarray, r: int,
                          base_seed: int, threads: int = 1) -> tuple[float, np.ndarray]:
    """Average r independent realizations at x; fixed-order reduction."""
    if r <= 0:
        raise InvalidBatchSize(f"batch size must be >= 1, got {r}")
    values, grads = _batch(oracle, np.asarray(x, dtype=float), sample_seeds(base_seed, r), threads)
    return float(_sequential_mean(values)), _sequential_mean(grads)


def estimate_value(oracle: StochasticOracle, x: np.ndarray, r: int,
                   base_seed: int, threads: int = 1) -> float:
    """Monte Carlo estimate of f(x) from the value channel only.

    Seeds come from the tagged domain mix(base_seed XOR VALUE_TAG, l), so a
    value batch never shares a sample seed with the gradient batch at the
    same base seed.
    """
    if r <= 0:
        raise InvalidBatchSize(f"batch size must be >= 1, got {r}")
    seeds = sample_seeds(base_seed ^ VALUE_TAG, r)
    values, _ = _batch(oracle, np.asarray(x, dtype=float), seeds, threads)
    return float(_sequential_mean(values))


@dataclass(frozen=True)
class DeltaCertificate:
    """Batch size r buys delta = (sqrt 2 + sqrt(6 ln(N/beta))) sigma R / sqrt(r)."""

    r: int
    beta: float
    delta: float
    N: int
    sigma: float
    R: float


def _coefficient(beta: float, N: int) -> float:
    return math.sqrt(2.0) + math.sqrt(6.0 * math.log(N / beta))


def batch_size(eps: float, beta: float, sigma: float, R: float, N: int) -> int:
    """Smallest r making the batch mean an eps/2-subgradient at all N steps
    with probability >= 1 - beta (exact inversion, no hidden constants)."""
    if eps <= 0 or sigma <= 0 or R <= 0:
        raise InvalidArgument("eps, sigma and R must be positive")
    if not 0.0 < beta < 1.0:
        raise InvalidArgument("beta must lie in (0, 1)")
    if N < 1:
        raise InvalidArgument("N must be >= 1")
    return math.ceil(4.0 * sigma ** 2 * R ** 2 * _coefficient(beta, N) ** 2 / eps ** 2)


def delta_of_batch(r: int, beta: float, sigma: float, R: float, N: int) -> DeltaCertificate:
    """The delta bought by batch size r over N iterations at confidence beta."""
    if r < 1:
        raise InvalidArgument("r must be >= 1")
    if not 0.0 < beta < 1.0:
        raise InvalidArgument("beta must lie in (0, 1)")
    if sigma < 0 or R <= 0:
        raise InvalidArgument("sigma must be >= 0 and R > 0")
    if N < 1:
        raise InvalidArgument("N must be >= 1")
    delta = _coefficient(beta, N) * sigma * R / math.sqrt(r)
    return DeltaCertificate(r=r, beta=beta, delta=delta, N=N, sigma=sigma, R=R)


def check_delta_subgradient(f: Callable[[np.ndarray], float], x: np.ndarray,
                            g: np.ndarray, delta: float, probes,
                            slack: float = 0.0) -> bool:
    """True iff f(y) >= f(x) + <g, y-x> - delta at every probe point."""
    x = np.asarray(x, dtype=float)
    fx = f(x)
    for y in probes:
        y = np.asarray(y, dtype=float)
        if f(y) < fx + g @ (y - x) - delta - slack:
            return False
    return True
