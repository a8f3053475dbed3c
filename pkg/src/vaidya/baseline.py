"""Projected stochastic gradient descent baseline.

Constant step, x0 = 0, Euclidean projection onto the ball after every
update.  Uses the same counter-seeded minibatch contract as the
cutting-plane solver but in its own seed domain, so comparison runs never
share samples.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .cutting_plane import RunResult, RunTrace, TraceRecord
from .errors import InvalidArgument
from .stochastic import StochasticOracle, derive_seed, estimate_value, minibatch_subgradient

_SGD_TAG = 0x5347445F42415345  # seed domain separator vs the cutting-plane runner


@dataclass
class SgdConfig:
    step_size: float
    batch: int
    iterations: int
    radius: float
    seed: int = 0
    value_batch: int | None = None

    def __post_init__(self):
        if self.step_size < 0:
            raise InvalidArgument("step_size must be >= 0")
        if self.batch < 1 or self.iterations < 1 or self.radius <= 0:
            raise InvalidArgument("batch, iterations and radius must be positive")


def project_ball(x: np.ndarray, R: float) -> np.ndarray:
    """x if |x| <= R else R x / |x|."""
    x = np.asarray(x, dtype=float)
    norm = float(np.linalg.norm(x))
    if norm <= R:
        return x
    return (R / norm) * x


def run_sgd(oracle: StochasticOracle, cfg: SgdConfig, threads: int = 1,
            max_samples: int | None = None) -> RunResult:
    """x_{k+1} = project(x_k - step * batch-mean subgradient at x_k).

    A max_samples budget stops the loop once that many samples were drawn.
    """
    x = np.zeros(oracle.dim)
    trace = RunTrace()
    best_x = x.copy()
    best_val = np.inf
    samples = 0
    value_batch = cfg.value_batch if cfg.value_batch is not None else cfg.batch
    t0 = time.perf_counter()
    for k in range(1, cfg.iterations + 1):
        base = derive_seed(cfg.seed, k, tag=_SGD_TAG)
        _, g = minibatch_subgradient(oracle, x, cfg.batch, base, threads=threads)
        value = estimate_value(oracle, x, value_batch, base, threads=threads)
        samples += cfg.batch + value_batch
        if value < best_val:
            best_val = value
            best_x = x.copy()
        trace.append(TraceRecord(
            k=k, m=None, action="step", drop_index=None, min_sigma=None,
            x=x.copy(), value_estimate=value, cum_samples=samples,
            wall_time_s=time.perf_counter() - t0))
        x = project_ball(x - cfg.step_size * g, cfg.radius)
        if max_samples is not None and samples >= max_samples:
            break
    return RunResult(best_point=best_x, best_value_estimate=float(best_val),
                     trace=trace, total_oracle_calls=samples, final_point=x)
