"""Shared generators for randomized geometry tests."""

import numpy as np

from vaidya.geometry import Polytope, slacks


def simplex_polytope(n: int) -> Polytope:
    """x_i >= -1 for all i plus sum(x) <= 1: bounded, 0 strictly inside."""
    A = np.vstack([np.eye(n), -np.ones((1, n))])
    b = -np.ones(n + 1)
    return Polytope(A, b)


def random_polytope(n: int, m: int, rng: np.random.Generator) -> Polytope:
    """Bounded polytope with m rows (m >= n+1) and 0 strictly interior.

    Starts from the simplex base and appends random halfspaces with slack
    in [0.4, 1.2] at the origin, so boundedness is inherited.
    """
    assert m >= n + 1
    P = simplex_polytope(n)
    rows, offs = [P.A], [P.b]
    for _ in range(m - (n + 1)):
        a = rng.normal(size=n)
        a /= np.linalg.norm(a)
        rows.append(a[None, :])
        offs.append(np.array([-rng.uniform(0.4, 1.2)]))
    return Polytope(np.vstack(rows), np.concatenate(offs))


def random_interior_point(P: Polytope, rng: np.random.Generator,
                          min_slack: float = 0.05) -> np.ndarray:
    """Step from the origin along a random ray, staying comfortably interior."""
    s0 = slacks(P, np.zeros(P.n))
    for _ in range(64):
        d = rng.normal(size=P.n)
        d /= np.linalg.norm(d)
        rates = P.A @ d
        shrinking = rates < 0
        t_max = np.min(s0[shrinking] / -rates[shrinking]) if np.any(shrinking) else 1.0
        x = rng.uniform(0.15, 0.6) * t_max * d
        if slacks(P, x).min() >= min_slack:
            return x
    return np.zeros(P.n)