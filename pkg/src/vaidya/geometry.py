"""Polytope localizers and volumetric-barrier computations.

A localizer is the polytope P = {x : A x >= b} with slack vector
s(x) = A x - b.  The log-barrier Hessian

    H(x) = sum_i a_i a_i^T / s_i(x)^2

defines the volumetric barrier F(x) = 0.5 * log det H(x); its minimizer is
the volumetric center, which the cutting-plane loop queries each iteration.
The leverage scores

    sigma_i(x) = a_i^T H(x)^{-1} a_i / s_i(x)^2

measure each row's influence, lie in (0, 1] and sum to n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import (
    CenteringFailed,
    DimensionMismatch,
    InvalidArgument,
    NonInteriorPoint,
    SingularHessian,
    TooFewRows,
    ZeroCutVector,
)

# A point counts as interior only if every slack clears this floor
# (absolute-plus-relative guard against denormal slacks).
_INTERIOR_REL = 1e-14


@dataclass(eq=False)
class Polytope:
    """The pair (A, b) for {x : A x >= b}, with m >= n+1 nonzero rows."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.A.ndim != 2 or self.b.ndim != 1:
            raise DimensionMismatch("A must be 2-D and b 1-D")
        m, n = self.A.shape
        if self.b.shape[0] != m:
            raise DimensionMismatch(f"A has {m} rows but b has {self.b.shape[0]}")
        if m < n + 1:
            raise InvalidArgument(f"need at least n+1={n + 1} rows, got {m}")
        norms = np.linalg.norm(self.A, axis=1)
        if np.any(norms == 0.0):
            raise InvalidArgument("polytope rows must be nonzero")

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


@dataclass(eq=False)
class BarrierState:
    """Everything the loop needs at one interior point, sharing one factorization."""

    x: np.ndarray
    s: np.ndarray
    H: np.ndarray
    Hfact: tuple
    sigma: np.ndarray
    F: float
    gradF: np.ndarray


def slacks(P: Polytope, x: np.ndarray) -> np.ndarray:
    """s_i = a_i^T x - b_i; callers test interiority with it."""
    x = np.asarray(x, dtype=float)
    if x.shape != (P.n,):
        raise DimensionMismatch(f"point has shape {x.shape}, expected ({P.n},)")
    return P.A @ x - P.b


def _interior_floor(P: Polytope) -> np.ndarray:
    return _INTERIOR_REL * (1.0 + np.abs(P.b))


def is_interior(P: Polytope, x: np.ndarray) -> bool:
    return bool(np.all(slacks(P, x) > _interior_floor(P)))


def _require_interior(P: Polytope, x: np.ndarray) -> np.ndarray:
    s = slacks(P, x)
    if not np.all(s > _interior_floor(P)):
        raise NonInteriorPoint(f"min slack {s.min():.3e} at or below interior floor")
    return s


def _factorize(H: np.ndarray) -> tuple:
    """Cholesky with one jitter retry, else SingularHessian."""
    try:
        return cho_factor(H, lower=True)
    except LinAlgError:
        jitter = 1e-12 * np.trace(H) / H.shape[0]
        try:
            return cho_factor(H + jitter * np.eye(H.shape[0]), lower=True)
        except LinAlgError as exc:
            raise SingularHessian("barrier Hessian is not positive definite") from exc


def barrier_hessian(P: Polytope, x: np.ndarray) -> np.ndarray:
    """H(x) = sum_i a_i a_i^T / s_i^2, SPD when the rows span R^n."""
    s = _require_interior(P, x)
    U = P.A / s[:, None]
    return U.T @ U


def barrier_state(P: Polytope, x: np.ndarray) -> BarrierState:
    """Assemble slacks, Hessian factorization, leverages, F and grad F at x."""
    s = _require_interior(P, x)
    U = P.A / s[:, None]
    H = U.T @ U
    fact = _factorize(H)
    # sigma_i = u_i^T H^{-1} u_i with u_i = a_i / s_i, one solve for all rows
    V = cho_solve(fact, U.T)
    sigma = np.einsum("ij,ji->i", U, V)
    # 0.5 * log det H from the Cholesky diagonal, overflow-free
    F = float(np.sum(np.log(np.diag(fact[0]))))
    gradF = -(U.T @ sigma)
    return BarrierState(x=np.asarray(x, dtype=float).copy(), s=s, H=H, Hfact=fact,
                        sigma=sigma, F=F, gradF=gradF)


def _value_at_slacks(P: Polytope, s: np.ndarray) -> float:
    # F only, for line-search trials: no leverage solve needed
    U = P.A / s[:, None]
    fact = _factorize(U.T @ U)
    return float(np.sum(np.log(np.diag(fact[0]))))


def leverage_scores(P: Polytope, x: np.ndarray) -> np.ndarray:
    """sigma_i(x) per row, each in (0, 1], summing to n."""
    return barrier_state(P, x).sigma


def volumetric_value(P: Polytope, x: np.ndarray) -> float:
    """F(x) = 0.5 * log det H(x)."""
    return barrier_state(P, x).F


def volumetric_gradient(P: Polytope, x: np.ndarray) -> np.ndarray:
    """grad F(x) = -sum_i sigma_i a_i / s_i."""
    return barrier_state(P, x).gradF


def volumetric_center(P: Polytope, x0: np.ndarray, tol: float = 1e-8,
                      max_newton: int = 100) -> BarrierState:
    """Damped Newton minimization of F from a strictly interior start.

    The search direction is -Q^{-1} grad F with the SPD surrogate
    Q = sum_i sigma_i a_i a_i^T / s_i^2; backtracking halves the step until
    every trial slack exceeds 1e-12 of the current slack and F decreases
    (by an Armijo fraction of the prediction while that is resolvable in
    float64, plain damped steps beyond).  Stops when the decrement
    sqrt(gradF^T Q^{-1} gradF) <= tol or progress hits rounding.
    """
    if tol <= 0:
        raise InvalidArgument("tol must be positive")
    st = barrier_state(P, x0)
    floor = _interior_floor(P)
    decrement = np.inf
    prev_endgame_dec = np.inf
    for _ in range(max_newton):
        U = P.A / st.s[:, None]
        Q = U.T @ (st.sigma[:, None] * U)
        d = -cho_solve(_factorize(Q), st.gradF)
        dec_sq = max(-st.gradF @ d, 0.0)
        decrement = float(np.sqrt(dec_sq))
        if decrement <= tol:
            return st
        # float resolution of F: rounding of each log(s_i) is amplified by
        # cancellation when slacks are tiny relative to the row data
        f_noise = 1e-16 * float(np.sum((np.abs(P.A) @ np.abs(st.x) + np.abs(P.b) + 1.0) / st.s))
        if 0.25 * dec_sq > max(4e-15 * (1.0 + abs(st.F)), 64.0 * f_noise):
            # Armijo decrease: Q under-reports the true curvature (which
            # sits between Q and 3Q), so an undamped step can overshoot
            # while still lowering F slightly; requiring a fraction of the
            # predicted decrease forces the halving that keeps the rate
            # linear instead of zig-zagging.
            prev_endgame_dec = np.inf
            step = 1.0
            accepted = None
            for _ in range(60):
                x_try = st.x + step * d
                s_try = P.A @ x_try - P.b
                if np.all(s_try > np.maximum(1e-12 * st.s, floor)):
                    if _value_at_slacks(P, s_try) <= st.F - 0.25 * step * dec_sq:
                        accepted = x_try
                        break
                step *= 0.5
            if accepted is None:
                break  # no productive step left; decrement decides below
        else:
            # endgame: F differences are below float resolution, so accept a
            # fixed half step, which contracts for any Hessian in [Q, 3Q];
            # a decrement that stops shrinking here is pure rounding noise,
            # i.e. the center has been reached to working precision
            if decrement >= 0.95 * prev_endgame_dec:
                return st
            prev_endgame_dec = decrement
            step = 0.5
            accepted = None
            for _ in range(60):
                x_try = st.x + step * d
                s_try = P.A @ x_try - P.b
                if np.all(s_try > np.maximum(1e-12 * st.s, floor)):
                    accepted = x_try
                    break
                step *= 0.5
            if accepted is None:
                break
        st = barrier_state(P, accepted)
    if decrement > 10.0 * tol:
        raise CenteringFailed(
            f"Newton decrement {decrement:.3e} after {max_newton} steps (tol {tol:.1e})")
    return st


def add_constraint(P: Polytope, c: np.ndarray, beta: float) -> Polytope:
    """Append the row (c, beta); original rows keep order and bits."""
    c = np.asarray(c, dtype=float)
    if c.shape != (P.n,):
        raise DimensionMismatch(f"cut has shape {c.shape}, expected ({P.n},)")
    if np.linalg.norm(c) == 0.0:
        raise ZeroCutVector("cut vector must be nonzero")
    return Polytope(np.vstack([P.A, c[None, :]]), np.append(P.b, float(beta)))


def drop_constraint(P: Polytope, i: int) -> Polytope:
    """Remove row i; refuses to go below n+1 rows (boundedness guard)."""
    if not 0 <= i < P.m:
        raise InvalidArgument(f"row index {i} out of range [0, {P.m})")
    if P.m - 1 < P.n + 1:
        raise TooFewRows(f"cannot drop below {P.n + 1} rows")
    return Polytope(np.delete(P.A, i, axis=0), np.delete(P.b, i))


def box_polytope(n: int, half_width: float, center: np.ndarray | None = None) -> Polytope:
    """Axis-aligned box {|x_i - c_i| <= half_width} as 2n rows.

    Its volumetric center is the midpoint, a free exact warm start.
    """
    if half_width <= 0:
        raise InvalidArgument("half_width must be positive")
    # rows interleaved (+e_i, -e_i) per coordinate
    A = np.zeros((2 * n, n))
    for i in range(n):
        A[2 * i, i] = 1.0
        A[2 * i + 1, i] = -1.0
    b = -half_width * np.ones(2 * n)
    if center is not None:
        center = np.asarray(center, dtype=float)
        b = b + A @ center
    return Polytope(A, b)
