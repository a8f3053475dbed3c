"""Concrete problem instances and oracle adapters.

Covers logistic regression over a Euclidean ball (the benchmark problem),
the ball's membership/separation oracle, CSV ingestion with train-only
standardization, and seeded synthetic instances with known optima for
ground-truth testing.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cutting_plane import CutKind, CutResponse
from .errors import (
    EmptyFile,
    InvalidArgument,
    NotSeparable,
    ParseError,
)
from .geometry import Polytope, box_polytope
from .stochastic import (
    StochasticOracle,
    derive_seed,
    estimate_value,
    minibatch_subgradient,
    standard_normals,
    uniform_indices,
)

COVERTYPE_URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/covtype/covtype.data.gz"
COVERTYPE_ROWS = 581012
COVERTYPE_RAW_FEATURES = 54


# ---------------------------------------------------------------------------
# datasets


@dataclass(eq=False)
class Dataset:
    """Feature matrix with a trailing constant-1 column and {0,1} labels."""

    X: np.ndarray
    y: np.ndarray
    feature_names: list[str] | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2 or self.X.shape[0] < 1:
            raise InvalidArgument("X must be a nonempty 2-D matrix")
        if self.y.shape != (self.X.shape[0],):
            raise InvalidArgument("y length must match X rows")
        if not np.all(np.isfinite(self.X)):
            raise InvalidArgument("X contains NaN/Inf")
        if not np.all(np.isin(self.y, (0.0, 1.0))):
            raise InvalidArgument("labels must be 0 or 1")
        if not np.all(self.X[:, -1] == 1.0):
            raise InvalidArgument("last column must be the constant feature 1")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def _standardize_features(X: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    out = X.copy()
    out[:, :-1] = (X[:, :-1] - mean) / std
    return out


def _train_stats(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # stats over the raw (non-constant) columns; degenerate columns keep scale 1
    mean = X[:, :-1].mean(axis=0)
    std = X[:, :-1].std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return mean, std


def load_csv(path: str, label_column: int = -1, positive_class: float = 2,
             header: bool = False, standardize: bool = True,
             binarize: bool = True) -> Dataset:
    """Parse a numeric CSV into a Dataset with the constant feature appended.

    The default binarization maps raw class == positive_class to label 1
    (Covertype convention: class 2 vs rest).  When this loader feeds a
    train/test split, pass standardize=False and let the split standardize
    on train statistics only.
    """
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # empty input warns; handled below
            raw = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    except ValueError:
        _raise_parse_error(path, header)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if raw.size == 0:
        raise EmptyFile(f"{path} contains no data rows")
    if not np.all(np.isfinite(raw)):
        bad = np.argwhere(~np.isfinite(raw))[0]
        raise ParseError(f"{path}: non-finite value at row {bad[0] + 1}, column {bad[1] + 1}")
    label_column = label_column % raw.shape[1]
    labels = raw[:, label_column]
    feats = np.delete(raw, label_column, axis=1)
    if binarize:
        y = (labels == positive_class).astype(float)
    else:
        y = labels.astype(float)
        if not np.all(np.isin(y, (0.0, 1.0))):
            raise ParseError(f"{path}: labels are not in {{0,1}}; enable binarization")
    X = np.hstack([feats, np.ones((feats.shape[0], 1))])
    if standardize:
        mean, std = _train_stats(X)
        X = _standardize_features(X, mean, std)
    return Dataset(X=X, y=y)


def _raise_parse_error(path: str, header: bool):
    # slow path only on failure: locate the offending cell for the message
    with open(path) as fh:
        lines = fh.read().splitlines()
    if header:
        lines = lines[1:]
    if not any(line.strip() for line in lines):
        raise EmptyFile(f"{path} contains no data rows")
    for i, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        for j, cell in enumerate(line.split(","), start=1):
            try:
                float(cell)
            except ValueError:
                raise ParseError(f"{path}: cannot parse {cell!r} at row {i}, column {j}") from None
    raise ParseError(f"{path}: malformed CSV (inconsistent row lengths?)")


def train_test_split(ds: Dataset, test_frac: float, seed: int,
                     standardize: bool = True) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, split ceil(N*frac)/remainder, standardize on train stats."""
    if not 0.0 < test_frac < 1.0:
        raise InvalidArgument("test_frac must lie in (0, 1)")
    n = ds.n_samples
    perm = np.random.default_rng(seed).permutation(n)
    n_test = math.ceil(n * test_frac)
    if n_test >= n:
        raise InvalidArgument("test_frac leaves an empty training split")
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    Xtr, Xte = ds.X[train_idx], ds.X[test_idx]
    if standardize:
        mean, std = _train_stats(Xtr)
        Xtr = _standardize_features(Xtr, mean, std)
        Xte = _standardize_features(Xte, mean, std)
    return (Dataset(X=Xtr, y=ds.y[train_idx], feature_names=ds.feature_names),
            Dataset(X=Xte, y=ds.y[test_idx], feature_names=ds.feature_names))


def subsample(ds: Dataset, n_rows: int, seed: int) -> Dataset:
    """Seeded uniform subsample without replacement (desk-scale runs)."""
    if n_rows >= ds.n_samples:
        return ds
    idx = np.random.default_rng(seed).choice(ds.n_samples, size=n_rows, replace=False)
    return Dataset(X=ds.X[idx], y=ds.y[idx], feature_names=ds.feature_names)


# ---------------------------------------------------------------------------
# logistic regression


def logistic_prob(w: np.ndarray, x: np.ndarray) -> float:
    """Stable sigmoid of <w, x>."""
    z = float(np.dot(w, x))
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def logistic_loss(w: np.ndarray, sample: tuple[np.ndarray, float]) -> float:
    """Negated cross-entropy -[y ln p + (1-y) ln(1-p)], log1p-exp form."""
    x, y = sample
    z = float(np.dot(w, x))
    # max(z,0) - z*y + log(1+exp(-|z|)) is exact for y in {0,1}
    return max(z, 0.0) - z * y + math.log1p(math.exp(-abs(z)))


def logistic_subgrad(w: np.ndarray, sample: tuple[np.ndarray, float]) -> np.ndarray:
    """(p - y) x, the gradient of logistic_loss at w."""
    x, y = sample
    return (logistic_prob(w, x) - y) * np.asarray(x, dtype=float)


def _losses_vec(Z: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.maximum(Z, 0.0) - Z * y + np.log1p(np.exp(-np.abs(Z)))


def mean_logistic_loss(w: np.ndarray, ds: Dataset) -> float:
    """Mean loss over a dataset (the measured test quantity)."""
    return float(_losses_vec(ds.X @ w, ds.y).mean())


def mean_logistic_grad(w: np.ndarray, ds: Dataset) -> np.ndarray:
    Z = ds.X @ w
    p = np.where(Z >= 0, 1.0 / (1.0 + np.exp(-np.abs(Z))),
                 np.exp(-np.abs(Z)) / (1.0 + np.exp(-np.abs(Z))))
    return ds.X.T @ (p - ds.y) / ds.n_samples


# ---------------------------------------------------------------------------
# feasible set


@dataclass(frozen=True)
class BallSet:
    """Euclidean ball of radius R; for a ball the inner radius rho equals R."""

    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise InvalidArgument("radius must be positive")

    @property
    def rho(self) -> float:
        return self.radius


def ball_membership(x: np.ndarray, Q: BallSet) -> bool:
    return bool(np.linalg.norm(x) <= Q.radius)


def ball_separation(x: np.ndarray, Q: BallSet) -> np.ndarray:
    """c = -x/|x|, satisfying c^T (q - x) >= 0 for every q in the ball."""
    norm = float(np.linalg.norm(x))
    if norm <= Q.radius:
        raise NotSeparable("point is inside the ball")
    return -np.asarray(x, dtype=float) / norm


def make_initial_box(n: int, Q: BallSet, margin: float = 1.05) -> Polytope:
    """Axis-aligned starting localizer enclosing the ball, centered at 0.

    The box's volumetric center is its midpoint, a free exact warm start.
    """
    return box_polytope(n, margin * Q.radius)


# ---------------------------------------------------------------------------
# stochastic oracles


class _OracleBase:
    """Shared single-sample path: delegate to the vectorized batch."""

    sigma: float
    radius: float
    dim: int

    def sample(self, x: np.ndarray, seed: int) -> tuple[float, np.ndarray]:
        v, g = self.sample_batch(np.asarray(x, dtype=float),
                                 np.asarray([seed], dtype=np.uint64))
        return float(v[0]), g[0]


class NoisyQuadraticOracle(_OracleBase):
    """f(x) = |x - x*|^2 with N(0, sigma^2 I) noise on value and subgradient."""

    def __init__(self, x_star: np.ndarray, sigma: float, radius: float):
        self.x_star = np.asarray(x_star, dtype=float)
        self.sigma = float(sigma)
        self.radius = float(radius)
        self.dim = self.x_star.shape[0]

    def exact_value(self, x: np.ndarray) -> float:
        d = np.asarray(x, dtype=float) - self.x_star
        return float(d @ d)

    def exact_subgrad(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * (np.asarray(x, dtype=float) - self.x_star)

    def sample_batch(self, x, seeds):
        n = self.dim
        r = len(seeds)
        g = np.broadcast_to(self.exact_subgrad(x), (r, n)).copy()
        v = np.full(r, self.exact_value(x))
        if self.sigma > 0.0:
            z = standard_normals(seeds, n + 1)
            g += self.sigma * z[:, :n]
            v += self.sigma * z[:, n]
        return v, g


class NoisyMaxAffineOracle(_OracleBase):
    """f(x) = max_i (<g_i, x> + c_i), noise added to the active-piece data."""

    def __init__(self, G: np.ndarray, c: np.ndarray, sigma: float, radius: float):
        self.G = np.asarray(G, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.sigma = float(sigma)
        self.radius = float(radius)
        self.dim = self.G.shape[1]

    def exact_value(self, x: np.ndarray) -> float:
        return float(np.max(self.G @ np.asarray(x, dtype=float) + self.c))

    def exact_subgrad(self, x: np.ndarray) -> np.ndarray:
        i = int(np.argmax(self.G @ np.asarray(x, dtype=float) + self.c))
        return self.G[i].copy()

    def sample_batch(self, x, seeds):
        n = self.dim
        r = len(seeds)
        g = np.broadcast_to(self.exact_subgrad(x), (r, n)).copy()
        v = np.full(r, self.exact_value(x))
        if self.sigma > 0.0:
            z = standard_normals(seeds, n + 1)
            g += self.sigma * z[:, :n]
            v += self.sigma * z[:, n]
        return v, g


class LogisticOracle(_OracleBase):
    """One uniformly drawn training sample per seed.

    sigma is a caller-supplied scale estimate of the gradient noise; the
    expectation of the per-sample loss equals the full-train mean loss.
    """

    def __init__(self, train: Dataset, sigma: float, radius: float):
        self.train = train
        self.sigma = float(sigma)
        self.radius = float(radius)
        self.dim = train.dim

    def exact_value(self, w: np.ndarray) -> float:
        return mean_logistic_loss(w, self.train)

    def exact_subgrad(self, w: np.ndarray) -> np.ndarray:
        return mean_logistic_grad(w, self.train)

    def sample_batch(self, w, seeds):
        idx = uniform_indices(seeds, self.train.n_samples)
        X = self.train.X[idx]
        y = self.train.y[idx]
        Z = X @ w
        values = _losses_vec(Z, y)
        absZ = np.abs(Z)
        p = np.where(Z >= 0, 1.0 / (1.0 + np.exp(-absZ)),
                     np.exp(-absZ) / (1.0 + np.exp(-absZ)))
        grads = (p - y)[:, None] * X
        return values, grads


# ---------------------------------------------------------------------------
# cut oracles for the loop


class StochasticCutOracle:
    """Wrap a ball and a stochastic oracle into the loop's query interface.

    Outside the ball: separation cut.  Inside: c = -(minibatch subgradient)
    plus a value estimate from the disjoint value-seed domain; both batches
    derive their base seed from (master_seed, k).
    """

    def __init__(self, oracle: StochasticOracle, ball: BallSet, grad_batch: int,
                 value_batch: int | None = None, master_seed: int = 0,
                 threads: int = 1):
        if grad_batch < 1:
            raise InvalidArgument("grad_batch must be >= 1")
        self.oracle = oracle
        self.ball = ball
        self.grad_batch = grad_batch
        self.value_batch = value_batch if value_batch is not None else grad_batch
        self.master_seed = master_seed
        self.threads = threads
        self.samples_drawn = 0

    def query(self, x: np.ndarray, k: int) -> CutResponse:
        if not ball_membership(x, self.ball):
            return CutResponse(CutKind.SEPARATION, ball_separation(x, self.ball))
        base = derive_seed(self.master_seed, k)
        _, g = minibatch_subgradient(self.oracle, x, self.grad_batch, base,
                                     threads=self.threads)
        self.samples_drawn += self.grad_batch
        value = estimate_value(self.oracle, x, self.value_batch, base,
                               threads=self.threads)
        self.samples_drawn += self.value_batch
        return CutResponse(CutKind.OBJECTIVE, -g, value_estimate=value)

    def estimate(self, x: np.ndarray, k: int) -> float:
        base = derive_seed(self.master_seed, k)
        self.samples_drawn += self.value_batch
        return estimate_value(self.oracle, x, self.value_batch, base,
                              threads=self.threads)


class ExactCutOracle:
    """Deterministic problem: exact f and subgradient, one call per query."""

    def __init__(self, f: Callable[[np.ndarray], float],
                 subgrad: Callable[[np.ndarray], np.ndarray], ball: BallSet):
        self.f = f
        self.subgrad = subgrad
        self.ball = ball
        self.samples_drawn = 0

    def query(self, x: np.ndarray, k: int) -> CutResponse:
        self.samples_drawn += 1
        if not ball_membership(x, self.ball):
            return CutResponse(CutKind.SEPARATION, ball_separation(x, self.ball))
        return CutResponse(CutKind.OBJECTIVE, -self.subgrad(x),
                           value_estimate=self.f(x))

    def estimate(self, x: np.ndarray, k: int) -> float:
        self.samples_drawn += 1
        return self.f(x)


# ---------------------------------------------------------------------------
# synthetic instances


@dataclass
class SyntheticSpec:
    """Seeded recipe for a ground-truth stochastic test problem."""

    kind: str  # "noisy_quadratic" | "noisy_max_affine"
    n: int
    sigma: float
    seed: int = 0
    radius: float = 1.0
    pieces: int | None = None  # max-affine only; default n+2
    target: np.ndarray | None = None  # quadratic only; default seeded inside

    def __post_init__(self):
        if self.kind not in ("noisy_quadratic", "noisy_max_affine"):
            raise InvalidArgument(f"unknown synthetic kind {self.kind!r}")
        if self.n < 1 or self.sigma < 0 or self.radius <= 0:
            raise InvalidArgument("need n >= 1, sigma >= 0, radius > 0")


@dataclass(eq=False)
class SyntheticProblem:
    oracle: StochasticOracle
    exact_f: Callable[[np.ndarray], float]
    exact_subgrad: Callable[[np.ndarray], np.ndarray]
    x_star: np.ndarray
    f_star: float
    B: float  # objective range over the ball
    ball: BallSet


def max_affine_minimum(G: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, float]:
    """Brute-force the epigraph LP by enumerating (n+1)-subsets of pieces.

    Valid when the minimum is attained where n+1 pieces are active, i.e.
    when 0 lies in the interior of conv{g_i}; raises otherwise.
    """
    m, n = G.shape
    best_x, best_t = None, math.inf
    for S in itertools.combinations(range(m), n + 1):
        M = np.hstack([G[list(S)], -np.ones((n + 1, 1))])
        try:
            sol = np.linalg.solve(M, -c[list(S)])
        except np.linalg.LinAlgError:
            continue
        x, t = sol[:n], sol[n]
        if np.max(G @ x + c) <= t + 1e-9 and t < best_t:
            best_x, best_t = x, t
    if best_x is None:
        raise InvalidArgument("max-affine instance has no interior minimum")
    return best_x, float(best_t)


def make_synthetic(spec: SyntheticSpec) -> SyntheticProblem:
    """Build the oracle plus exact references (optimum strictly inside Q)."""
    ball = BallSet(spec.radius)
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "noisy_quadratic":
        if spec.target is not None:
            x_star = np.asarray(spec.target, dtype=float)
        else:
            d = rng.normal(size=spec.n)
            x_star = (0.5 * spec.radius * rng.uniform(0.3, 1.0)) * d / np.linalg.norm(d)
        if np.linalg.norm(x_star) >= spec.radius:
            raise InvalidArgument("target must lie strictly inside the ball")
        oracle = NoisyQuadraticOracle(x_star, spec.sigma, spec.radius)
        B = (spec.radius + float(np.linalg.norm(x_star))) ** 2
        return SyntheticProblem(oracle=oracle, exact_f=oracle.exact_value,
                                exact_subgrad=oracle.exact_subgrad, x_star=x_star,
                                f_star=0.0, B=B, ball=ball)
    pieces = spec.pieces if spec.pieces is not None else spec.n + 2
    if pieces < spec.n + 1:
        raise InvalidArgument("max-affine needs at least n+1 pieces for a bounded minimum")
    for attempt in range(64):
        gen = np.random.default_rng(derive_seed(spec.seed, attempt, tag=0x5A))
        G = gen.normal(size=(pieces, spec.n))
        G -= G.mean(axis=0)  # 0 in conv{g_i}: bounded below
        c = gen.normal(size=pieces)
        try:
            x_star, f_star = max_affine_minimum(G, c)
        except InvalidArgument:
            continue
        if np.linalg.norm(x_star) <= 0.75 * spec.radius:
            break
    else:
        raise InvalidArgument("could not generate a max-affine instance with interior optimum")
    oracle = NoisyMaxAffineOracle(G, c, spec.sigma, spec.radius)
    sup = float(np.max(c + spec.radius * np.linalg.norm(G, axis=1)))
    return SyntheticProblem(oracle=oracle, exact_f=oracle.exact_value,
                            exact_subgrad=oracle.exact_subgrad, x_star=x_star,
                            f_star=f_star, B=sup - f_star, ball=ball)


def make_logistic_synthetic(n_rows: int, n_features: int = COVERTYPE_RAW_FEATURES,
                            seed: int = 0) -> Dataset:
    """Seeded stand-in for the benchmark table, matching its shape: a block of
    correlated continuous columns followed by groups of one-hot indicators
    with skewed category frequencies (so the design is strongly anisotropic
    even after standardization).  Labels are Bernoulli from a hidden weight
    vector; the constant column is appended last."""
    if n_rows < 2 or n_features < 1:
        raise InvalidArgument("need n_rows >= 2 and n_features >= 1")
    rng = np.random.default_rng(seed)
    n_cont = min(10, n_features)
    cols = []
    # correlated continuous block with mixed scales
    mix = rng.normal(size=(n_cont, n_cont))
    scales = np.exp(rng.uniform(-1.5, 1.5, size=n_cont))
    cols.append(rng.normal(size=(n_rows, n_cont)) @ (mix * scales))
    w_blocks = [rng.normal(size=n_cont) / np.maximum(np.abs(cols[0]).std(axis=0), 1.0)]
    remaining = n_features - n_cont
    while remaining > 0:
        group = min(int(rng.integers(6, 14)), remaining)
        weights = rng.uniform(0.25, 1.0, size=group) ** 6  # a few rare categories
        weights /= weights.sum()
        draws = rng.choice(group, size=n_rows, p=weights)
        onehot = np.zeros((n_rows, group))
        onehot[np.arange(n_rows), draws] = 1.0
        cols.append(onehot)
        # indicator weights are sizable so rare categories carry real signal
        w_blocks.append(rng.normal(size=group) * 0.7)
        remaining -= group
    X = np.hstack(cols)[:, :n_features]
    w = np.concatenate(w_blocks)[:n_features]
    bias = rng.normal() * 0.2
    p = 1.0 / (1.0 + np.exp(-(X @ w + bias)))
    y = (rng.uniform(size=n_rows) < p).astype(float)
    X = np.hstack([X, np.ones((n_rows, 1))])
    return Dataset(X=X, y=y)
