import math

import numpy as np
import pytest

from vaidya.errors import EmptyFile, InvalidArgument, NotSeparable, ParseError
from vaidya.problems import (
    BallSet,
    Dataset,
    LogisticOracle,
    SyntheticSpec,
    ball_membership,
    ball_separation,
    load_csv,
    logistic_loss,
    logistic_prob,
    logistic_subgrad,
    make_logistic_synthetic,
    make_synthetic,
    max_affine_minimum,
    mean_logistic_grad,
    mean_logistic_loss,
    subsample,
    train_test_split,
)


# --- logistic primitives ---------------------------------------------------

def test_prob_half_at_zero_weights():
    for x in (np.array([1.0, -3.0]), np.array([100.0, 2.0])):
        assert logistic_prob(np.zeros(2), x) == 0.5


def test_prob_extreme_logit_no_overflow():
    # at z = +40 the true value 1 - 4.25e-18 rounds to exactly 1.0 in float64;
    # the point is that no overflow occurs and the tail is exact at z = -40
    x = np.array([40.0])
    assert logistic_prob(np.array([1.0]), x) == 1.0
    assert logistic_prob(np.array([-1.0]), x) == pytest.approx(4.248354255291589e-18, rel=1e-12)


def test_prob_log3_value():
    assert logistic_prob(np.array([math.log(3.0)]), np.array([1.0])) == pytest.approx(0.75, rel=1e-14)


def test_loss_at_zero_weights_is_log2():
    assert logistic_loss(np.zeros(3), (np.array([1.0, 2.0, 3.0]), 1.0)) == pytest.approx(math.log(2.0))
    assert logistic_loss(np.zeros(3), (np.array([1.0, 2.0, 3.0]), 0.0)) == pytest.approx(math.log(2.0))


def test_loss_frozen_value():
    # y=1, <w,x> = 0.5 -> log(1 + e^-0.5)
    got = logistic_loss(np.array([0.5]), (np.array([1.0]), 1.0))
    assert got == pytest.approx(0.47407698418010663, rel=1e-14)


def test_loss_monotone_to_zero():
    losses = [logistic_loss(np.array([z]), (np.array([1.0]), 1.0)) for z in (1, 5, 20, 100)]
    assert all(a > b for a, b in zip(losses, losses[1:]))
    assert losses[-1] < 1e-40


def test_subgrad_half_x_at_zero():
    x = np.array([2.0, -1.0])
    assert np.allclose(logistic_subgrad(np.zeros(2), (x, 1.0)), -0.5 * x)


def test_subgrad_matches_finite_differences():
    rng = np.random.default_rng(0)
    h = 1e-6
    for _ in range(100):
        w = rng.normal(size=4)
        x = rng.normal(size=4)
        y = float(rng.integers(0, 2))
        g = logistic_subgrad(w, (x, y))
        fd = np.zeros(4)
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            fd[j] = (logistic_loss(w + e, (x, y)) - logistic_loss(w - e, (x, y))) / (2 * h)
        assert np.linalg.norm(g - fd) <= 1e-6 * max(1.0, np.linalg.norm(g))


def test_subgrad_vanishes_in_saturation():
    x = np.array([1.0])
    assert np.linalg.norm(logistic_subgrad(np.array([50.0]), (x, 1.0))) < 1e-20


def test_loss_convexity_random():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        w1, w2 = rng.normal(size=(2, 3))
        lam = rng.uniform()
        x = rng.normal(size=3)
        y = float(rng.integers(0, 2))
        lhs = logistic_loss(lam * w1 + (1 - lam) * w2, (x, y))
        rhs = lam * logistic_loss(w1, (x, y)) + (1 - lam) * logistic_loss(w2, (x, y))
        assert lhs <= rhs + 1e-12


def test_mean_grad_is_mean_of_per_sample(tmp_path):
    ds = make_logistic_synthetic(50, 6, seed=3)
    w = np.random.default_rng(4).normal(size=ds.dim)
    per_sample = np.mean([logistic_subgrad(w, (ds.X[i], ds.y[i])) for i in range(50)], axis=0)
    assert np.allclose(mean_logistic_grad(w, ds), per_sample, atol=1e-12)
    per_loss = np.mean([logistic_loss(w, (ds.X[i], ds.y[i])) for i in range(50)])
    assert mean_logistic_loss(w, ds) == pytest.approx(per_loss, abs=1e-12)


# --- ball set -----------------------------------------------------------------

def test_membership_boundary_inclusive():
    Q = BallSet(2.0)
    assert ball_membership(np.array([2.0, 0.0]), Q)
    assert not ball_membership(np.array([2.0 + 1e-9, 0.0]), Q)


def test_separation_hand_check():
    Q = BallSet(1.0)
    c = ball_separation(np.array([2.0, 0.0]), Q)
    assert np.allclose(c, [-1.0, 0.0])
    for q in ([1, 0], [-1, 0], [0, 1], [0, -1], [0, 0]):
        assert c @ (np.array(q, dtype=float) - np.array([2.0, 0.0])) >= 0


def test_separation_monte_carlo():
    rng = np.random.default_rng(5)
    Q = BallSet(1.5)
    x = rng.normal(size=3)
    x *= 2.5 / np.linalg.norm(x)
    c = ball_separation(x, Q)
    pts = rng.normal(size=(10 ** 4, 3))
    pts *= (rng.uniform(0, Q.radius, size=10 ** 4) / np.linalg.norm(pts, axis=1))[:, None]
    assert np.min((pts - x) @ c) >= -1e-12


def test_separation_rejects_interior():
    with pytest.raises(NotSeparable):
        ball_separation(np.array([0.5, 0.0]), BallSet(1.0))


# --- CSV ingestion ---------------------------------------------------------------

def test_load_csv_small_fixture(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("1,2,1\n3,4,0\n5,6,1\n")
    ds = load_csv(str(p), binarize=False, standardize=False)
    assert ds.X.shape == (3, 3)
    assert np.all(ds.X[:, -1] == 1.0)
    assert np.array_equal(ds.y, [1.0, 0.0, 1.0])
    assert np.array_equal(ds.X[:, 0], [1.0, 3.0, 5.0])


def test_load_csv_covertype_layout_and_binarization(tmp_path):
    rng = np.random.default_rng(6)
    rows = []
    for _ in range(40):
        feats = rng.normal(size=54)
        label = rng.integers(1, 8)
        rows.append(",".join([f"{v:.6f}" for v in feats] + [str(label)]))
    p = tmp_path / "cov.csv"
    p.write_text("\n".join(rows) + "\n")
    ds = load_csv(str(p))
    assert ds.dim == 55  # 54 raw features + constant
    raw_labels = np.loadtxt(str(p), delimiter=",")[:, -1]
    assert np.array_equal(ds.y, (raw_labels == 2).astype(float))


def test_load_csv_standardization(tmp_path):
    rng = np.random.default_rng(7)
    X = rng.normal(loc=3.0, scale=5.0, size=(200, 4))
    y = rng.integers(0, 2, size=200)
    p = tmp_path / "s.csv"
    p.write_text("\n".join(",".join(f"{v}" for v in row) + f",{lab}" for row, lab in zip(X, y)))
    ds = load_csv(str(p), binarize=False)
    assert np.all(np.abs(ds.X[:, :-1].mean(axis=0)) <= 1e-10)
    assert np.allclose(ds.X[:, :-1].var(axis=0), 1.0, atol=1e-8)
    assert np.all(ds.X[:, -1] == 1.0)


def test_load_csv_parse_error_locates_cell(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2,0\n3,oops,1\n")
    with pytest.raises(ParseError, match=r"row 2, column 2"):
        load_csv(str(p))


def test_load_csv_empty_file(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    with pytest.raises(EmptyFile):
        load_csv(str(p))


def test_load_csv_header_skip(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("a,b,label\n1,2,1\n3,4,0\n")
    ds = load_csv(str(p), header=True, binarize=False, standardize=False)
    assert ds.n_samples == 2


def test_dataset_roundtrip(tmp_path):
    rng = np.random.default_rng(8)
    X = np.round(rng.normal(size=(20, 3)), 6)
    y = rng.integers(0, 2, size=20).astype(float)
    p = tmp_path / "rt.csv"
    p.write_text("\n".join(",".join(f"{v:.6f}" for v in row) + f",{int(lab)}"
                           for row, lab in zip(X, y)))
    ds = load_csv(str(p), binarize=False, standardize=False)
    assert np.array_equal(ds.X[:, :-1], X)
    assert np.array_equal(ds.y, y)


# --- splitting -------------------------------------------------------------------

def test_split_sizes_and_disjoint():
    ds = make_logistic_synthetic(10, 3, seed=0)
    train, test = train_test_split(ds, 0.2, seed=1, standardize=False)
    assert test.n_samples == 2 and train.n_samples == 8
    joined = np.vstack([train.X, test.X])
    assert joined.shape[0] == 10
    # each original row appears exactly once
    orig = {tuple(r) for r in ds.X}
    assert {tuple(r) for r in joined} == orig


def test_split_seed_determinism():
    ds = make_logistic_synthetic(100, 4, seed=0)
    a1 = train_test_split(ds, 0.3, seed=5)[0].X
    a2 = train_test_split(ds, 0.3, seed=5)[0].X
    b = train_test_split(ds, 0.3, seed=6)[0].X
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, b)


def test_split_covertype_test_size():
    assert math.ceil(0.2 * 581012) == 116203


def test_split_standardizes_on_train_stats():
    ds = make_logistic_synthetic(500, 6, seed=2)
    train, test = train_test_split(ds, 0.2, seed=3)
    assert np.all(np.abs(train.X[:, :-1].mean(axis=0)) <= 1e-10)
    # test stats only approximately standard (train statistics applied)
    assert np.all(np.abs(test.X[:, :-1].mean(axis=0)) <= 0.5)


def test_split_rejects_bad_frac():
    ds = make_logistic_synthetic(10, 3, seed=0)
    with pytest.raises(InvalidArgument):
        train_test_split(ds, 1.2, seed=0)


def test_subsample_seeded():
    ds = make_logistic_synthetic(100, 3, seed=0)
    s1 = subsample(ds, 30, seed=4)
    s2 = subsample(ds, 30, seed=4)
    assert s1.n_samples == 30
    assert np.array_equal(s1.X, s2.X)


# --- synthetic instances ------------------------------------------------------

def test_quadratic_sigma_zero_oracle_exact():
    prob = make_synthetic(SyntheticSpec(kind="noisy_quadratic", n=3, sigma=0.0, seed=1,
                                        target=np.array([1.0, 0.0, -1.0]), radius=3.0))
    assert prob.f_star == 0.0
    assert prob.exact_f(prob.x_star) == 0.0
    v, g = prob.oracle.sample(np.zeros(3), seed=99)
    assert v == pytest.approx(prob.exact_f(np.zeros(3)))
    assert np.allclose(g, prob.exact_subgrad(np.zeros(3)))


def test_quadratic_satisfies_subgaussian_moment():
    # E ||noise||^2 = n sigma^2 for the additive-noise model
    prob = make_synthetic(SyntheticSpec(kind="noisy_quadratic", n=4, sigma=1.0, seed=2))
    x = np.full(4, 0.1)
    exact = prob.exact_subgrad(x)
    from vaidya.stochastic import sample_seeds

    _, grads = prob.oracle.sample_batch(x, sample_seeds(0, 20000))
    sq = np.sum((grads - exact) ** 2, axis=1)
    assert sq.mean() == pytest.approx(4.0, rel=0.05)


def test_max_affine_instance_consistency():
    prob = make_synthetic(SyntheticSpec(kind="noisy_max_affine", n=2, sigma=0.0, seed=3))
    # optimum strictly inside and consistent with the exact function
    assert np.linalg.norm(prob.x_star) < prob.ball.radius
    assert prob.exact_f(prob.x_star) == pytest.approx(prob.f_star, abs=1e-9)
    assert prob.B > 0


def test_max_affine_grid_oracle():
    prob = make_synthetic(SyntheticSpec(kind="noisy_max_affine", n=2, sigma=0.0, seed=4))
    G, c = prob.oracle.G, prob.oracle.c
    step = 1e-3
    xs = np.arange(-prob.ball.radius, prob.ball.radius + step, step)
    GX, GY = np.meshgrid(xs, xs, indexing="ij")
    pts = np.stack([GX.ravel(), GY.ravel()], axis=1)
    pts = pts[np.linalg.norm(pts, axis=1) <= prob.ball.radius]
    vals = np.max(pts @ G.T + c, axis=1)
    assert prob.f_star == pytest.approx(vals.min(), abs=1e-3)


def test_max_affine_vertex_enumeration_on_known_instance():
    # |x_1| + |x_2| has minimum 0 at the origin, realized by 4 pieces
    G = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    c = np.zeros(4)
    x, t = max_affine_minimum(G, c)
    assert np.allclose(x, 0.0, atol=1e-12)
    assert t == pytest.approx(0.0, abs=1e-12)


def test_synthetic_spec_validation():
    with pytest.raises(InvalidArgument):
        SyntheticSpec(kind="nope", n=2, sigma=0.0)
    with pytest.raises(InvalidArgument):
        SyntheticSpec(kind="noisy_quadratic", n=0, sigma=1.0)


def test_logistic_synthetic_shape():
    ds = make_logistic_synthetic(1000, 54, seed=0)
    assert ds.dim == 55
    assert set(np.unique(ds.y)) <= {0.0, 1.0}
    assert 0.15 < ds.y.mean() < 0.85


def test_logistic_oracle_unbiased_for_train_mean():
    ds = make_logistic_synthetic(300, 8, seed=1)
    oracle = LogisticOracle(ds, sigma=1.0, radius=5.0)
    w = np.random.default_rng(2).normal(size=ds.dim) * 0.2
    from vaidya.stochastic import sample_seeds

    vals, grads = oracle.sample_batch(w, sample_seeds(7, 30000))
    assert vals.mean() == pytest.approx(mean_logistic_loss(w, ds), rel=0.02)
    exact = mean_logistic_grad(w, ds)
    se = grads.std(axis=0) / np.sqrt(len(grads))
    assert np.all(np.abs(grads.mean(axis=0) - exact) <= 5 * se + 1e-12)


def test_dataset_validates_constant_column():
    with pytest.raises(InvalidArgument):
        Dataset(X=np.ones((3, 2)) * 2.0, y=np.zeros(3))
