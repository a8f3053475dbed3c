import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vaidya.baseline import SgdConfig, project_ball, run_sgd
from vaidya.errors import InvalidArgument
from vaidya.problems import NoisyQuadraticOracle, SyntheticSpec, make_synthetic


def test_project_inside_unchanged():
    x = np.array([0.3, -0.4])
    assert project_ball(x, 1.0) is not None
    assert np.array_equal(project_ball(x, 1.0), x)


def test_project_known_normalization():
    assert np.allclose(project_ball(np.array([3.0, 4.0]), 1.0), [0.6, 0.8])


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=6), st.floats(0.1, 10))
@settings(max_examples=60, deadline=None)
def test_project_idempotent(vals, R):
    x = np.asarray(vals)
    once = project_ball(x, R)
    assert np.linalg.norm(once) <= R + 1e-12
    assert np.allclose(project_ball(once, R), once)


def test_sgd_zero_noise_quadratic_converges():
    prob = make_synthetic(SyntheticSpec(kind="noisy_quadratic", n=2, sigma=0.0, seed=1,
                                        target=np.array([0.4, -0.2])))
    cfg = SgdConfig(step_size=0.1, batch=1, iterations=200, radius=1.0, seed=0)
    res = run_sgd(prob.oracle, cfg)
    assert prob.exact_f(res.final_point) - prob.f_star <= 1e-3


def test_sgd_zero_step_stays_at_origin():
    o = NoisyQuadraticOracle(np.array([0.5, 0.5]), sigma=1.0, radius=1.0)
    res = run_sgd(o, SgdConfig(step_size=0.0, batch=4, iterations=10, radius=1.0, seed=3))
    assert np.array_equal(res.final_point, np.zeros(2))
    assert all(np.array_equal(r.x, np.zeros(2)) for r in res.trace)


def test_sgd_deterministic_same_seed():
    o = NoisyQuadraticOracle(np.array([0.3, 0.0, -0.3]), sigma=0.8, radius=1.0)
    cfg = SgdConfig(step_size=0.05, batch=8, iterations=40, radius=1.0, seed=7)
    r1, r2 = run_sgd(o, cfg), run_sgd(o, cfg)
    assert np.array_equal(r1.final_point, r2.final_point)
    assert all(np.array_equal(a.x, b.x) for a, b in zip(r1.trace, r2.trace))
    assert [a.value_estimate for a in r1.trace] == [b.value_estimate for b in r2.trace]
    r3 = run_sgd(o, SgdConfig(step_size=0.05, batch=8, iterations=40, radius=1.0, seed=8))
    assert not np.array_equal(r1.final_point, r3.final_point)


def test_sgd_iterates_stay_in_ball():
    o = NoisyQuadraticOracle(np.array([5.0, 5.0]), sigma=2.0, radius=0.5)
    res = run_sgd(o, SgdConfig(step_size=0.5, batch=2, iterations=100, radius=0.5, seed=1))
    for r in res.trace:
        assert np.linalg.norm(r.x) <= 0.5 + 1e-12
    assert np.linalg.norm(res.final_point) <= 0.5 + 1e-12


def test_sgd_trace_schema():
    o = NoisyQuadraticOracle(np.zeros(2), sigma=0.5, radius=1.0)
    res = run_sgd(o, SgdConfig(step_size=0.1, batch=4, iterations=5, radius=1.0, seed=0))
    assert len(res.trace) == 5
    for i, r in enumerate(res.trace):
        assert r.k == i + 1 and r.action == "step" and r.m is None
        assert r.value_estimate is not None
        assert r.cum_samples == 8 * (i + 1)  # grad batch + value batch
    assert res.total_oracle_calls == 40


def test_sgd_best_tracking():
    o = NoisyQuadraticOracle(np.array([0.2, 0.2]), sigma=0.0, radius=1.0)
    res = run_sgd(o, SgdConfig(step_size=0.1, batch=1, iterations=50, radius=1.0, seed=0))
    vals = [r.value_estimate for r in res.trace]
    assert res.best_value_estimate == min(vals)


def test_sgd_config_validation():
    with pytest.raises(InvalidArgument):
        SgdConfig(step_size=-0.1, batch=1, iterations=1, radius=1.0)
    with pytest.raises(InvalidArgument):
        SgdConfig(step_size=0.1, batch=0, iterations=1, radius=1.0)
