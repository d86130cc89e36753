import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bridgeqrc.channels import N_ANGLES, bridge_diagnostics, bridge_ptm, ptm_l1
from bridgeqrc.cli import PUBLISHED_GAMMA, PUBLISHED_THETA
from bridgeqrc.optimize import (
    PURIFIER_SENTINEL,
    OptimizationDiverged,
    OptimizerConfig,
    adam_minimize,
    bridge_objective,
    finite_diff_gradient,
    optimize_bridge,
    optimize_purifier,
    purification_objective,
)

seeds = st.integers(0, 2**32 - 1)


def test_fd_gradient_of_constant_and_linear():
    a = np.array([1.5, -2.0, 0.25])
    x = np.array([0.3, 0.1, -0.7])
    assert np.all(finite_diff_gradient(lambda z: 4.0, x) == 0)
    assert np.allclose(finite_diff_gradient(lambda z: a @ z, x), a, atol=1e-10)


@given(seeds)
def test_fd_gradient_of_square_norm(seed):
    x = np.random.default_rng(seed).normal(size=5)
    assert np.allclose(finite_diff_gradient(lambda z: z @ z, x, 1e-4), 2 * x, atol=1e-6)


def test_fd_gradient_rejects_non_finite():
    with pytest.raises(OptimizationDiverged):
        finite_diff_gradient(lambda z: np.inf, np.zeros(2))


@pytest.mark.parametrize(
    "kw", [dict(learning_rate=0), dict(beta1=1.0), dict(beta2=0.0), dict(fd_step=0), dict(mode="spectral")]
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        OptimizerConfig(**kw)


def test_adam_converges_on_convex_bowl():
    rng = np.random.default_rng(0)
    c = rng.normal(size=4)
    cfg = OptimizerConfig(learning_rate=0.05, max_iters=2000, patience=0)
    for _ in range(20):
        x, trace = adam_minimize(lambda z: np.sum((z - c) ** 2), rng.normal(scale=3, size=4), cfg)
        assert np.linalg.norm(x - c) < 1e-3


def test_adam_rosenbrock():
    def rosen(z):
        return (1 - z[0]) ** 2 + 100 * (z[1] - z[0] ** 2) ** 2

    x, trace = adam_minimize(rosen, [-1.2, 1.0], OptimizerConfig(max_iters=20_000, patience=0))
    assert trace.best_value < 1e-2
    assert np.linalg.norm(x - 1) < 0.2


@given(seeds)
def test_adam_best_seen_contract(seed):
    rng = np.random.default_rng(seed)
    x0 = rng.normal(size=3)
    f = lambda z: np.sin(3 * z).sum() + 0.1 * z @ z  # noqa: E731
    x, trace = adam_minimize(f, x0, OptimizerConfig(max_iters=50, learning_rate=0.2))
    assert trace.best_value <= f(x0)
    assert trace.best_value == min(trace.values)
    assert f(x) == trace.best_value


def test_adam_reports_divergence():
    f = lambda z: np.nan if z[0] > 0.05 else -z[0]  # noqa: E731
    with pytest.raises(OptimizationDiverged):
        adam_minimize(f, [0.0], OptimizerConfig(learning_rate=0.1, max_iters=100))


def test_adam_patience_stops_early():
    _, trace = adam_minimize(lambda z: 1.0, [0.0], OptimizerConfig(max_iters=5000, patience=10))
    assert len(trace.values) == 11


def test_bridge_objective_landmarks():
    assert bridge_objective(np.zeros(N_ANGLES)) == pytest.approx(-4 + 100 * 0.001, abs=1e-12)
    assert bridge_objective(PUBLISHED_THETA) == pytest.approx(-ptm_l1(bridge_ptm(PUBLISHED_THETA)), abs=1e-15)


@given(st.lists(st.floats(-3, 3), min_size=N_ANGLES, max_size=N_ANGLES).map(np.array))
def test_penalty_is_active_exactly_below_the_floor(theta):
    gap = bridge_objective(theta) + ptm_l1(bridge_ptm(theta))
    if theta[6:9] @ theta[6:9] >= 1e-3:
        assert gap == 0
    else:
        assert gap > 0


def test_bridge_objective_is_pure():
    theta = np.random.default_rng(3).uniform(-3, 3, N_ANGLES)
    assert bridge_objective(theta) == bridge_objective(theta.copy())


def test_purification_objective_landmarks():
    from bridgeqrc.channels import affine_map
    from bridgeqrc.optimize import purification_kraus

    assert purification_objective(np.zeros(N_ANGLES)) == PURIFIER_SENTINEL
    swap = np.zeros(N_ANGLES)
    swap[6:9] = np.pi / 4
    m = affine_map(purification_kraus(swap))
    assert np.allclose(m.q, [0, 0, 1]) and np.allclose(m.Gamma, 0, atol=1e-12)
    assert purification_objective(swap) == pytest.approx(1.0)
    assert purification_objective(PUBLISHED_GAMMA) < 0.05


@pytest.fixture(scope="module")
def small_bridge():
    return optimize_bridge(OptimizerConfig(n_restarts=2, max_iters=400, seed=5))


def test_optimize_bridge_beats_separable_baseline(small_bridge):
    theta, trace = small_bridge
    assert theta[6:9] @ theta[6:9] > 1e-3
    assert ptm_l1(bridge_ptm(theta)) > 4
    assert bridge_diagnostics(bridge_ptm(theta)).reshaped_rank > 1
    assert trace.best_value == pytest.approx(bridge_objective(theta))


def test_optimize_bridge_is_deterministic(small_bridge):
    theta, trace = optimize_bridge(OptimizerConfig(n_restarts=2, max_iters=400, seed=5))
    assert np.array_equal(theta, small_bridge[0])
    assert trace.values == small_bridge[1].values


def test_optimize_bridge_respects_fixed_angles():
    fixed = {6: 0.216, 7: 0.469, 8: 1.023}
    theta, _ = optimize_bridge(OptimizerConfig(n_restarts=1, max_iters=100), fixed=fixed)
    assert [theta[i] for i in fixed] == list(fixed.values())


def test_optimize_bridge_max_column_mode_differs():
    a, _ = optimize_bridge(OptimizerConfig(n_restarts=1, max_iters=200, mode="entrywise"))
    b, _ = optimize_bridge(OptimizerConfig(n_restarts=1, max_iters=200, mode="max_column"))
    # columns of a unital PTM have 2-norm at most 1, so each column 1-norm is at most 4
    assert ptm_l1(bridge_ptm(b), "max_column") <= 4 + 1e-9
    assert ptm_l1(bridge_ptm(a), "entrywise") != ptm_l1(bridge_ptm(b), "max_column")


def test_optimize_purifier_selects_a_useful_channel():
    cfg = OptimizerConfig(n_restarts=3, max_iters=600, seed=2)
    gamma, trace, report = optimize_purifier(cfg, n_validation=200)
    assert trace.best_value < 0.1
    assert report.mean_purity_out > report.mean_purity_in
    assert report.mean_fidelity >= 0.8
    again = optimize_purifier(cfg, n_validation=200)
    assert np.array_equal(gamma, again[0])


def test_optimize_purifier_reports_when_nothing_qualifies():
    with pytest.raises(OptimizationDiverged):
        optimize_purifier(OptimizerConfig(n_restarts=1, max_iters=1), n_validation=10, objective_cut=1e-12)
