"""Target potentials and gradients against finite-difference oracles."""

import numpy as np
import pytest

from thorough import CustomTarget, LMixture, LogisticRegression, OneNodeNN, StdGaussian


def fd_gradient(target, q, h=1e-5):
    """Central-difference gradient, component by component."""
    g = np.empty_like(q)
    for i in range(q.shape[0]):
        qp = q.copy()
        qm = q.copy()
        qp[i] += h
        qm[i] -= h
        g[i] = (target.potential(qp) - target.potential(qm)) / (2.0 * h)
    return g


def make_nn_target(rng):
    x = np.linspace(-3.0, 3.0, 30)
    y = 2.0 * np.tanh(1.5 * x + 0.5) + 0.1 * rng.standard_normal(30)
    return OneNodeNN(x, y)


def make_logistic_target(rng):
    X = rng.standard_normal((25, 4))
    w = np.array([1.0, -2.0, 0.5, 0.0])
    y = (X @ w + 0.3 * rng.standard_normal(25) > 0).astype(float)
    return LogisticRegression(X, y)


def all_targets(rng):
    return [
        StdGaussian(1),
        StdGaussian(3),
        LMixture(),
        make_nn_target(rng),
        make_logistic_target(rng),
    ]


def test_std_gaussian_evaluate_at_zero_and_two():
    t = StdGaussian(1)
    u, g = t.evaluate(np.array([0.0]))
    assert u == 0.0
    assert g[0] == 0.0
    u, g = t.evaluate(np.array([2.0]))
    assert u == 2.0
    assert g[0] == 2.0


def test_log_density_is_minus_potential():
    t = StdGaussian(2)
    q = np.array([1.0, 1.0])
    assert t.log_density_unnormalized(q) == -1.0
    assert StdGaussian(1).log_density_unnormalized(np.array([0.0])) == 0.0


def test_gradients_match_finite_differences():
    # 100 random states per target; loose states (sd 2) keep all terms active
    rng = np.random.default_rng(0)
    for target in all_targets(rng):
        for _ in range(100):
            q = 2.0 * rng.standard_normal(target.dimension)
            an = target.gradient(q)
            fd = fd_gradient(target, q)
            err = np.abs(fd - an) / np.maximum(1.0, np.abs(an))
            assert np.max(err) <= 1e-5, f"{target.name}: fd mismatch {np.max(err):.2e}"


def test_lmixture_gradient_near_modes():
    t = LMixture()
    # gradients vanish at the component centers up to the other component's
    # exponentially small pull
    for mode in ([-1.0, 3.0], [2.0, 0.0]):
        g = t.gradient(np.array(mode))
        assert np.linalg.norm(g) <= 1e-6
        fd = fd_gradient(t, np.array(mode), h=1e-6)
        assert np.linalg.norm(fd - g) <= 1e-4


def test_lmixture_log_density_at_shallow_mode():
    # at (2, 0) the other exponential contributes exp(-166.5), i.e. nothing
    t = LMixture()
    assert abs(t.log_density_unnormalized(np.array([2.0, 0.0]))) <= 1e-12


def test_lmixture_finite_far_out():
    t = LMixture()
    rng = np.random.default_rng(4)
    for _ in range(200):
        q = rng.uniform(-1e3, 1e3, size=2)
        u = t.potential(q)
        g = t.gradient(q)
        assert np.isfinite(u)
        assert np.all(np.isfinite(g))
    assert np.isfinite(t.potential(np.array([1e3, -1e3])))


def test_nn_sign_symmetry():
    rng = np.random.default_rng(1)
    t = make_nn_target(rng)
    for _ in range(50):
        q = rng.standard_normal(4)
        qf = q * np.array([-1.0, -1.0, -1.0, 1.0])
        assert abs(t.potential(q) - t.potential(qf)) <= 1e-12 * max(1.0, abs(t.potential(q)))


def test_nn_predict_batch_matches_single():
    rng = np.random.default_rng(2)
    t = make_nn_target(rng)
    qs = rng.standard_normal((7, 4))
    batch = t.predict(qs)
    for i in range(7):
        assert np.allclose(batch[i], t.predict(qs[i]), rtol=0, atol=1e-14)


def test_batch_potential_and_gradient_match_single():
    rng = np.random.default_rng(3)
    for target in all_targets(rng):
        qs = rng.standard_normal((9, target.dimension))
        ub = target.potential(qs)
        gb = target.gradient(qs)
        assert ub.shape == (9,)
        assert gb.shape == qs.shape
        for i in range(9):
            assert np.isclose(ub[i], target.potential(qs[i]), rtol=1e-14, atol=0)
            assert np.allclose(gb[i], target.gradient(qs[i]), rtol=1e-13, atol=1e-15)


def test_dimension_mismatch_raises():
    rng = np.random.default_rng(5)
    for target in all_targets(rng):
        bad = np.zeros(target.dimension + 1)
        with pytest.raises(ValueError):
            target.potential(bad)
        with pytest.raises(ValueError):
            target.gradient(bad)


def test_logistic_rejects_bad_labels():
    X = np.zeros((4, 2))
    with pytest.raises(ValueError):
        LogisticRegression(X, np.array([0.0, 1.0, 2.0, 0.0]))
    with pytest.raises(ValueError):
        LogisticRegression(X, np.array([0.0, 1.0]))


def test_logistic_potential_stable_at_extreme_margins():
    X = np.array([[1.0], [-1.0]])
    y = np.array([1.0, 0.0])
    t = LogisticRegression(X, y)
    for q in ([1e4], [-1e4]):
        u = t.potential(np.array(q))
        assert np.isfinite(u)
    # perfectly classified pair: likelihood term -> 0, only the prior remains
    u = t.potential(np.array([50.0]))
    assert abs(u - 0.5 * t.alpha * 2500.0) <= 1e-8


def test_logistic_predict_proba_matches_sigmoid():
    rng = np.random.default_rng(6)
    t = make_logistic_target(rng)
    q = rng.standard_normal(4)
    z = t.features @ q
    assert np.allclose(t.predict_proba(q), 1.0 / (1.0 + np.exp(-z)), atol=1e-14)


def test_custom_target_checks_gradient_shape():
    t = CustomTarget(potential=lambda q: float(q @ q),
                     gradient=lambda q: 2.0 * q, dimension=3)
    q = np.arange(3.0)
    u, g = t.evaluate(q)
    assert u == 5.0
    assert np.array_equal(g, 2.0 * q)
    bad = CustomTarget(potential=lambda q: 0.0,
                       gradient=lambda q: np.zeros(2), dimension=3)
    with pytest.raises(ValueError):
        bad.gradient(q)
