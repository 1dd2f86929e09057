"""Covariance estimators against direct-sum oracles."""

import numpy as np
import pytest

from thorough import (
    ChainConfig,
    DegenerateSeriesError,
    ObservableSeries,
    StdGaussian,
    autocovariance,
    cross_covariance_matrices,
    doubling_transform,
    run_chain,
)


def direct_autocov(x, max_lag):
    """The O(N^2) definition: divisor N, centered once."""
    x = np.asarray(x, dtype=float)
    n = x.size
    a = x - x.mean()
    return np.array([np.dot(a[: n - k], a[k:]) / n for k in range(max_lag)])


def direct_cross(values, max_lag):
    values = np.asarray(values, dtype=float)
    d, n = values.shape
    a = values - values.mean(axis=1, keepdims=True)
    out = np.zeros((max_lag, d, d))
    for k in range(max_lag):
        for i in range(d):
            for j in range(d):
                out[k, i, j] = np.dot(a[i, : n - k], a[j, k:]) / n
    return out


def ar1_series(lam, n, seed):
    rng = np.random.default_rng(seed)
    x = np.empty(n)
    x[0] = rng.standard_normal() / np.sqrt(1.0 - lam * lam)
    c = np.sqrt(1.0 - lam * lam)
    for i in range(1, n):
        x[i] = lam * x[i - 1] + c * rng.standard_normal()
    return x


def test_alternating_series_reference_values():
    cov = autocovariance(np.array([1.0, -1.0, 1.0, -1.0]), 4)
    assert np.allclose(cov.values, [1.0, -0.75, 0.5, -0.25], atol=1e-14)


def test_lag_zero_is_biased_variance():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(333)
    cov = autocovariance(x, 5)
    assert abs(cov.values[0] - x.var()) <= 1e-13


def test_fft_matches_direct_sum():
    # random lengths across the full supported range, all lags checked
    rng = np.random.default_rng(7)
    lengths = [2, 3, 4, 5, 17, 64, 100, 1023, 1024, 4095, 4096]
    lengths += list(rng.integers(2, 4097, size=30))
    for n in lengths:
        x = rng.standard_normal(int(n)) * rng.uniform(0.1, 10.0)
        cov = autocovariance(x, int(n))
        ref = direct_autocov(x, int(n))
        scale = max(ref[0], 1e-300)
        assert np.max(np.abs(cov.values - ref)) <= 1e-10 * scale, f"n={n}"


def test_max_lag_validation():
    x = np.arange(10.0)
    with pytest.raises(ValueError):
        autocovariance(x, 11)
    with pytest.raises(ValueError):
        autocovariance(x, 0)


def test_constant_series_is_degenerate():
    with pytest.raises(DegenerateSeriesError):
        autocovariance(np.full(100, 3.7), 10)


def test_ar1_acf_matches_closed_form():
    lam = 0.9
    x = ar1_series(lam, 1_000_000, seed=5)
    cov = autocovariance(x, 21)
    acf = cov.values / cov.values[0]
    for k in range(21):
        assert abs(acf[k] - lam**k) <= 0.01


def test_cross_d1_reduces_to_autocovariance():
    rng = np.random.default_rng(11)
    x = rng.standard_normal(500)
    stack = cross_covariance_matrices(x[None, :], 40)
    cov = autocovariance(x, 40)
    assert np.max(np.abs(stack[:, 0, 0] - cov.values)) <= 1e-14


def test_cross_matches_direct_oracle():
    rng = np.random.default_rng(13)
    for d, n in ((2, 64), (3, 101), (4, 17)):
        values = rng.standard_normal((d, n)) * rng.uniform(0.5, 2.0, size=(d, 1))
        stack = cross_covariance_matrices(values, n // 2, symmetrize=False)
        ref = direct_cross(values, n // 2)
        scale = np.max(np.abs(ref))
        assert np.max(np.abs(stack - ref)) <= 1e-10 * scale


def test_cross_identical_rows_share_entries():
    rng = np.random.default_rng(17)
    x = rng.standard_normal(300)
    stack = cross_covariance_matrices(np.vstack([x, x]), 20)
    assert np.max(np.abs(stack[:, 0, 1] - stack[:, 0, 0])) <= 1e-13
    assert np.max(np.abs(stack[:, 1, 0] - stack[:, 0, 0])) <= 1e-13


def test_cross_symmetrize_flag():
    rng = np.random.default_rng(19)
    values = rng.standard_normal((3, 400))
    raw = cross_covariance_matrices(values, 30, symmetrize=False)
    sym = cross_covariance_matrices(values, 30)
    assert np.max(np.abs(sym - 0.5 * (raw + np.transpose(raw, (0, 2, 1))))) <= 1e-15
    for k in range(30):
        assert np.max(np.abs(sym[k] - sym[k].T)) == 0.0
    # lag-0 symmetrized matrix is PSD up to rounding
    w = np.linalg.eigvalsh(sym[0])
    assert w.min() >= -1e-10 * np.trace(sym[0])


def test_cross_asymmetry_shrinks_with_n():
    """Detailed balance makes the population C_k symmetric, so the estimate's
    asymmetry is pure noise and shrinks as N grows."""
    t = StdGaussian(1)

    def asym(n, seed):
        cfg = ChainConfig(dt=0.1, n_steps=n, seed=seed)
        q = run_chain(t, "mala", cfg).states[:, 0]
        values = np.vstack([q, q**3])
        stack = cross_covariance_matrices(values, 10, symmetrize=False)
        num = sum(np.linalg.norm(stack[k] - stack[k].T) for k in range(1, 10))
        den = sum(np.linalg.norm(stack[k]) for k in range(1, 10))
        return num / den

    small = asym(10_000, seed=23)
    large = asym(1_000_000, seed=23)
    assert large <= small / 2.0


def test_doubling_iid_ratio_near_two():
    rng = np.random.default_rng(29)
    x = rng.standard_normal(200_000)
    v, ratio = doubling_transform(x)
    assert v.size == 100_000
    assert abs(ratio - 2.0) <= 0.05


def test_doubling_definition_small_case():
    x = np.array([1.0, 2.0, 3.0, 4.0, 5.0])  # odd length: last element dropped
    v, ratio = doubling_transform(x)
    a = x - x.mean()
    assert np.allclose(v, [a[0] + a[1], a[2] + a[3]], atol=1e-15)


def test_doubling_ar1_ratio():
    lam = 0.8
    x = ar1_series(lam, 400_000, seed=31)
    _, ratio = doubling_transform(x)
    # analytic ratio 2(1+lam) for an AR(1) chain
    assert abs(ratio - 2.0 * (1.0 + lam)) <= 0.1


def test_doubling_rejects_constant_and_short():
    with pytest.raises(DegenerateSeriesError):
        doubling_transform(np.full(50, 2.0))
    with pytest.raises(ValueError):
        doubling_transform(np.array([1.0, 2.0, 3.0]))


def test_observable_series_validation():
    rng = np.random.default_rng(37)
    values = rng.standard_normal((2, 50))
    s = ObservableSeries(values, labels=("a", "b"))
    assert s.dimension == 2
    assert s.n == 50
    with pytest.raises(ValueError):
        ObservableSeries(values, labels=("a",))
    with pytest.raises(ValueError):
        ObservableSeries(values[:, :1], labels=("a", "b"))
