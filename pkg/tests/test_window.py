"""Lag-window fit, optimal offset, and the tau estimators.

The offset oracle re-minimizes the expected-error expression directly with
scipy, so the closed-form quadratic root is checked against an independent
minimizer, not against itself.
"""

import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar
from scipy.signal import lfilter

from thorough import (
    ChainConfig,
    DegenerateFitError,
    DegenerateSeriesError,
    StdGaussian,
    estimate_tau,
    estimate_tau_acor,
    fit_exponential_acf,
    optimal_window_offset,
    run_chain,
    tau_from_ar1,
    variance_of_mean,
)
from thorough.window import (
    AcfFit,
    _tail_sum,
    build_window,
    default_max_lag,
    expected_window_error,
    save_acf_window_csv,
)


def ar1_series(lam, n, seed, burn=10_000):
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(n + burn) * math.sqrt(1.0 - lam * lam)
    return lfilter([1.0], [1.0, -lam], noise)[burn:]


# ---------------------------------------------------------------------------
# exponential ACF fit

def test_fit_recovers_noiseless_exponential():
    cov = 0.5 * 0.9 ** np.arange(50, dtype=float)
    fit = fit_exponential_acf(cov)
    assert abs(fit.lam - 0.9) <= 1e-6
    assert abs(fit.c0 - 0.5) <= 1e-6
    assert fit.sigma <= 1e-8
    assert fit.n_lags == 50


def test_fit_noisy_exponential_pinned():
    # model C(k) = c0 lam^k + sigma c0 eta_k at sigma = 0.01, generated once
    rng = np.random.default_rng(5)
    k = np.arange(50, dtype=float)
    cov = 0.5 * 0.9**k + 0.01 * 0.5 * rng.standard_normal(50)
    fit = fit_exponential_acf(cov)
    assert abs(fit.lam - 0.9) <= 0.05
    assert abs(fit.sigma - 0.01) <= 0.005
    # pinned measurements for this seed
    assert abs(fit.lam - 0.8994) <= 1e-3
    assert abs(fit.c0 - 0.49964) <= 1e-3


def test_fit_requires_three_lags():
    with pytest.raises(ValueError):
        fit_exponential_acf(np.array([1.0, 0.9]))


def test_fit_flags_non_decaying_acf():
    # sign-alternating and growing ACFs admit no decaying exponential
    with pytest.raises(DegenerateFitError):
        fit_exponential_acf((-0.9) ** np.arange(20, dtype=float))
    with pytest.raises(DegenerateFitError):
        fit_exponential_acf(np.arange(1.0, 21.0))


def test_fit_flags_negative_amplitude():
    with pytest.raises(DegenerateFitError):
        fit_exponential_acf(-(0.8 ** np.arange(20, dtype=float)))


def test_fit_is_linear_in_amplitude():
    cov = 0.7 ** np.arange(40, dtype=float)
    a = fit_exponential_acf(cov)
    b = fit_exponential_acf(123.0 * cov)
    assert abs(a.lam - b.lam) <= 1e-9
    assert abs(b.c0 - 123.0 * a.c0) <= 1e-6
    assert abs(a.sigma - b.sigma) <= 1e-9  # sigma is relative to C(0)


# ---------------------------------------------------------------------------
# optimal window offset

def oracle_mu(fit):
    res = minimize_scalar(lambda mu: expected_window_error(mu, fit),
                          bounds=(1e-12, 1.0), method="bounded",
                          options={"xatol": 1e-12})
    return res.x


def test_offset_matches_direct_minimization():
    fit = AcfFit(lam=0.9, c0=1.0, sigma=0.5, n_lags=50)
    off = optimal_window_offset(fit)
    assert off.status == "ok"
    assert abs(off.mu - oracle_mu(fit)) <= 1e-8
    assert abs(fit.lam**off.m - off.mu) <= 1e-12


def test_offset_oracle_sweep():
    for lam in (0.3, 0.7, 0.9, 0.97):
        for sigma in (0.01, 0.1, 0.5, 1.0):
            for c0 in (0.2, 1.0, 5.0):
                fit = AcfFit(lam=lam, c0=c0, sigma=sigma, n_lags=50)
                off = optimal_window_offset(fit)
                if off.status != "ok":
                    continue
                assert abs(off.mu - oracle_mu(fit)) <= 1e-7, (lam, sigma, c0)


def test_offset_vanishing_noise_gives_flat_window():
    off = optimal_window_offset(AcfFit(lam=0.9, c0=1.0, sigma=1e-8, n_lags=50))
    assert off.mu <= 1e-3
    off = optimal_window_offset(AcfFit(lam=0.9, c0=1.0, sigma=0.0, n_lags=50))
    assert off.mu == 0.0
    assert math.isinf(off.m)
    assert off.status == "ok"


def test_offset_large_noise_flags_insufficient():
    off = optimal_window_offset(AcfFit(lam=0.99, c0=1.0, sigma=10.0, n_lags=50))
    assert off.mu > 1.0
    assert off.status == "insufficient_samples"
    assert off.m < 0.0  # log mu / log lam with mu > 1
    # the error model really is still decreasing at the window edge
    e = expected_window_error
    fit = AcfFit(lam=0.99, c0=1.0, sigma=10.0, n_lags=50)
    assert e(1.0, fit) < e(0.999, fit) < e(0.99, fit)


def test_offset_validates_fit():
    with pytest.raises(ValueError):
        optimal_window_offset(AcfFit(lam=1.5, c0=1.0, sigma=0.1, n_lags=10))
    with pytest.raises(ValueError):
        optimal_window_offset(AcfFit(lam=0.9, c0=-1.0, sigma=0.1, n_lags=10))


# ---------------------------------------------------------------------------
# window shape and tail

def test_window_validity_over_parameter_sweep():
    for lam in (0.05, 0.3, 0.9, 0.999):
        for m in (-4.2, 0.0, 2.5, 17.0, math.inf):
            win = build_window(lam, m, 40)
            w = win.weights
            assert np.all(w >= 0.0) and np.all(w <= 1.0)
            assert np.all(np.diff(w) <= 1e-16)  # nonincreasing
            for k in range(40):
                if k <= m:
                    assert w[k] == 1.0
                else:
                    assert w[k] == pytest.approx(lam ** (k - m), rel=1e-12)


def brute_tail(lam, m, first_lag):
    s = 0.0
    for k in range(first_lag, 200_000):
        term = min(1.0, lam ** (k - m)) * lam**k
        s += term
        if term < 1e-18 * max(s, 1.0):
            break
    return s


def test_tail_sum_matches_brute_force():
    for lam in (0.3, 0.9, 0.99):
        for m in (-2.7, 0.0, 5.5, 30.2, math.inf):
            for first in (3, 10, 50):
                closed = _tail_sum(lam, m, first)
                ref = brute_tail(lam, m, first)
                assert closed == pytest.approx(ref, rel=1e-12), (lam, m, first)


def test_default_max_lag_clamps():
    assert default_max_lag(50) == 20
    assert default_max_lag(1000) == 100
    assert default_max_lag(100_000) == 2000
    assert default_max_lag(10) == 10


# ---------------------------------------------------------------------------
# doubling recovery identity (exact covariances, no sampling noise)

def test_doubling_recovery_identity_on_exact_ar1():
    """For v_i = u_{2i} + u_{2i+1} on an AR(1) chain, C_v(0)/C_u(0) = 2(1+lam)
    and tau_u = (1/2) ratio tau_v exactly; checked from analytic covariances."""
    for lam in (0.3, 0.5, 0.9, 0.99):
        # v-covariances: C_v(0) = 2(1+lam), C_v(k) = lam^(2k) (1+lam)^2/lam
        ratio = 2.0 * (1.0 + lam)
        tau_v = 1.0
        k = 1
        while True:
            term = 2.0 * (lam ** (2 * k) * (1.0 + lam) ** 2 / lam) / ratio
            tau_v += term
            if term < 1e-16:
                break
            k += 1
        tau_u = 0.5 * ratio * tau_v
        assert abs(tau_u - tau_from_ar1(lam)) <= 1e-9 * tau_from_ar1(lam)


# ---------------------------------------------------------------------------
# tau estimators end to end

def test_iid_series_tau_near_one():
    rng = np.random.default_rng(41)
    x = rng.standard_normal(100_000)
    est = estimate_tau(x)
    assert 0.9 <= est.tau <= 1.1
    est = estimate_tau_acor(x)
    assert 0.8 <= est.tau <= 1.2
    assert est.status == "ok"


def test_ar1_tau_within_ten_percent():
    x = ar1_series(0.9, 1_000_000, seed=5)
    est = estimate_tau(x)
    assert est.status == "ok"
    assert abs(est.tau - 19.0) <= 1.9
    assert est.ess * est.tau == pytest.approx(est.n, rel=1e-9)


def test_ar1_tau_acor_within_fifteen_percent():
    x = ar1_series(0.9, 1_000_000, seed=5)
    est = estimate_tau_acor(x)
    assert est.status == "ok"
    assert abs(est.tau - 19.0) <= 0.15 * 19.0


def test_acor_flags_short_series():
    # tau ~ 199 needs N >= 100 tau ~ 2e4; a thousand samples cannot do
    x = ar1_series(0.99, 1000, seed=1, burn=5000)
    est = estimate_tau_acor(x)
    assert est.tau > 10.0
    assert est.status == "insufficient_samples"


def test_acor_flags_collapsed_sum():
    # on this realization the windowed sum goes negative: no certificate
    x = ar1_series(0.99, 1000, seed=2, burn=5000)
    est = estimate_tau_acor(x)
    assert est.tau == 0.0
    assert math.isinf(est.ess)
    assert est.status == "insufficient_samples"


def test_em_chain_tau_near_twenty():
    # dt=0.02 with stride 5 gives lag-1 decay (1-dt)^5 ~ exp(-0.1)
    t = StdGaussian(1)
    cfg = ChainConfig(dt=0.02, n_steps=5_000_000, stride=5, seed=2)
    q = run_chain(t, "em", cfg).states[:, 0]
    est = estimate_tau(q)
    assert est.status == "ok"
    assert abs(est.tau - 20.0) <= 2.0


def test_doubling_levels_agree_on_sampled_data():
    x = ar1_series(0.9, 1_000_000, seed=5)
    t0 = estimate_tau(x, doubling_levels=0).tau
    t1 = estimate_tau(x, doubling_levels=1).tau
    t2 = estimate_tau(x, doubling_levels=2).tau
    assert abs(t1 - t0) <= 0.05 * t0
    assert abs(t2 - t0) <= 0.10 * t0


def test_estimate_tau_scale_invariant():
    x = ar1_series(0.8, 50_000, seed=9)
    ref = estimate_tau(x).tau
    for c in (1e-6, 3.7, -2.0, 1e8):
        assert abs(estimate_tau(c * x).tau - ref) <= 1e-9 * ref


def test_constant_series_degrades():
    x = np.full(1000, 2.5)
    est = estimate_tau(x)
    assert est.status == "degenerate"
    assert est.tau == 1.0


def test_estimate_tau_input_validation():
    with pytest.raises(ValueError):
        estimate_tau(np.zeros(10))
    with pytest.raises(ValueError):
        estimate_tau(np.random.default_rng(0).standard_normal(100), doubling_levels=-1)


def test_new_window_varies_less_than_acor_across_seeds():
    # twelve chains of the same process; the model-based window should not
    # be noisier than the rectangular one
    t = StdGaussian(1)
    new_taus, acor_taus = [], []
    for s in range(12):
        cfg = ChainConfig(dt=0.02, n_steps=5_000_000, stride=5, seed=33)
        q = run_chain(t, "em", cfg, chain_id=s).states[:, 0]
        new_taus.append(estimate_tau(q).tau)
        acor_taus.append(estimate_tau_acor(q).tau)
    sd_new = np.std(new_taus, ddof=1)
    sd_acor = np.std(acor_taus, ddof=1)
    assert sd_new <= 1.1 * sd_acor  # measured ratio ~ 0.36


# ---------------------------------------------------------------------------
# variance of the mean

def test_variance_of_mean_iid():
    rng = np.random.default_rng(43)
    x = rng.standard_normal(10_000)
    v = variance_of_mean(x)
    assert abs(v - 1e-4) <= 0.2e-4


def test_variance_of_mean_correlated():
    x = ar1_series(0.9, 1_000_000, seed=5)
    v = variance_of_mean(x)
    target = 19.0 * x.var() / x.size
    assert abs(v - target) <= 0.15 * target


def test_variance_of_mean_constant_raises():
    with pytest.raises(DegenerateSeriesError):
        variance_of_mean(np.full(100, 1.0))


# ---------------------------------------------------------------------------
# ar1 oracle and csv dump

def test_tau_from_ar1_values():
    assert tau_from_ar1(0.0) == 1.0
    assert abs(tau_from_ar1(0.9) - 19.0) <= 1e-12
    assert abs(tau_from_ar1(math.exp(-0.1)) - 20.0) <= 0.05
    with pytest.raises(ValueError):
        tau_from_ar1(1.0)
    with pytest.raises(ValueError):
        tau_from_ar1(-0.1)


def test_acf_window_csv_schema(tmp_path):
    x = ar1_series(0.9, 50_000, seed=3)
    est = estimate_tau(x)
    path = tmp_path / "acf_window.csv"
    save_acf_window_csv(est, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "k,acf,w"
    rows = [ln.split(",") for ln in lines[1:]]
    assert len(rows) == est.window.weights.size
    assert int(rows[0][0]) == 0
    assert float(rows[0][1]) == pytest.approx(1.0)
    assert float(rows[0][2]) == pytest.approx(1.0)
