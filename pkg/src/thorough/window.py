"""Lag-window selection and autocorrelation-time estimation.

The integrated autocorrelation time of a stationary series is

    tau = 1 + 2 sum_{k>=1} C(k)/C(0),

and the effective sample size is N / tau. Truncating the sum needs a lag
window; the one built here models the ACF as an exponential with flat
relative noise,

    C_N(k) ~= c0 lambda^k + sigma c0 eta_k,

fits (lambda, c0, sigma) by least squares over the first M lags, and picks
the window w(k) = min{1, lambda^(k-m)} whose offset m minimizes the expected
squared error of the resulting tau estimate. The window is flat out to m,
then decays at the fitted rate; the discarded tail beyond the last computed
lag is restored from the fitted model in closed form.

Estimates run on a pair-summed ("doubled") copy of the series by default,
which shifts the ACF toward slower decay where the single-exponential model
is more faithful; the exact lag-0 variance ratio undoes the transform.

``estimate_tau_acor`` is the classic self-consistent rectangular window
kept as a reference: grow the window until it covers ten estimated
autocorrelation times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from ._io import atomic_write_text
from .covariance import CovSeq, DegenerateSeriesError, autocovariance, doubling_transform

STATUS_OK = "ok"
STATUS_INSUFFICIENT = "insufficient_samples"
STATUS_DEGENERATE = "degenerate"

# lambda search range; hitting either edge means no usable interior minimum
_LAM_LO = 1e-6
_LAM_HI = 1.0 - 1e-6


class DegenerateFitError(ValueError):
    """The ACF does not look like a decaying exponential."""


@dataclass
class AcfFit:
    """Exponential ACF model C(k) ~= c0 lam^k with relative noise sigma."""

    lam: float
    c0: float
    sigma: float
    n_lags: int


@dataclass
class LagWindow:
    """Window w(k) = min{1, lam^(k-m)}: flat to the offset m, then decaying."""

    lam: float
    m: float
    weights: np.ndarray


@dataclass
class WindowOffset:
    m: float
    mu: float
    status: str


@dataclass
class TauEstimate:
    tau: float
    ess: float
    status: str
    fit: AcfFit | None
    window: LagWindow | None
    n: int
    doubling_levels: int
    # normalized ACF of the analyzed (possibly doubled) series at the
    # window's lags; None when no window was built
    acf: np.ndarray | None = None


# ---------------------------------------------------------------------------
# exponential ACF fit

def _fit_objective(lam: float, cov: np.ndarray, powers: np.ndarray) -> float:
    # residual sum of squares at the best c0 for this lam, up to the
    # lam-independent sum of C(k)^2: -Q(lam)^2 / P(lam)
    q = float(np.dot(cov, lam**powers))
    m = cov.shape[0]
    if lam >= 1.0:
        p = float(m)
    else:
        lam2 = lam * lam
        p = (1.0 - lam2**m) / (1.0 - lam2)
    return -q * q / p


def _fit_objective_grad(lam: float, cov: np.ndarray, powers: np.ndarray) -> float:
    lk = lam**powers
    q = float(np.dot(cov, lk))
    dq = float(np.dot(cov * powers, lam ** np.maximum(powers - 1, 0)))
    m = cov.shape[0]
    lam2 = lam * lam
    p = (1.0 - lam2**m) / (1.0 - lam2)
    # P'(lam) = sum 2k lam^(2k-1)
    ks = powers
    dp = float(np.sum(2.0 * ks * lam ** np.maximum(2 * ks - 1, 0)))
    return -(2.0 * q * dq * p - q * q * dp) / (p * p)


def _golden_min(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def fit_exponential_acf(cov, max_lag: int | None = None) -> AcfFit:
    """Least-squares fit of c0 lam^k to the first max_lag covariance values.

    Accepts a CovSeq or a plain array of covariances starting at lag 0. The
    amplitude comes back in the units of the input. Raises DegenerateFitError
    when the best amplitude is nonpositive or the objective has no interior
    minimum in lambda (the ACF is not a decaying exponential).
    """
    values = cov.values if isinstance(cov, CovSeq) else np.asarray(cov, dtype=float)
    if max_lag is not None:
        values = values[:max_lag]
    m = values.shape[0]
    if m < 3:
        raise ValueError(f"need at least 3 lags to fit, got {m}")
    if not np.all(np.isfinite(values)):
        raise ValueError("covariances contain non-finite values")

    powers = np.arange(m, dtype=float)
    f = lambda lam: _fit_objective(lam, values, powers)
    fp = lambda lam: _fit_objective_grad(lam, values, powers)

    # bracket interior minima from a grid dense near both edges
    grid = np.unique(np.concatenate([
        [_LAM_LO],
        np.geomspace(1e-5, 0.1, 25),
        np.linspace(0.1, 0.9, 81),
        1.0 - np.geomspace(1e-6, 0.1, 41)[::-1],
        [_LAM_HI],
    ]))
    vals = np.array([f(g) for g in grid])
    best_lam = None
    best_val = math.inf
    for i in range(1, grid.size - 1):
        if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]:
            a, b = grid[i - 1], grid[i + 1]
            if fp(a) < 0.0 < fp(b):
                lam = bisect(fp, a, b, xtol=1e-13, maxiter=200)
            else:
                lam = _golden_min(f, a, b)
            v = f(lam)
            if v < best_val:
                best_val, best_lam = v, lam

    if best_lam is None:
        # derivative never changed sign on the grid
        lam = _golden_min(f, _LAM_LO, _LAM_HI)
        if lam - _LAM_LO < 1e-9 or _LAM_HI - lam < 1e-9 or f(lam) > min(vals[0], vals[-1]):
            raise DegenerateFitError(
                "ACF fit has no interior minimum; series does not look "
                "exponentially correlated"
            )
        best_lam = lam

    lam = float(best_lam)
    lk = lam**powers
    p = float(np.dot(lk, lk))
    c0 = float(np.dot(values, lk)) / p
    if c0 <= 0.0:
        raise DegenerateFitError("fitted amplitude is nonpositive")
    resid = c0 * lk - values
    sigma = float(np.sqrt(np.mean(resid**2))) / float(values[0])
    return AcfFit(lam=lam, c0=c0, sigma=sigma, n_lags=m)


# ---------------------------------------------------------------------------
# optimal window offset

def expected_window_error(mu: float, fit: AcfFit) -> float:
    """Model expected squared error of the tau estimate at offset lam^m = mu."""
    lam, c0, sigma = fit.lam, fit.c0, fit.sigma
    amp = 4.0 * c0 * lam * lam / (1.0 - lam * lam) ** 2
    err = amp * (mu * mu + sigma * sigma * (1.0 + lam - mu) ** 2)
    err += 4.0 * sigma * sigma * math.log(mu) / math.log(lam)
    err -= 4.0 * sigma * sigma / (1.0 - lam * lam)
    return err


def optimal_window_offset(fit: AcfFit) -> WindowOffset:
    """Offset m minimizing the expected squared error of the tau estimate.

    Setting the mu-derivative of the error model to zero gives the quadratic

        A (1 + sigma^2) mu^2 - A sigma^2 (1 + lam) mu + 2 sigma^2 / ln lam = 0

    with A = 4 c0 lam^2 / (1 - lam^2)^2. The constant term is negative for
    sigma > 0, so there is exactly one positive and one negative root; the
    positive one is the minimizer. A root above 1 means even the widest
    sensible window cannot control the noise: status insufficient_samples.
    At sigma = 0 the root collapses to mu = 0 (an all-ones window, m
    infinite).
    """
    lam, c0, sigma = fit.lam, fit.c0, fit.sigma
    if not (0.0 < lam < 1.0):
        raise ValueError(f"lam must be in (0, 1), got {lam}")
    if c0 <= 0.0:
        raise ValueError(f"c0 must be positive, got {c0}")
    if sigma == 0.0:
        return WindowOffset(m=math.inf, mu=0.0, status=STATUS_OK)
    amp = 4.0 * c0 * lam * lam / (1.0 - lam * lam) ** 2
    a = amp * (1.0 + sigma * sigma)
    b = -amp * sigma * sigma * (1.0 + lam)
    c = 2.0 * sigma * sigma / math.log(lam)
    mu = (-b + math.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
    m = math.log(mu) / math.log(lam)
    status = STATUS_OK if mu <= 1.0 else STATUS_INSUFFICIENT
    return WindowOffset(m=m, mu=mu, status=status)


def build_window(lam: float, m: float, n_lags: int) -> LagWindow:
    """Evaluate w(k) = min{1, lam^(k-m)} for k = 0..n_lags-1."""
    k = np.arange(n_lags, dtype=float)
    log_lam = math.log(lam)
    with np.errstate(invalid="ignore"):
        expo = np.minimum((k - m) * log_lam, 0.0)
    expo = np.where(np.isnan(expo), 0.0, expo)  # k == m == inf
    return LagWindow(lam=lam, m=m, weights=np.exp(expo))


def _tail_sum(lam: float, m: float, first_lag: int) -> float:
    """sum_{k>=first_lag} min{1, lam^(k-m)} lam^k in closed form."""
    log_lam = math.log(lam)
    if math.isinf(m):
        return math.exp(first_lag * log_lam) / (1.0 - lam)
    if m <= first_lag:
        return math.exp((2.0 * first_lag - m) * log_lam) / (1.0 - lam * lam)
    k0 = math.floor(m) + 1.0
    flat = (math.exp(first_lag * log_lam) - math.exp(k0 * log_lam)) / (1.0 - lam)
    return flat + math.exp((2.0 * k0 - m) * log_lam) / (1.0 - lam * lam)


# ---------------------------------------------------------------------------
# tau estimators

def default_max_lag(n: int) -> int:
    """Lag budget for a length-n series: n/10, clamped to [20, 2000] and n."""
    return min(max(20, math.ceil(n / 10)), 2000, n)


@dataclass
class _Pipeline:
    """Intermediates of one windowed tau estimate on the (doubled) series."""

    tau: float
    status: str
    fit: AcfFit | None
    window: LagWindow | None
    cov: CovSeq | None
    recovery: float
    levels: int
    max_lag: int


def _run_pipeline(x, doubling_levels: int, max_lag: int | None) -> _Pipeline:
    x = np.asarray(x, dtype=float).ravel()
    recovery = 1.0
    v = x
    levels = 0
    for _ in range(doubling_levels):
        if v.size // 2 < 16:
            break
        v, ratio = doubling_transform(v)
        recovery *= 0.5 * ratio
        levels += 1
    nv = v.size
    m_lags = default_max_lag(nv) if max_lag is None else min(max_lag, nv)
    cov = autocovariance(v, m_lags)
    acf = cov.values / cov.values[0]
    fit = fit_exponential_acf(acf)
    offset = optimal_window_offset(fit)
    win = build_window(fit.lam, offset.m, m_lags)
    tau_v = 1.0 + 2.0 * float(np.dot(win.weights[1:], acf[1:]))
    tau_v += 2.0 * fit.c0 * _tail_sum(fit.lam, offset.m, m_lags)
    return _Pipeline(tau=recovery * tau_v, status=offset.status, fit=fit,
                     window=win, cov=cov, recovery=recovery, levels=levels,
                     max_lag=m_lags)


def estimate_tau(x, doubling_levels: int = 1, max_lag: int | None = None) -> TauEstimate:
    """Windowed autocorrelation-time estimate of a scalar series.

    Runs on the pair-summed series (doubling_levels levels, each undone
    through the exact lag-0 variance ratio), fits the exponential ACF model,
    applies the optimal-offset window, and restores the truncated tail from
    the fit. A series the model cannot describe (constant, or ACF with no
    exponential decay) degrades to tau = 1 with status "degenerate" rather
    than failing, since that is the value an uncorrelated series would get.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n < 16:
        raise ValueError(f"need at least 16 samples, got {n}")
    if doubling_levels < 0:
        raise ValueError("doubling_levels must be >= 0")
    try:
        pipe = _run_pipeline(x, doubling_levels, max_lag)
    except (DegenerateSeriesError, DegenerateFitError):
        return TauEstimate(tau=1.0, ess=float(n), status=STATUS_DEGENERATE,
                           fit=None, window=None, n=n,
                           doubling_levels=doubling_levels)
    tau = pipe.tau
    status = pipe.status
    acf = pipe.cov.values / pipe.cov.values[0]
    if tau <= 0.0:
        return TauEstimate(tau=0.0, ess=math.inf, status=STATUS_DEGENERATE,
                           fit=pipe.fit, window=pipe.window, n=n,
                           doubling_levels=pipe.levels, acf=acf)
    return TauEstimate(tau=tau, ess=n / tau, status=status, fit=pipe.fit,
                       window=pipe.window, n=n, doubling_levels=pipe.levels,
                       acf=acf)


def estimate_tau_acor(x, window_factor: float = 10.0) -> TauEstimate:
    """Self-consistent rectangular-window estimate (the classic reference).

    Starts from tau = 1 and grows the window to the smallest integer above
    window_factor * tau until the width stops changing. No doubling, no ACF
    model. Status is insufficient_samples when the series is shorter than
    100 tau, when the windowed sum collapses nonpositive, or when the
    iteration fails to settle.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n < 16:
        raise ValueError(f"need at least 16 samples, got {n}")
    try:
        cov = autocovariance(x, n)
    except DegenerateSeriesError:
        return TauEstimate(tau=1.0, ess=float(n), status=STATUS_DEGENERATE,
                           fit=None, window=None, n=n, doubling_levels=0)
    acf = cov.values / cov.values[0]
    csum = np.concatenate([[0.0], np.cumsum(acf[1:])])  # csum[j] = sum_{k=1}^{j} acf[k]
    tau = 1.0
    width = 0
    seen = set()
    status = STATUS_INSUFFICIENT
    for _ in range(100):
        new_width = min(max(math.floor(window_factor * tau) + 1, 2), n)
        if new_width == width:
            status = STATUS_OK
            break
        if new_width in seen:
            # the width iteration can settle into a short cycle between
            # near-identical estimates; re-entering one counts as converged
            status = STATUS_OK
            break
        seen.add(new_width)
        width = new_width
        tau = 1.0 + 2.0 * float(csum[width - 1])
    if status == STATUS_OK and (tau <= 0.0 or n < 100.0 * tau):
        # a nonpositive self-consistent sum cannot certify N >= 100 tau
        status = STATUS_INSUFFICIENT
    tau = max(tau, 0.0)
    ess = n / tau if tau > 0.0 else math.inf
    return TauEstimate(tau=tau, ess=ess, status=status, fit=None, window=None,
                       n=n, doubling_levels=0)


def variance_of_mean(x) -> float:
    """Windowed estimate of Var[mean(x)] for a correlated series.

    (C_N(0)/N) * (1 + 2 sum_{k>=1} w(k) (1 - k/N) C_N(k)/C_N(0)) with the
    window fitted on the raw (undoubled) series, since the lag weights must
    line up with the raw lags in the (1 - k/N) factors. Falls back to
    C_N(0)/N when the fit degenerates (no resolvable correlation); a constant
    series raises DegenerateSeriesError.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n < 16:
        raise ValueError(f"need at least 16 samples, got {n}")
    m_lags = default_max_lag(n)
    cov = autocovariance(x, m_lags)
    acf = cov.values / cov.values[0]
    try:
        fit = fit_exponential_acf(acf)
        offset = optimal_window_offset(fit)
    except DegenerateFitError:
        return cov.values[0] / n
    win = build_window(fit.lam, offset.m, m_lags)
    k = np.arange(1, m_lags, dtype=float)
    s = float(np.dot(win.weights[1:] * (1.0 - k / n), acf[1:]))
    return cov.values[0] / n * (1.0 + 2.0 * s)


def tau_from_ar1(lam: float) -> float:
    """Integrated autocorrelation time of an AR(1) ACF lam^k."""
    if not (0.0 <= lam < 1.0):
        raise ValueError(f"lam must be in [0, 1), got {lam}")
    return (1.0 + lam) / (1.0 - lam)


def save_acf_window_csv(est: TauEstimate, path) -> None:
    """Dump (k, acf, w) rows for plotting the window against the ACF."""
    if est.window is None or est.acf is None:
        raise ValueError("estimate carries no window to dump")
    lines = ["k,acf,w"]
    for k in range(est.window.weights.shape[0]):
        lines.append(f"{k},{est.acf[k]:.17g},{est.window.weights[k]:.17g}")
    atomic_write_text(path, "\n".join(lines) + "\n")
