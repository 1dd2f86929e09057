"""Autocovariance estimation and the pair-summing variance doubling transform.

All estimators here are the biased kind: lag-k terms are divided by the full
series length N, not N - k, which keeps long-lag noise damped and the
spectral estimate nonnegative. Sums run through an FFT zero-padded to the
next power of two at least twice the series length, so the circular product
reproduces the linear lag sums exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateSeriesError(ValueError):
    """The series has no variance (constant input)."""


@dataclass
class CovSeq:
    """Autocovariance values for lags 0..len(values)-1 of one series."""

    values: np.ndarray
    n: int
    mean: float

    @property
    def max_lag(self) -> int:
        return self.values.shape[0]


@dataclass
class ObservableSeries:
    """A bank of scalar observable series over one chain, shape (d, N)."""

    values: np.ndarray
    labels: list[str]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("values must be a (d, N) matrix")
        d, n = self.values.shape
        if d < 1 or n < 2:
            raise ValueError("need at least one series of length >= 2")
        if len(self.labels) != d:
            raise ValueError(f"{len(self.labels)} labels for {d} series")

    @property
    def dimension(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def prefix(self, n: int) -> "ObservableSeries":
        return ObservableSeries(self.values[:, :n], list(self.labels))


def _fft_length(n: int) -> int:
    return 1 << (2 * n - 1).bit_length()


def _check_series(x) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("series must have at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    return x


def autocovariance(x, max_lag: int) -> CovSeq:
    """Biased autocovariances C_N(k) for k = 0..max_lag-1.

    C_N(k) = (1/N) sum_{n=0}^{N-k-1} (x_n - xbar)(x_{n+k} - xbar).
    Requires 1 <= max_lag <= N; raises DegenerateSeriesError for a constant
    series.
    """
    x = _check_series(x)
    n = x.size
    if not (1 <= max_lag <= n):
        raise ValueError(f"max_lag must be in [1, {n}], got {max_lag}")
    mean = float(x.mean())
    a = x - mean
    nfft = _fft_length(n)
    f = np.fft.rfft(a, nfft)
    acov = np.fft.irfft(f.real**2 + f.imag**2, nfft)[:max_lag] / n
    if acov[0] <= 0.0:
        raise DegenerateSeriesError("series is constant; no variance to work with")
    return CovSeq(values=acov, n=n, mean=mean)


def cross_covariance_matrices(series, max_lag: int,
                              symmetrize: bool = True) -> np.ndarray:
    """Lagged cross-covariance stack C_k, shape (max_lag, d, d).

    C_k[i, j] = (1/N) sum_n (u_i,n - ubar_i)(u_j,n+k - ubar_j); row i is the
    unshifted series. C_0 is symmetric; for k > 0 the finite-N estimates
    C_k and C_k^T differ by sampling noise. For a chain in detailed balance
    the population matrices are exactly symmetric, so by default each C_k is
    replaced by (C_k + C_k^T)/2, which only removes noise; pass
    symmetrize=False to inspect the raw estimates.
    """
    if isinstance(series, ObservableSeries):
        values = series.values
    else:
        values = np.asarray(series, dtype=float)
    if values.ndim != 2:
        raise ValueError("series must be a (d, N) matrix")
    d, n = values.shape
    if not (1 <= max_lag <= n):
        raise ValueError(f"max_lag must be in [1, {n}], got {max_lag}")
    if not np.all(np.isfinite(values)):
        raise ValueError("series contains non-finite values")
    a = values - values.mean(axis=1, keepdims=True)
    nfft = _fft_length(n)
    f = np.fft.rfft(a, nfft, axis=1)
    out = np.empty((max_lag, d, d))
    for i in range(d):
        for j in range(i, d):
            r = np.fft.irfft(np.conj(f[i]) * f[j], nfft)
            out[:, i, j] = r[:max_lag]
            if i != j:
                # negative lags of the same product give the transposed entry
                out[0, j, i] = r[0]
                out[1:, j, i] = r[-1:-max_lag:-1]
    out /= n
    if symmetrize:
        out = 0.5 * (out + np.transpose(out, (0, 2, 1)))
    return out


def doubling_transform(x):
    """Sum adjacent pairs of the centered series.

    Returns (v, ratio) where v_i = x'_{2i} + x'_{2i+1} for the centered
    series x' = x - xbar (a trailing odd element is dropped) and
    ratio = C_v(0) / C_x(0), the lag-0 variance ratio used to undo the
    transform in autocorrelation-time estimates.
    """
    x = _check_series(x)
    n2 = x.size // 2
    if n2 < 2:
        raise ValueError("series too short to halve")
    a = x - x.mean()
    v = a[: 2 * n2].reshape(n2, 2).sum(axis=1)
    c0_x = float(a @ a) / x.size
    if c0_x <= 0.0:
        raise DegenerateSeriesError("series is constant; no variance to work with")
    vc = v - v.mean()
    c0_v = float(vc @ vc) / n2
    return v, c0_v / c0_x
