"""Maximum autocorrelation time over linear combinations of observables.

Given a bank of observable series u (shape (d, N)), find the coefficient
vector a maximizing the autocorrelation time of the scalar series a^T u.
With a lag window w the windowed tau of a^T u is a ratio of quadratic forms

    tau(a) ~= a^T K a / a^T C_0 a,    K = C_0 + 2 sum_k w(k) C_k,

so for a fixed window the maximizer is the top eigenvector of the
generalized eigenproblem K a = tau C_0 a. The window itself depends on a,
which makes the overall problem self-consistent: iterate
window(a) -> eigenproblem -> a until the reported tau settles.

Internals follow the scalar estimator: the lagged matrices are accumulated
on the pair-summed (doubled) series and the pencil is scaled by (1/2)^L so
its Rayleigh quotient is the original-series windowed tau; the reported tau
for each iterate is recomputed through the full scalar pipeline (including
the fitted tail), so a one-observable problem reduces exactly to
``estimate_tau``. Iteration starts from the individually slowest observable
and, with the monotone guard on (the default), the reported value never
decreases, so tau_max always dominates every individual observable's tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, eigh, solve_triangular

from ._io import atomic_write_text
from .covariance import ObservableSeries, cross_covariance_matrices
from .window import (
    STATUS_DEGENERATE,
    TauEstimate,
    default_max_lag,
    estimate_tau,
)


class CollinearBasisError(ValueError):
    """The observable basis is numerically collinear."""

    def __init__(self, message: str, diagnostic: float):
        self.diagnostic = diagnostic
        super().__init__(f"{message} (min eigenvalue / trace = {diagnostic:.3e})")


@dataclass
class GevResult:
    value: float
    vector: np.ndarray


@dataclass
class ThoroughnessReport:
    """Has the chain sampled long enough to trust means to tolerance tol?

    The requirement is n >= tau_max / tol^2: with tau_max correlated samples
    per independent one, that chain length makes the standard error of a
    unit-variance observable's mean about tol.
    """

    n: int
    tau_max: float
    tol: float
    required_n: float
    satisfied: bool


@dataclass
class TraceEntry:
    iteration: int
    tau: float  # reported (guarded) value
    tau_raw: float
    a: np.ndarray
    window_m: float
    status: str


@dataclass
class TauMaxResult:
    tau_max: float
    ess: float
    a: np.ndarray
    status: str  # "converged" | "max_iters" | "degenerate"
    iterations: int
    trace: list[TraceEntry]
    thoroughness: ThoroughnessReport
    individual: list[TauEstimate]
    labels: list[str]
    n: int
    pruned: list[str] = field(default_factory=list)


def check_thoroughness(n: int, tau_max: float, tol: float = 0.1) -> ThoroughnessReport:
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    required = tau_max / (tol * tol)
    return ThoroughnessReport(n=n, tau_max=tau_max, tol=tol,
                              required_n=required, satisfied=n >= required)


def generalized_eig_max(K, C0) -> GevResult:
    """Largest eigenpair of K a = value C0 a for symmetric K, SPD C0.

    K is symmetrized first; the returned vector satisfies a^T C0 a = 1.
    Solved by Cholesky reduction C0 = L L^T and a dense symmetric
    eigensolve of L^-1 K L^-T. A Cholesky failure gets one retry with
    jitter 1e-12 tr(C0)/d on the diagonal, then CollinearBasisError.
    """
    K = np.asarray(K, dtype=float)
    C0 = np.asarray(C0, dtype=float)
    d = K.shape[0]
    if K.shape != (d, d) or C0.shape != (d, d):
        raise ValueError("K and C0 must be square matrices of matching shape")
    Ks = 0.5 * (K + K.T)
    try:
        L = cholesky(C0, lower=True)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * np.trace(C0) / d
        try:
            L = cholesky(C0 + jitter * np.eye(d), lower=True)
        except np.linalg.LinAlgError:
            evals = np.linalg.eigvalsh(0.5 * (C0 + C0.T))
            raise CollinearBasisError(
                "observable covariance is not positive definite; "
                "basis rows are collinear", float(evals[0] / np.trace(C0)),
            ) from None
    W = solve_triangular(L, Ks, lower=True)
    W = solve_triangular(L, W.T, lower=True).T
    W = 0.5 * (W + W.T)
    evals, evecs = eigh(W)
    y = evecs[:, -1]
    a = solve_triangular(L, y, lower=True, trans="T")
    nrm = float(a @ C0 @ a)
    if nrm > 0.0:
        a = a / math.sqrt(nrm)
    return GevResult(value=float(evals[-1]), vector=a)


def prune_collinear(C0: np.ndarray, threshold: float = 1e-10) -> list[int]:
    """Indices of rows to keep, by pivoted elimination on the correlation
    matrix; a row whose residual variance fraction drops below threshold is
    redundant with the rows already kept."""
    d = C0.shape[0]
    var = np.diag(C0).copy()
    keep_mask = var > 0.0
    idx = np.flatnonzero(keep_mask)
    scale = np.sqrt(var[idx])
    R = C0[np.ix_(idx, idx)] / np.outer(scale, scale)
    # greedy pivoted Cholesky on R; diag of the Schur complement tracks the
    # residual variance fraction of each remaining row
    n = idx.size
    diag = np.ones(n)
    L = np.zeros((n, n))
    order: list[int] = []
    active = list(range(n))
    for step in range(n):
        piv = max(active, key=lambda i: diag[i])
        if diag[piv] < threshold:
            break
        order.append(piv)
        active.remove(piv)
        lp = math.sqrt(diag[piv])
        L[piv, step] = lp
        for i in active:
            s = R[i, piv] - L[i, :step] @ L[piv, :step]
            L[i, step] = s / lp
            diag[i] -= L[i, step] ** 2
        diag[piv] = 0.0
    kept = sorted(int(idx[i]) for i in order)
    return kept


def _double_rows(values: np.ndarray, levels: int):
    """Row-wise centered pair-summing, levels times; returns (v, applied)."""
    v = values - values.mean(axis=1, keepdims=True)
    applied = 0
    for _ in range(levels):
        n2 = v.shape[1] // 2
        if n2 < 16:
            break
        v = v[:, : 2 * n2].reshape(v.shape[0], n2, 2).sum(axis=2)
        v = v - v.mean(axis=1, keepdims=True)
        applied += 1
    return v, applied


def estimate_tau_max(series, labels=None, *, doubling_levels: int = 1,
                     max_lag: int | None = None, rtol: float = 1e-3,
                     max_iters: int = 20, monotone_guard: bool = True,
                     tol: float = 0.1) -> TauMaxResult:
    """Maximize the autocorrelation time over linear combinations of rows.

    series is an ObservableSeries or a (d, N) array (labels optional).
    Stops when the reported tau moves by less than rtol relatively, or
    after max_iters window/eigenproblem rounds. Coefficients come back with
    the largest-magnitude entry normalized to one, zeros filled in for rows
    pruned as collinear. The thoroughness check is evaluated at tolerance
    tol on the final value.
    """
    if isinstance(series, ObservableSeries):
        obs = series
    else:
        values = np.atleast_2d(np.asarray(series, dtype=float))
        if labels is None:
            labels = [f"obs_{i + 1}" for i in range(values.shape[0])]
        obs = ObservableSeries(values=values, labels=list(labels))
    d, n = obs.dimension, obs.n
    if n < 16:
        raise ValueError(f"need at least 16 samples, got {n}")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")

    c_stack0 = cross_covariance_matrices(obs.values, 1)
    kept = prune_collinear(c_stack0[0])
    if not kept:
        raise CollinearBasisError("no observable has positive variance", 0.0)
    pruned = [obs.labels[i] for i in range(d) if i not in kept]
    rows = obs.values[kept]
    dk = len(kept)

    c0_u = cross_covariance_matrices(rows, 1)[0]
    v_rows, levels = _double_rows(rows, doubling_levels)
    nv = v_rows.shape[1]
    m_lags = default_max_lag(nv) if max_lag is None else min(max_lag, nv)
    c_stack = cross_covariance_matrices(v_rows, m_lags)
    scale = 0.5**levels

    individual = [estimate_tau(rows[i], doubling_levels=doubling_levels,
                               max_lag=max_lag) for i in range(dk)]

    def embed(a_kept: np.ndarray) -> np.ndarray:
        a_full = np.zeros(d)
        a_full[kept] = a_kept
        return a_full

    def normalize(a_full: np.ndarray) -> np.ndarray:
        pivot = a_full[np.argmax(np.abs(a_full))]
        return a_full / pivot if pivot != 0.0 else a_full

    usable = [i for i, est in enumerate(individual)
              if est.status != STATUS_DEGENERATE and est.window is not None]
    if not usable:
        i0 = int(np.argmax([est.tau for est in individual]))
        tau0 = individual[i0].tau
        a0 = np.zeros(dk)
        a0[i0] = 1.0
        trace = [TraceEntry(0, tau0, tau0, embed(a0), math.nan, STATUS_DEGENERATE)]
        thor = check_thoroughness(n, tau0, tol)
        return TauMaxResult(tau_max=tau0, ess=n / tau0 if tau0 > 0 else math.inf,
                            a=normalize(embed(a0)), status=STATUS_DEGENERATE,
                            iterations=0, trace=trace, thoroughness=thor,
                            individual=individual, labels=list(obs.labels),
                            n=n, pruned=pruned)

    i0 = max(usable, key=lambda i: individual[i].tau)
    a_cur = np.zeros(dk)
    a_cur[i0] = 1.0
    est_cur = individual[i0]
    tau_rep = est_cur.tau
    best_tau, best_a = tau_rep, a_cur
    trace = [TraceEntry(0, tau_rep, est_cur.tau, embed(a_cur),
                        est_cur.window.m, est_cur.status)]

    status = "max_iters"
    iterations = 0
    for it in range(1, max_iters + 1):
        if est_cur.window is None:
            break
        w = est_cur.window.weights
        K_v = c_stack[0] + 2.0 * np.tensordot(w[1:], c_stack[1:], axes=(0, 0))
        gev = generalized_eig_max(scale * K_v, c0_u)
        a_new = gev.vector
        est_new = estimate_tau(a_new @ rows, doubling_levels=doubling_levels,
                               max_lag=max_lag)
        prev_rep = tau_rep
        if monotone_guard:
            tau_rep = max(tau_rep, est_new.tau)
        else:
            tau_rep = est_new.tau
        if est_new.tau >= best_tau:
            best_tau, best_a = est_new.tau, a_new
        win_m = est_new.window.m if est_new.window is not None else math.nan
        trace.append(TraceEntry(it, tau_rep, est_new.tau, embed(a_new),
                                win_m, est_new.status))
        iterations = it
        if abs(tau_rep - prev_rep) <= rtol * abs(tau_rep):
            status = "converged"
            a_cur, est_cur = a_new, est_new
            break
        a_cur, est_cur = a_new, est_new

    if monotone_guard:
        tau_final, a_final = best_tau, best_a
    else:
        tau_final, a_final = tau_rep, a_cur

    thor = check_thoroughness(n, tau_final, tol)
    return TauMaxResult(
        tau_max=tau_final,
        ess=n / tau_final if tau_final > 0.0 else math.inf,
        a=normalize(embed(a_final)),
        status=status,
        iterations=iterations,
        trace=trace,
        thoroughness=thor,
        individual=individual,
        labels=list(obs.labels),
        n=n,
        pruned=pruned,
    )


def save_trace_csv(result: TauMaxResult, path) -> None:
    """Dump the iteration trace: iteration, tau, a_1..a_d, window_m, status."""
    d = result.a.shape[0]
    header = "iteration,tau," + ",".join(f"a_{i + 1}" for i in range(d)) + ",window_m,status"
    lines = [header]
    for e in result.trace:
        coeffs = ",".join(f"{v:.17g}" for v in e.a)
        lines.append(f"{e.iteration},{e.tau:.17g},{coeffs},{e.window_m:.17g},{e.status}")
    atomic_write_text(path, "\n".join(lines) + "\n")
