"""Autocorrelation-time estimation for MCMC output.

The central quantities: the integrated autocorrelation time tau of a scalar
observable series, its effective sample size N/tau, and tau_max, the
maximum of tau over linear combinations of a bank of observables. A chain
is thorough at tolerance tol once N >= tau_max / tol^2.
"""

from .covariance import (
    CovSeq,
    DegenerateSeriesError,
    ObservableSeries,
    autocovariance,
    cross_covariance_matrices,
    doubling_transform,
)
from .samplers import (
    ChainConfig,
    NonFiniteStateError,
    Trajectory,
    elm_gamma,
    load_trajectory,
    run_chain,
    run_ensemble,
    save_trajectory,
)
from .targets import (
    CustomTarget,
    LMixture,
    LogisticRegression,
    OneNodeNN,
    StdGaussian,
    Target,
)
from .taumax import (
    CollinearBasisError,
    GevResult,
    TauMaxResult,
    ThoroughnessReport,
    check_thoroughness,
    estimate_tau_max,
    generalized_eig_max,
)
from .window import (
    AcfFit,
    DegenerateFitError,
    LagWindow,
    TauEstimate,
    estimate_tau,
    estimate_tau_acor,
    fit_exponential_acf,
    optimal_window_offset,
    tau_from_ar1,
    variance_of_mean,
)

__version__ = "0.1.0"

__all__ = [
    "AcfFit",
    "ChainConfig",
    "CollinearBasisError",
    "CovSeq",
    "CustomTarget",
    "DegenerateFitError",
    "DegenerateSeriesError",
    "GevResult",
    "LMixture",
    "LagWindow",
    "LogisticRegression",
    "NonFiniteStateError",
    "ObservableSeries",
    "OneNodeNN",
    "StdGaussian",
    "Target",
    "TauEstimate",
    "TauMaxResult",
    "ThoroughnessReport",
    "Trajectory",
    "autocovariance",
    "check_thoroughness",
    "cross_covariance_matrices",
    "doubling_transform",
    "elm_gamma",
    "estimate_tau",
    "estimate_tau_acor",
    "estimate_tau_max",
    "fit_exponential_acf",
    "generalized_eig_max",
    "load_trajectory",
    "optimal_window_offset",
    "run_chain",
    "run_ensemble",
    "save_trajectory",
    "tau_from_ar1",
    "variance_of_mean",
]
