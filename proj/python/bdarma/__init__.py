"""Bayesian Dirichlet ARMA models for compositional time series."""

from ._bdarma import (
    BdarmaError,
    Fit,
    ValidationError,
    alr,
    alr_inv,
    builtin_dgp_names,
    dirichlet_logpdf,
    fit,
    ratio_table,
    recovery_metrics,
    run_study,
    simulate,
    synthetic_shares,
    true_parameters,
)

__all__ = [
    "BdarmaError",
    "Fit",
    "ValidationError",
    "alr",
    "alr_inv",
    "builtin_dgp_names",
    "dirichlet_logpdf",
    "fit",
    "ratio_table",
    "recovery_metrics",
    "run_study",
    "simulate",
    "synthetic_shares",
    "true_parameters",
]
