"""Cox proportional-hazards dropout-timing models with OLS and epsilon-SVR baselines."""

from ._core import (
    Error,
    baseline_hazard,
    error_balance,
    fit_cox,
    fit_ols,
    fit_svr,
    log_partial_likelihood,
    mae,
    pll_gradient,
    pll_hessian,
    predict_semester,
    run_cli,
)

__all__ = [
    "Error",
    "baseline_hazard",
    "error_balance",
    "fit_cox",
    "fit_ols",
    "fit_svr",
    "log_partial_likelihood",
    "mae",
    "pll_gradient",
    "pll_hessian",
    "predict_semester",
    "run_cli",
]
