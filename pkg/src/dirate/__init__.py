"""Causally conditioned directed information rates for stationary Gaussian processes.

Exact rates for known VAR models, data-driven estimates from block
covariances, and their non-asymptotic error radius.
"""
from .bounds import BoundParams, ErrorBound, choose_p, epsilon, tail_term, total_error_bound
from .estimator import (
    DIEstimate,
    di_rate_estimate,
    empirical_block_cov,
    residual_cov_estimate,
    var_ls_residual_cov,
)
from .model import (
    AutocovSequence,
    Partition,
    PsdBounds,
    TimeSeries,
    VarModel,
    autocovariance,
    psd_bounds,
    reference_model,
    select_autocov,
    simulate,
    validate_model,
)
from .prediction import (
    DIRate,
    exact_di_rate,
    exact_residual_cov,
    finite_horizon_residual,
    joint_predictor_params,
    kalman_predictor_poles,
)

__version__ = "0.1.0"
