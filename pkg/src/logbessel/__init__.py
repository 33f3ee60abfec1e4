"""log K_v(x) by fixed-bin log-domain quadrature, with classical baselines."""
from .batch import BatchRequest, BatchResult, evaluate_batch, log_bessel_k_batch
from .bracket import Bracket, BracketOverflow, InvalidBracket, ZeroFindConfig, find_range, find_zero
from .integrand import DomainError, EvalPoint, IntegrandSpec, SignedLog
from .quadrature import (
    IntegrationPlan,
    QuadratureConfig,
    integrate,
    log_bessel_k,
    log_bessel_k_deriv,
    log_bessel_k_dlogx,
    plan_integration,
)
from .reference import (
    NoConvergence,
    asymptotic_log_k,
    continued_fraction_log_k,
    sca_log_k,
    series_log_k,
)

__all__ = [
    "BatchRequest", "BatchResult", "evaluate_batch", "log_bessel_k_batch",
    "Bracket", "BracketOverflow", "InvalidBracket", "ZeroFindConfig", "find_range", "find_zero",
    "DomainError", "EvalPoint", "IntegrandSpec", "SignedLog",
    "IntegrationPlan", "QuadratureConfig", "integrate", "log_bessel_k", "log_bessel_k_deriv",
    "log_bessel_k_dlogx", "plan_integration",
    "NoConvergence", "asymptotic_log_k", "continued_fraction_log_k", "sca_log_k", "series_log_k",
]
