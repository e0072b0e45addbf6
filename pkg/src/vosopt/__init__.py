"""Accelerated first-order methods from variable and operator splitting, with
Lyapunov-based verification of their convergence rates."""

from .core import (MonotoneOperator, Objective, ProxOracle, VosSplitting, bregman_divergence,
                   check_three_point_identity, verify_convexity_bounds)
from .errors import (CapabilityError, ConfigurationError, ConvergenceError, DivergenceError,
                     FitError, InputError, IntegrationError, ParameterError, VosError)
from .harness import (RateReport, TraceRecord, compare_to_theorem, fit_geometric_rate,
                      fit_power_rate, read_trace, write_trace)
from .problems import problem_from_dict
from .solvers import SCHEME_IDS, SchemeState, StepSizePolicy, run_scheme  # noqa: I001
from .lyapunov import (LyapunovSpec, check_cross_term_lemma, check_strong_lyapunov,
                       eval_lyapunov, integrate_flow)

__version__ = "0.1.0"

__all__ = [
    "CapabilityError", "ConfigurationError", "ConvergenceError", "DivergenceError", "FitError",
    "InputError", "IntegrationError", "LyapunovSpec", "MonotoneOperator", "Objective",
    "ParameterError", "ProxOracle", "RateReport", "SCHEME_IDS", "SchemeState",
    "StepSizePolicy", "TraceRecord", "VosError", "VosSplitting", "bregman_divergence",
    "check_cross_term_lemma", "check_strong_lyapunov", "check_three_point_identity",
    "compare_to_theorem", "eval_lyapunov", "fit_geometric_rate", "fit_power_rate",
    "integrate_flow", "problem_from_dict", "read_trace", "run_scheme",
    "verify_convexity_bounds", "write_trace",
]
