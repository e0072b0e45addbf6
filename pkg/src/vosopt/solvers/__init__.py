"""Discrete schemes behind a uniform stepper interface."""

from .agss import agss_explicit_step, agss_implicit_step, saddle_explicit_step, saddle_implicit_step
from .baseline import HssSolver, gd_step, hss_step, ppa_step
from .convex import (HomotopyRecord, HomotopyResult, estimate_radius, homotopy_restart,
                     perturbed_energy, perturbed_epc_step, scaled_epc_step, scaled_ppa_step)
from .runner import (SCHEME_IDS, RunResult, problem_constants, run_scheme, theorem_alpha,
                     theorem_rate)
from .state import SchemeState, initial_state
from .stepsize import StepSizePolicy
from .vos import (aor_hb_step, aor_vos_step, composite_aor_step, composite_epc_step,
                  epc_vos_step, extra_gradient_step)

__all__ = [
    "SCHEME_IDS", "HomotopyRecord", "HomotopyResult", "HssSolver", "RunResult", "SchemeState",
    "StepSizePolicy", "agss_explicit_step", "agss_implicit_step", "aor_hb_step",
    "aor_vos_step", "composite_aor_step", "composite_epc_step", "epc_vos_step",
    "estimate_radius", "extra_gradient_step", "gd_step", "homotopy_restart", "hss_step",
    "initial_state", "perturbed_energy", "perturbed_epc_step", "ppa_step",
    "problem_constants", "run_scheme", "saddle_explicit_step", "saddle_implicit_step",
    "scaled_epc_step", "scaled_ppa_step", "theorem_alpha", "theorem_rate",
]
