"""Inverse of the non-uniform difference operator ``v -> v(t + alpha*phi(t)) - v(t)``."""
from .constants import ConstantsReport, compute_constants, scaling_study, trapezoid_check
from .errors import DeltaPhiError, NumericalError, SolvabilityError, ValidationError
from .estimator import DifferenceInverse
from .gram import gram_matrix
from .grid import GridFunction, lipschitz_norm
from .inverse import InverseSolution, backward_sum, bilateral_sum, check_solvability, forward_sum, solve
from .jets import CpReport, JetState, contraction_check, cp_bound, cp_norm, jet_step, propagate
from .kernel import constant_element, kernel_eval, oscillation_profile, step_element, verify_invariance
from .shift import (
    PerturbationField,
    ShiftMap,
    bump_field,
    eval_shift,
    invert_shift,
    orbit,
    sampled_field,
    scaled_sine_field,
    sine_field,
    validate_nondegeneracy,
)

__version__ = "0.1.0"

__all__ = [
    "ConstantsReport", "CpReport", "DeltaPhiError", "DifferenceInverse", "GridFunction",
    "InverseSolution", "JetState", "NumericalError", "PerturbationField", "ShiftMap",
    "SolvabilityError", "ValidationError", "backward_sum", "bilateral_sum", "bump_field",
    "check_solvability", "compute_constants", "constant_element", "contraction_check", "cp_bound",
    "cp_norm", "eval_shift", "forward_sum", "gram_matrix", "invert_shift", "jet_step",
    "kernel_eval", "lipschitz_norm", "orbit", "oscillation_profile", "propagate", "sampled_field",
    "scaled_sine_field", "scaling_study", "sine_field", "solve", "step_element", "trapezoid_check",
    "validate_nondegeneracy", "verify_invariance",
]
