"""Generalised shift operators for Jacobi-weighted spaces on [-1, 1] and numerical
checks of the resulting Jackson, inverse and direct approximation theorems."""

from .analysis import (
    Resolution,
    default_n_values,
    estimate_rate,
    multiplier_check,
    theorem_data,
    verify_coincidence,
    verify_direct,
    verify_inverse,
    verify_jackson,
)
from .approx import PolyCoeffs, best_approx, error_sequence
from .modulus import modulus_curve, omega
from .polybasis import JacobiIndex, eval_jacobi, gauss_rule
from .shift import KernelSpec, apply_shift, default_kernel, lemma1_selftest, load_kernel_spec, operator_norm_probe
from .space import INF, FunctionHandle, SigmaWeight, WeightParams, admissible_for, corpus, weighted_norm

__all__ = [
    "INF",
    "FunctionHandle",
    "JacobiIndex",
    "KernelSpec",
    "PolyCoeffs",
    "Resolution",
    "SigmaWeight",
    "WeightParams",
    "admissible_for",
    "apply_shift",
    "best_approx",
    "corpus",
    "default_kernel",
    "default_n_values",
    "error_sequence",
    "estimate_rate",
    "eval_jacobi",
    "gauss_rule",
    "lemma1_selftest",
    "load_kernel_spec",
    "modulus_curve",
    "multiplier_check",
    "omega",
    "operator_norm_probe",
    "theorem_data",
    "verify_coincidence",
    "verify_direct",
    "verify_inverse",
    "verify_jackson",
    "weighted_norm",
]
