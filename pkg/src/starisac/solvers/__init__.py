"""Numerical kernels: generalized eigenproblems, convex QCQP, unit-modulus solvers."""
from .eigen import lambda_max, max_generalized_rayleigh, normalize_phase
from .qcqp import (InfeasibleStartError, KktReport, NonConvexError, QcqpError, QcqpProblem,
                   QuadraticForm, find_strictly_feasible, solve_qcqp)
from .unimodular import (UnimodularResult, minimize_unit_modulus_ccm, minimize_unit_modulus_mm,
                         mm_surrogate, riemannian_gradient, unimodular_objective)

__all__ = [
    "InfeasibleStartError", "KktReport", "NonConvexError", "QcqpError", "QcqpProblem",
    "QuadraticForm", "UnimodularResult", "find_strictly_feasible", "lambda_max",
    "max_generalized_rayleigh", "minimize_unit_modulus_ccm", "minimize_unit_modulus_mm",
    "mm_surrogate", "normalize_phase", "riemannian_gradient", "solve_qcqp",
    "unimodular_objective",
]
