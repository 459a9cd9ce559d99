"""Frequency functions, monomial decompositions and restriction experiments
for simple curves with bounded-frequency torsion."""

from .analytic import (AnalyticFunction, Disc, derivative, doubling_ratio, evaluate,
                       factor_out_zeros, frequency, multiply, roots_in_disc, zero_count)
from .decomposition import (Decomposition, DecompositionPiece, full_decompose,
                            monomial_decompose, oscillation_decompose, polynomial_decompose,
                            sign_components)
from .errors import BudgetError, FreqRestrictError, InconsistencyError, ValidationError

__all__ = [
    "AnalyticFunction", "Disc", "derivative", "doubling_ratio", "evaluate", "factor_out_zeros",
    "frequency", "multiply", "roots_in_disc", "zero_count",
    "Decomposition", "DecompositionPiece", "full_decompose", "monomial_decompose",
    "oscillation_decompose", "polynomial_decompose", "sign_components",
    "BudgetError", "FreqRestrictError", "InconsistencyError", "ValidationError",
]
