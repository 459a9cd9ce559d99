"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line front end:
2 for invalid input, 3 for exhausted numerical budgets, 4 for internal
inconsistencies.
"""


class FreqRestrictError(Exception):
    exit_code = 1


class ValidationError(FreqRestrictError, ValueError):
    exit_code = 2


class BudgetError(FreqRestrictError, RuntimeError):
    exit_code = 3


class InconsistencyError(FreqRestrictError, RuntimeError):
    exit_code = 4


# analytic core
class NoDecay(ValidationError):
    """Coefficients show no verifiable geometric decay at the stated radius."""


class OutOfDisc(ValidationError):
    pass


class ZeroFunction(ValidationError):
    pass


class RadiusExceeded(ValidationError):
    pass


class BoundaryZero(ValidationError):
    pass


class TailTooLarge(BudgetError):
    pass


class NoConvergence(BudgetError):
    pass


class RootPolishFailure(BudgetError):
    pass


class FactorMismatch(InconsistencyError):
    pass


# decomposition
class VanishingFactor(ValidationError):
    pass


class RadiusTooSmall(ValidationError):
    pass


class NotInClass(ValidationError):
    pass


class DepthExceeded(BudgetError):
    pass


class DegenerateSegment(BudgetError):
    pass


# geometry
class CenterInside(ValidationError):
    pass


class DegeneratePiece(ValidationError):
    pass


class CostGuard(BudgetError):
    pass


class CalibrationInconsistent(InconsistencyError):
    pass


# restriction lab
class OutOfRange(ValidationError):
    pass


class InsufficientGaps(ValidationError):
    pass


class BudgetExceeded(BudgetError):
    pass
