"""Exception hierarchy.  Each class maps to one CLI exit code."""


class CanardFractalError(Exception):
    exit_code = 4


class EvaluationError(CanardFractalError):
    """A piece of the system could not be evaluated."""


class AssumptionViolation(CanardFractalError):
    exit_code = 3


class QuadratureError(CanardFractalError):
    pass


class DomainError(CanardFractalError):
    """A root or integral was requested outside the validated range."""


class SeriesError(CanardFractalError):
    pass


class RegimeError(CanardFractalError):
    """The slow divergence integral changes sign where it must not."""


class EstimatorError(CanardFractalError):
    pass


class FlowError(CanardFractalError):
    """Integration failed: sliding, escape, or step-size collapse."""


class UnsupportedCase(CanardFractalError):
    """A case the dimension formulas do not cover (k0 = n - 1 at infinity)."""
    exit_code = 3
