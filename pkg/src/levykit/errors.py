"""Exception hierarchy.

The CLI maps :class:`ValidationError` subclasses to exit code 2 and
:class:`NumericalError` subclasses to exit code 3.
"""


class LevyKitError(Exception):
    pass


class ValidationError(LevyKitError):
    """A structural hypothesis on the model or a precondition failed."""


class NumericalError(LevyKitError):
    """Quadrature, grid or sampler failure."""


class InvalidProfileError(ValidationError):
    pass


class PreconditionError(ValidationError, ValueError):
    pass


class DegenerateModelError(ValidationError):
    """Re Φ is not bounded below by c(|ξ|^α ∧ |ξ|^β) with c > 0."""


class UnknownFamilyError(ValidationError, KeyError):
    pass


class QuadratureError(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message if residual is None else f"{message} (residual {residual:.3g})")
        self.residual = residual


class DivergentIntegralError(NumericalError):
    pass


class GridResolutionError(NumericalError):
    pass


class AcceptanceRateError(NumericalError):
    pass
