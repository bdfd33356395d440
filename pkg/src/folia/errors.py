"""Exception types shared across the package."""


class FoliaError(Exception):
    """Base class for all errors raised by this package."""


class JetDomainError(FoliaError):
    """A primitive was evaluated outside its domain (log of a non-positive
    value, division by zero, |x| at 0, ...)."""

    def __init__(self, primitive, detail=""):
        self.primitive = primitive
        self.detail = detail
        msg = f"domain error in '{primitive}'"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class JetOrderError(FoliaError):
    """An operation needed more Taylor coefficients than were computed."""


class ExprError(FoliaError):
    """Lexical or syntactic error in an expression, with a byte offset."""

    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} at offset {offset}")


class SceneError(FoliaError):
    """A scene file failed validation; carries a human-readable location."""


class ShapeError(FoliaError):
    """Dimension / degree / variance mismatch between algebra operands."""


class MetricError(FoliaError):
    """Metric is not symmetric positive definite, or is singular at a point."""


class NormalizationError(FoliaError):
    """The pair (omega, T) violates the unit-contraction normalization."""


class IntegrabilityError(FoliaError):
    """A declared integrability hypothesis failed its sampled certificate."""


class OutsideDomainError(FoliaError):
    """Evaluation was requested on the excluded singular set."""


class UndefinedFrameError(FoliaError):
    """Principal normal / binormal frame undefined (mean curvature ~ 0)."""


class QuadratureError(FoliaError):
    """Numerical integration failed to converge within its schedule."""


class OdeError(FoliaError):
    """ODE integration aborted (singular right-hand side, step underflow)."""

    def __init__(self, message, r=None):
        self.r = r
        if r is not None:
            message = f"{message} (at r = {r:.6g})"
        super().__init__(message)
