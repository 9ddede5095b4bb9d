"""Exception hierarchy shared by every module of the package."""


class FrameError(Exception):
    """Base class for all errors raised by cgfusion."""


class DimensionError(FrameError, ValueError):
    """Operands have non-conformable shapes or slot counts."""


class OrderError(FrameError, ValueError):
    """An order comparison was requested between non-self-adjoint elements."""


class PositivityError(FrameError, ValueError):
    """An operation requiring a positive (or positive definite) input got something else."""


class SingularError(FrameError, ValueError):
    """An inverse was requested of a singular element or operator."""


class WeightError(FrameError, ValueError):
    """A frame weight is not a positive invertible algebra element."""


class CommutationError(FrameError):
    """Controllers fail the commutation hypotheses for a system.

    ``residuals`` maps a label (``"CC'"``, ``"C,phi[3]"``, ...) to the
    measured commutator norm.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = dict(residuals or {})


class HypothesisError(FrameError):
    """A theorem's hypothesis failed numerically; ``check`` names which one."""

    def __init__(self, message, check=None, residual=None):
        super().__init__(message)
        self.check = check
        self.residual = residual


class MorphismError(FrameError, ValueError):
    """A slot map does not define a surjective transport."""


class BoundsError(FrameError, ValueError):
    """Claimed frame bounds are not valid bounds for the operator."""


class ConvergenceError(FrameError):
    """An iterative solver hit ``max_iter``; the partial report is attached."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ParamError(FrameError, ValueError):
    """A numeric parameter is outside its admissible range."""


class DocumentError(FrameError, ValueError):
    """An instance or result document is malformed or has the wrong schema."""
