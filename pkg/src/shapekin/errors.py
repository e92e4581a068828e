"""Exception hierarchy shared by all modules."""


class ShapekinError(Exception):
    """Base class for all library errors."""


class MetricError(ShapekinError):
    """A metric is not symmetric positive definite."""


class SingularCompressionError(ShapekinError):
    """A deformation/Jacobian has non-positive determinant."""


class NonPositiveShapeError(ShapekinError):
    """A shape tensor has a non-positive eigenvalue."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class DomainError(ShapekinError):
    """Argument outside the admissible domain (time window, step size...)."""


class FrameError(ShapekinError):
    """A supplied rotation is not orthogonal."""


class GridError(ShapekinError):
    """Grid too small for the stencil, or a path leaves the grid."""


class SymmetryError(ShapekinError):
    """A field expected to be symmetric is not."""


class IncompatibleFieldError(ShapekinError):
    """A strain field fails the compatibility threshold."""


class RegimeError(ShapekinError):
    """Small-deformedness precondition violated."""
