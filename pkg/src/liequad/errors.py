"""Exception hierarchy.

Numerical failures (:class:`NumericalFailure` subclasses) map to CLI exit
code 2; everything else raised from a pipeline is a usage/input problem.
"""


class LieQuadError(Exception):
    """Base class for all package errors."""


class NumericalFailure(LieQuadError):
    """An integration or analysis step could not be completed numerically."""


class NonHorizontal(LieQuadError):
    """An algebra element expected in the horizontal plane has a vertical part."""


class ZeroVelocity(NumericalFailure):
    """|v| fell below the threshold where the direction v/|v| is defined."""


class UndersampledRotation(NumericalFailure):
    """Consecutive directions differ by nearly pi, the angle lift is ambiguous."""


class RadialUnderflow(NumericalFailure):
    """The polar form was evaluated with q <= q_min."""


class StepFailure(NumericalFailure):
    """The adaptive step size underflowed."""


class BudgetExceeded(NumericalFailure):
    """The solver hit max_steps before reaching the end of the span."""


class PoleProjection(LieQuadError):
    """Stereographic projection requested at the projection pole."""


class GridMismatch(LieQuadError):
    """Two trajectories that must share a time grid do not."""


class SpanExceeded(LieQuadError):
    """A rescaled time falls outside the span of the source trajectory."""


class InsufficientTail(LieQuadError):
    """The trajectory is too short for the requested asymptotic analysis."""


class NotGrowing(LieQuadError):
    """q is not increasing on the requested fit window."""


class NonNull(LieQuadError):
    """A null-only analysis was requested on a trajectory with C != 0."""


class NonUnitQuaternion(LieQuadError):
    """A group element violates the unit-norm constraint."""
