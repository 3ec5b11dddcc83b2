"""Exception types shared across the package."""


class SkewricError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(SkewricError):
    """Malformed expression text; carries the offending position."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class SingularPointError(SkewricError):
    """Evaluation hit the singular locus of a field (division by a
    near-zero denominator or log of a non-positive argument)."""


class DegenerateFrameError(SkewricError):
    """A frame or coframe fails to be linearly independent on the chart."""


class DecompositionError(SkewricError):
    """A flat-decomposition hypothesis or conclusion failed; carries the
    maximal residual observed."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (max residual {residual:.3e})")
        self.residual = residual


class RecurrenceUndefinedError(SkewricError):
    """The Ricci two-form vanishes on the whole sample set, so no
    recurrence form exists."""


class NotASubalgebraError(SkewricError):
    """The span of the given matrices is not closed under the bracket, or
    the inputs are dependent."""


class InconsistentInputError(SkewricError):
    """Input contradicts a structural fact (e.g. a rank-2 homomorphism out
    of an Abelian algebra)."""


class NotAHomomorphismError(SkewricError):
    """The linear map fails the bracket-compatibility test required by the
    operation."""


class AdmissibleSetError(SkewricError):
    """A dynamics computation left the admissible set (fibre coordinate too
    close to a kernel locus)."""


class MagnitudeCollapseError(SkewricError):
    """A first-integral magnitude collapsed mid-trajectory: either the zero
    branch of the dichotomy or a numerical failure."""


class TorsionError(SkewricError):
    """An operation requiring a torsionfree connection received one with
    torsion."""


class DegenerateMetricError(SkewricError):
    """Metric determinant vanished (or nearly so) at a sample point."""


class StructureViolationError(SkewricError):
    """A metric handed to the projection machinery does not carry the
    required null-parallel vertical structure."""
