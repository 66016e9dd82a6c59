class ReductionError(Exception):
    """Base class for library errors. ``code`` is the machine-readable tag used by the CLI."""

    code = "error"


class InvalidIndexError(ReductionError, IndexError):
    code = "invalid-index"


class DimensionMismatchError(ReductionError, ValueError):
    code = "dimension-mismatch"


class DegeneratePlaneError(ReductionError, ValueError):
    code = "degenerate-plane"


class SingularConstraintError(ReductionError, ArithmeticError):
    code = "singular-constraint"


class ConstraintDriftError(ReductionError, RuntimeError):
    code = "constraint-drift"


class AmbiguousProjectionError(ReductionError, ValueError):
    code = "ambiguous-projection"


class RankCollapseError(ReductionError, RuntimeError):
    code = "rank-collapse"


class DegenerateSurfaceError(ReductionError, ValueError):
    code = "degenerate-surface"
