"""Exception hierarchy shared by every module of the solver."""


class HbdError(Exception):
    """Base class for all solver errors."""


class SchemaError(HbdError, ValueError):
    """An instance or model document is missing fields or has the wrong types."""


class DimensionMismatchError(HbdError, ValueError):
    """Declared dimensions disagree with the stored array shapes."""


class NumericalInstabilityError(HbdError):
    """The simplex method exceeded its pivot budget."""


class EncodingImpossibleError(HbdError):
    """The phi bound LP is unbounded, so phi has no finite binary encoding."""


class InstanceInfeasibleError(HbdError):
    """The LP relaxation of the instance has no feasible point."""


class UnboundedProblemError(HbdError):
    """A subproblem is unbounded, hence the whole MILP has no finite optimum."""


class MasterInfeasibleError(HbdError):
    """A master constraint or cut cannot be satisfied by any x."""


class InternalInconsistencyError(HbdError):
    """Two routes that must agree (e.g. subproblem infeasibility and the violation LP value) did not."""


class SizeCapError(HbdError):
    """A QUBO is too large for exhaustive enumeration."""


class GeneratorError(HbdError):
    """The random instance generator rejected too many draws."""
