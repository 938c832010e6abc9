"""Exception types raised across the package."""


class DeficitLabError(Exception):
    """Base class for all package errors."""


class InvalidDensity(DeficitLabError, ValueError):
    pass


class InvalidDimension(InvalidDensity):
    pass


class InvalidScale(DeficitLabError, ValueError):
    pass


class InvalidPair(DeficitLabError, ValueError):
    """Two objects that must share a dimension do not."""


class BudgetExceeded(DeficitLabError):
    """Exact mixture representation would exceed the component budget."""


class InsufficientCoverage(DeficitLabError, ValueError):
    """A discretization grid truncates too much probability mass."""


class UnsupportedEstimator(DeficitLabError, NotImplementedError):
    pass


class EstimatorFailed(DeficitLabError, RuntimeError):
    pass


class PreconditionViolated(DeficitLabError, ValueError):
    pass


class InvalidTime(DeficitLabError, ValueError):
    pass


class InvalidFunction(DeficitLabError, ValueError):
    pass


class InvalidBody(DeficitLabError, ValueError):
    pass


class InvalidConfig(DeficitLabError, ValueError):
    pass
