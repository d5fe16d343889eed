"""Exception types raised across the package."""


class FWHEBError(Exception):
    """Base class for package errors."""


class InvalidInputError(FWHEBError, ValueError):
    pass


class DimensionError(FWHEBError, ValueError):
    pass


class ConfigError(FWHEBError, ValueError):
    pass


class OracleFailure(FWHEBError, RuntimeError):
    pass


class InternalInvariantError(FWHEBError, RuntimeError):
    """A condition that holds for a correct LMO/solver was violated."""


class DegenerateConstantError(FWHEBError, ArithmeticError):
    pass


class NotApplicableError(FWHEBError, ValueError):
    """The check needs ground truth the problem does not carry."""


class TooFewPointsError(FWHEBError, ValueError):
    pass
