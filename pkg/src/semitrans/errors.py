"""Exception and warning types raised across the package."""


class SemitransError(Exception):
    """Base class for all package errors."""


# transforms
class DomainError(SemitransError, ValueError):
    """Response value outside the admissible domain of a transformation."""


class ParameterError(SemitransError, ValueError):
    """Transformation parameter outside its bounds."""


class RangeError(SemitransError, ValueError):
    """Value outside the range of a transformation, so it cannot be inverted."""


class ConvergenceError(SemitransError, RuntimeError):
    """Iterative root finding did not converge."""


# data / smoothing
class EmptyData(SemitransError, ValueError):
    pass


class EmptyGrid(SemitransError, ValueError):
    pass


class DegenerateData(SemitransError, ValueError):
    """Data without spread where a scale estimate is required."""


# estimation
class AllCellsFailed(SemitransError, RuntimeError):
    """Every cell of the parameter grid failed to evaluate."""


class BootstrapDegenerate(SemitransError, RuntimeError):
    """Every bootstrap replicate failed."""


# io
class ParseError(SemitransError, ValueError):
    def __init__(self, message, row=None, column=None):
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", column {column!r})" if column is not None else ")")
        super().__init__(message + loc)
        self.row = row
        self.column = column


class MissingColumn(ParseError):
    pass


class NonNumericCell(ParseError):
    pass


class ConfigError(SemitransError, ValueError):
    pass


class UnknownKey(ConfigError):
    pass


class InvalidValue(ConfigError):
    def __init__(self, key, value, reason=""):
        msg = f"invalid value {value!r} for {key!r}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)
        self.key = key


class IoError(SemitransError, OSError):
    pass


class ConvergenceWarning(UserWarning):
    """Backfitting stopped at max_iter before reaching the tolerance."""


class SingularDensity(UserWarning):
    """Estimated marginal density vanished at a grid point."""
