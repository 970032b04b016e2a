"""Exception hierarchy.

Every error raised on purpose by this package derives from
:class:`PowerscaleError`, so the CLI can render them uniformly and exit 1.
"""


class PowerscaleError(Exception):
    """Base class for all package errors."""


class NonFiniteValue(PowerscaleError, ValueError):
    def __init__(self, field, row, column=None):
        self.field = field
        self.row = row
        self.column = column
        where = f"row {row}" if column is None else f"row {row}, column {column}"
        super().__init__(f"non-finite value in {field} at {where}")


class DuplicateName(PowerscaleError, ValueError):
    pass


class TooFewDraws(PowerscaleError, ValueError):
    pass


class ZeroWeightSum(PowerscaleError, ValueError):
    pass


class InvalidProbability(PowerscaleError, ValueError):
    pass


class InvalidGrid(PowerscaleError, ValueError):
    pass


class SingularCovariance(PowerscaleError, ValueError):
    pass


class DegenerateTail(PowerscaleError, ValueError):
    pass


class EvaluatorInconsistent(PowerscaleError):
    pass


class EvaluatorFailure(PowerscaleError):
    def __init__(self, message, row=None):
        self.row = row
        super().__init__(message)


class SingularTransform(PowerscaleError):
    pass


class GridMismatch(PowerscaleError, ValueError):
    pass


class UnknownParameter(PowerscaleError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown parameter"


class LengthMismatch(PowerscaleError, ValueError):
    pass


class InvalidResultingParameters(PowerscaleError, ValueError):
    pass


class MissingReservedColumn(PowerscaleError, ValueError):
    def __init__(self, column, path=None):
        self.column = column
        prefix = f"{path}: " if path else ""
        super().__init__(f"{prefix}missing reserved column '{column}'")


class ParseError(PowerscaleError, ValueError):
    def __init__(self, message, path=None, line=None, column=None):
        self.path = path
        self.line = line
        self.column = column
        loc = []
        if path is not None:
            loc.append(str(path))
        if line is not None:
            loc.append(f"line {line}")
        if column is not None:
            loc.append(f"column {column}")
        prefix = ":".join(loc[:1]) + (" (" + ", ".join(loc[1:]) + ")" if loc[1:] else "")
        super().__init__(f"{prefix}: {message}" if loc else message)


class MixedLikColumns(PowerscaleError, ValueError):
    pass


class EmptySelection(PowerscaleError, ValueError):
    pass


class SpawnFailure(PowerscaleError):
    pass


class ProtocolViolation(PowerscaleError):
    def __init__(self, message, line=None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"evaluator protocol violation{where}: {message}")


class EvaluatorTimeout(PowerscaleError, TimeoutError):
    pass


class DegenerateSupportWarning(UserWarning):
    """All support points coincide; the divergence is reported as 0."""
