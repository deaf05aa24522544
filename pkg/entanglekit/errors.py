"""Exception hierarchy for entanglekit.

Each error class carries the exit code the CLI reports for it. Precondition
and parse errors also derive from ValueError, capacity errors from
MemoryError, so callers that catch the builtin types keep working.
"""


class EntangleKitError(Exception):
    """Base class for all entanglekit errors."""

    exit_code = 1


class ParseError(EntangleKitError, ValueError):
    """Malformed input file. Carries the offending location when known."""

    exit_code = 2

    def __init__(self, message, path=None, line=None, column=None):
        self.path = path
        self.line = line
        self.column = column
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class PreconditionError(EntangleKitError, ValueError):
    """An operation was called with inputs outside its preconditions."""

    exit_code = 3


class ArgumentError(PreconditionError):
    pass


class PartitionError(PreconditionError):
    """Axis subset is empty, full, out of range or otherwise invalid."""


class ShapeError(PreconditionError):
    pass


class NumericError(PreconditionError):
    """Non-finite values where finite ones are required."""


class DegenerateInputError(PreconditionError):
    """Zero tensor (or zero data tensor) where a nonzero one is required."""


class DegenerateFeatureError(PreconditionError):
    """Feature with zero variance, so its Pearson correlation is undefined."""


class ConfigError(PreconditionError):
    pass


class CapacityError(EntangleKitError, MemoryError):
    """Dense expansion would exceed the configured memory budget."""

    exit_code = 4
