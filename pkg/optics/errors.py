"""Exception hierarchy shared by the optics, qml and cli packages.

Each class carries the process exit code the CLI reports for it.
"""


class OpticsError(Exception):
    """Base class for expected, user-facing failures."""
    exit_code = 1


class InputError(OpticsError, ValueError):
    """Invalid arguments or malformed input."""
    exit_code = 2


class ParseError(InputError):
    """Malformed input file, with the location of the offending record."""

    def __init__(self, message, source=None, line=None, field=None):
        self.source = source
        self.line = line
        self.field = field
        where = []
        if source:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class UnreachableOutcomeError(InputError):
    """A designated adaptive outcome has zero probability."""


class CapacityError(OpticsError):
    """Instance too large for a dense table."""
    exit_code = 3


class StarvationError(OpticsError):
    """Post-selection loop exhausted its attempt budget."""
    exit_code = 4

    def __init__(self, message, attempts=0, arrivals=0, indices=None):
        self.attempts = attempts
        self.arrivals = arrivals
        self.indices = indices
        super().__init__(message)


class ConvergenceError(OpticsError):
    """Iterative solver hit its iteration cap."""
    exit_code = 5

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)
