"""Exception types raised across the package."""


class LPError(Exception):
    """Base class for all package errors."""


class DegenerateInput(LPError, ValueError):
    """Input is well-formed but numerically degenerate (duplicates, NaN, too few points)."""


class ShapeError(LPError, ValueError):
    """Array dimensions do not agree."""


class InvariantViolation(LPError, ValueError):
    """An object does not satisfy a required invariant (e.g. row-stochasticity)."""


class DomainError(LPError, ValueError):
    """Argument outside the domain where the operation is defined."""


class ParseError(LPError, ValueError):
    """Malformed input file.

    Parameters
    ----------
    message : str
        Description of the problem.
    path : str, optional
        File being parsed.
    line : int, optional
        1-based line number of the offending record.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class UsageError(LPError):
    """Invalid command-line usage."""
