"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: validation/parse errors -> 2,
numeric errors -> 3, I/O errors -> 4.
"""


class DpcrmError(Exception):
    """Base class for all package errors."""


class ValidationError(DpcrmError, ValueError):
    """Invalid parameters, domains, or malformed inputs."""


class ParseError(ValidationError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericError(DpcrmError, ArithmeticError):
    """Quadrature or root-finding failure with diagnostics."""


class ResourceError(DpcrmError, RuntimeError):
    """A request would exceed the configured memory/compute budget."""

    def __init__(self, message: str, jumps_needed: int | None = None):
        self.jumps_needed = jumps_needed
        super().__init__(message)
