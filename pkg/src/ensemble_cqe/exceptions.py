"""Exception hierarchy shared by every module of the package."""


class CQEError(Exception):
    """Base class for all package errors."""


class DomainError(CQEError, ValueError):
    """Arguments live on incompatible spaces or outside their allowed range."""


class PreconditionError(CQEError, ValueError):
    """An input violates a documented precondition (orthonormality, hermiticity...)."""


class DegeneracyError(CQEError, ValueError):
    """A set of vectors turned out to be linearly dependent."""


class NumericalError(CQEError, ArithmeticError):
    """An iterative numerical routine failed to converge."""


class CapacityError(CQEError, ValueError):
    """Requested problem exceeds the dense-simulation size limits."""


class UnsupportedElementError(CQEError, ValueError):
    """The built-in integral engine only handles hydrogen."""


class GeometryError(CQEError, ValueError):
    """Malformed molecular geometry (for instance coincident nuclei)."""


class SCFError(CQEError, RuntimeError):
    """Self-consistent field iterations did not converge.

    Attributes:
        last_energy: total energy of the final iterate (Hartree).
    """

    def __init__(self, message, last_energy=None):
        super().__init__(message)
        self.last_energy = last_energy


class FCIDumpParseError(CQEError, ValueError):
    """Malformed FCIDUMP text; ``lineno`` is 1-based."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class ConfigError(CQEError, ValueError):
    """Invalid experiment configuration."""
