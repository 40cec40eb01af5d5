"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Malformed argument: wrong shape, out-of-range id, bad ratio."""


class DomainError(ValueError):
    """Input is well-formed but the quantity is undefined for it."""


class OracleFailureError(ArithmeticError):
    """A finite-difference probe produced a non-finite value."""


class RejectedActionError(ValueError):
    """A rewiring action is not legal on the graph it was applied to."""


class ProtocolError(RuntimeError):
    """An episode was stepped after it finished."""


class EmptyActionSpaceError(RuntimeError):
    """No admissible rewiring exists in the current state."""


class ParseError(ValueError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class IntegrityError(ValueError):
    """Dataset files are individually parseable but mutually inconsistent."""


class ConfigurationError(ValueError):
    """Experiment configuration is invalid or references missing artifacts."""
