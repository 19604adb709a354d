# paratomo/errors.py


class ParaTomoError(Exception):
    """Base class for every error raised by the library."""


class DomainError(ParaTomoError):
    """A basis label or parameter value lies outside the basis domain."""


class ArgumentError(ParaTomoError):
    """An argument violates an operation's precondition."""


class CapabilityError(ParaTomoError):
    """The requested combination is not supported by the implementation."""


class GuardExceededError(ParaTomoError):
    """A size guard (dense qubit cap, combinatorial scan size) was exceeded."""


class SingularMatrixError(ParaTomoError):
    """A matrix that must be injective is (numerically) rank deficient."""

    def __init__(self, message, smallest_singular_value):
        """
        :param message: Human readable description.
        :param smallest_singular_value: The offending singular value.
        """
        super().__init__(message)
        self.smallest_singular_value = float(smallest_singular_value)


class RipNotCertifiedError(ParaTomoError):
    """Strict mode refused to run because the RIP precondition did not hold."""

    def __init__(self, message, delta):
        super().__init__(message)
        self.delta = None if delta is None else float(delta)


class ConfigError(ParaTomoError):
    """The experiment configuration is malformed."""

    def __init__(self, message, field=None, line=None):
        """
        :param message: Human readable description.
        :param field: Dotted path of the offending field, if known.
        :param line: 1-based line in the config file, if known.
        """
        location = []
        if field:
            location.append(f"field '{field}'")
        if line is not None:
            location.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(location)})" if location else message)
        self.field = field
        self.line = line
