"""Exception hierarchy shared by all ctcr modules."""


class CTCRError(Exception):
    """Base class for every error raised by ctcr."""


class InvalidInputError(CTCRError, ValueError):
    """Input data is malformed (bad posterior matrix, unknown symbol, ...)."""


class InvalidParameterError(CTCRError, ValueError):
    """A numeric or enumerated parameter is outside its legal range."""


class ConfigurationError(CTCRError):
    """Components were configured inconsistently with each other."""


class InstanceTooLargeError(CTCRError):
    """Refusal to run an exhaustive oracle on an instance that is too big."""


class ParseError(CTCRError):
    """A file could not be parsed; ``lineno`` is 1-based when known."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class OrderingViolation(CTCRError):
    """Oracle selection scored worse than combined-score selection."""
