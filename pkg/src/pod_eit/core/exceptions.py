class ConfigError(Exception):
    """Raised when configuration file is invalid or missing."""


class ArtifactError(Exception):
    """Raised when an artifact file is missing, malformed, or inconsistent."""


class ProtocolMismatchError(ArtifactError):
    """Raised when artifacts built for different measurement protocols are mixed."""


class InvalidParameterError(ValueError):
    """Raised when an operation's preconditions are violated."""


class NumericalError(Exception):
    """Raised when a linear system or search has no usable numerical answer."""


class ConditioningError(NumericalError):
    """Raised when a matrix that must be inverted is too ill-conditioned."""

    def __init__(self, message: str, condition: float, threshold: float) -> None:
        super().__init__(message)
        self.condition = condition
        self.threshold = threshold
