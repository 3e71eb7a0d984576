"""Exception hierarchy shared across the package."""


class ScenefuseError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(ScenefuseError, ValueError):
    pass


class ConfigError(ScenefuseError, ValueError):
    pass


class UsageError(ScenefuseError, ValueError):
    pass


class NonFiniteError(ScenefuseError, ArithmeticError):
    pass


class ValidationError(ScenefuseError, ValueError):
    pass


class DegenerateNeighborhoodError(ScenefuseError, ValueError):
    pass


class FormatError(ScenefuseError, ValueError):
    """Malformed binary file. ``offset`` is the byte position where parsing failed."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class TransportError(ScenefuseError):
    def __init__(self, message, status=None, attempts=0):
        super().__init__(message)
        self.status = status
        self.attempts = attempts


class ProtocolError(ScenefuseError):
    pass


class OrchestrationError(ScenefuseError):
    """Scene-description run failed; whatever finished is kept in ``partial``."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class TrainingError(ScenefuseError):
    def __init__(self, message, epoch):
        super().__init__(f"{message} (epoch {epoch})")
        self.epoch = epoch
