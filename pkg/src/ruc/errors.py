"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value or combination."""


class InputShapeError(ValueError):
    """Array argument has the wrong shape or dimensionality."""


class NumericError(ArithmeticError):
    """Non-finite value produced during computation."""

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer


class ParseError(ValueError):
    """Malformed serialized artifact."""

    def __init__(self, message, byte_offset=None):
        if byte_offset is not None:
            message = f"{message} (byte offset {byte_offset})"
        super().__init__(message)
        self.byte_offset = byte_offset


class EvaluationError(ValueError):
    """Metric undefined for the given inputs."""


class TrainingDiverged(RuntimeError):
    """Training loss became non-finite."""

    def __init__(self, message, epoch):
        super().__init__(f"{message} (epoch {epoch})")
        self.epoch = epoch
