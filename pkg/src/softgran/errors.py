"""Exception types raised across the package."""


class GranulationError(Exception):
    """Base class for all package errors."""


class IngestionError(GranulationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigurationError(GranulationError):
    pass


class SizeError(GranulationError):
    pass


class EncodingError(GranulationError):
    pass


class MeasureError(GranulationError):
    pass


class ShapeError(GranulationError):
    pass


class TrainingError(GranulationError):
    pass


class ClusteringError(GranulationError):
    pass


class UnknownAttributeError(GranulationError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class InductionError(GranulationError):
    pass
