"""Exception hierarchy shared by all modules."""


class ReflectorError(Exception):
    """Base class for every error raised by this package."""


class DegenerateGeometryError(ReflectorError):
    pass


class BlockageDominatesError(ReflectorError):
    pass


class DomainError(ReflectorError, ValueError):
    """An argument lies outside the parameter domain of a model or surface."""


class DegenerateProjectionError(ReflectorError):
    pass


class SamplingError(ReflectorError):
    """Aperture grid or far-field sampling too coarse for the requested result."""


class NoPowerError(ReflectorError):
    pass


class RangeError(ReflectorError):
    """A feature (crossing, peak) lies outside the sampled range of a cut."""


class ConfigurationError(ReflectorError):
    pass


class NoPathError(ReflectorError):
    pass


class ConfigError(ReflectorError):
    """Invalid run configuration; carries an optional line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
