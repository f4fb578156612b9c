"""Co-aperture millimetre-wave / infrared reflector antenna modelling."""

__version__ = "0.1.0"
