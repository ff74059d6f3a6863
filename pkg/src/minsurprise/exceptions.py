class MinSurpriseError(Exception):
    """Base class for all package errors."""


class CapacityError(MinSurpriseError, ValueError):
    """More agents requested than the torus has cells."""


class ParameterError(MinSurpriseError, ValueError):
    """A numeric parameter is outside its admissible range."""


class ConfigError(MinSurpriseError, ValueError):
    """Invalid or inconsistent configuration.

    ``errors`` lists every violated key so callers can report them all at once.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class SnapshotFormatError(MinSurpriseError, ValueError):
    """Malformed text snapshot."""
