"""Exception and warning types shared across the toolkit."""


class RoomfillError(Exception):
    """Base class for all toolkit errors."""


class FormatError(RoomfillError):
    """A file is structurally valid but uses an unsupported encoding."""


class ContractError(RoomfillError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateMeasurementError(RoomfillError):
    """A measured impulse response carries no usable energy."""


class UnfillableBandError(RoomfillError):
    """Bands need energy the supporting path cannot deliver.

    ``bands`` holds the offending band indices, ``center_freqs`` the
    matching centre frequencies in Hz.
    """

    def __init__(self, bands, center_freqs):
        self.bands = tuple(int(b) for b in bands)
        self.center_freqs = tuple(float(f) for f in center_freqs)
        freqs = ", ".join("%.1f Hz" % f for f in self.center_freqs)
        super().__init__(
            "support path has no energy in deficit band(s) %s (%s)"
            % (list(self.bands), freqs)
        )


class NonConvergenceError(RoomfillError):
    """Iterative gain solve stopped at the iteration cap."""


class ConfigError(RoomfillError):
    """A run configuration file is malformed or contains unknown keys."""


class ClippingWarning(UserWarning):
    """Samples were clipped to full scale while writing an integer WAV."""
