"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A static configuration is inconsistent (shape mismatch, bad extents)."""


class UsageError(RuntimeError):
    """An operation was invoked in a way its contract forbids."""


class DataFormatError(ValueError):
    """A file on disk does not match the expected format."""


class EmptyMaskError(ValueError):
    """A loss or metric was asked to reduce over zero valid pixels."""


class UnsupportedVariantError(ValueError):
    """The requested operation is not defined for this model variant."""


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss."""
