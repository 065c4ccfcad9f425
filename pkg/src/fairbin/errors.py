"""Exception types shared across the package."""


class FairbinError(Exception):
    """Base class for all package errors."""


class ConfigError(FairbinError):
    """Invalid configuration: unknown key, bad type, or out-of-range value."""


class DataError(FairbinError):
    """Invalid input data: missing columns, unparseable cells, bad labels."""


class DegenerateSplitError(DataError):
    """A train/test split left one side with too few rows or a single class."""


class FairnessUndefinedError(DataError):
    """A fairness group total is zero, so the fairness IV is undefined."""


class InfeasiblePartitionError(FairbinError):
    """A superbin in the requested partition has zero events or zero non-events."""


class ModelFormatError(DataError):
    """A model bundle file is malformed or has an unsupported schema version."""


class VerificationFailure(FairbinError):
    """The linear-IV verification found a deviation above tolerance."""
