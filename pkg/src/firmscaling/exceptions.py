"""Exception hierarchy shared by the analysis pipeline."""


class ScalingError(Exception):
    """Base class for every error raised by firmscaling."""


class PanelFormatError(ScalingError, ValueError):
    """Input panel file is unreadable, lacks mandatory columns or is mostly malformed."""


class InsufficientDataError(ScalingError, ValueError):
    """Too few observations, bins or points to compute the requested statistic."""


class DegenerateFitError(ScalingError, ValueError):
    """The data has no variance where variance is required (flat x, flat y, zero scale)."""
