"""Exception hierarchy shared across the package."""


class SeqRetinexError(Exception):
    """Base class for all package errors."""


class ImageIOError(SeqRetinexError):
    """Unreadable, unwritable, or unsupported image file."""


class InvalidImageError(SeqRetinexError):
    """Raster data violates a structural invariant (shape, finiteness)."""


class InvalidSystemError(SeqRetinexError):
    """Linear system is singular or otherwise not solvable."""


class ConfigError(SeqRetinexError):
    """Bad configuration value or unknown configuration key."""


class DenoiserError(SeqRetinexError):
    """A denoiser plug-in failed.

    ``iteration`` carries the reflectance-loop iteration at which the
    failure occurred, or -1 when outside the loop.
    """

    def __init__(self, message, iteration=-1):
        super().__init__(message)
        self.iteration = iteration


class ExternalDenoiserError(DenoiserError):
    """The out-of-process denoiser violated the file-exchange contract."""


class StageError(SeqRetinexError):
    """Pipeline failure tagged with the stage that raised it."""

    def __init__(self, stage, cause):
        super().__init__(f"stage={stage}: {cause}")
        self.stage = stage
        self.cause = cause
