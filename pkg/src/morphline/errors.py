"""Exception types shared across the pipeline."""


class MorphlineError(Exception):
    """Base class for all library errors."""


class DegenerateConfiguration(MorphlineError):
    """Point set too degenerate for the requested geometric operation."""


class TopologyMismatch(MorphlineError):
    """Two meshes were expected to share triangle index triples but do not."""


class DimensionMismatch(MorphlineError):
    """Input rasters do not share dimensions and resizing is disabled."""


class InvalidThreshold(MorphlineError):
    """Score threshold outside its valid range."""


class AdapterFailure(MorphlineError):
    """External scorer command failed: bad exit code, bad output, or timeout."""

    def __init__(self, message, exit_code=None):
        super().__init__(message)
        self.exit_code = exit_code


class NoFaceFound(MorphlineError):
    """Landmark adapter reported zero faces in the image."""


class EmptyPool(MorphlineError):
    """A parent pool required by the generation loop is empty."""


class MissingLandmarks(MorphlineError):
    """No landmark sidecar found and no detector configured."""


class DecodeFailure(MorphlineError):
    """Image file could not be decoded."""


class IoFailure(MorphlineError):
    """Dataset directory could not be written."""


class DegenerateRoi(MorphlineError):
    """A region-of-interest rectangle clipped to zero area."""
