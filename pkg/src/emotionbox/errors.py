"""Exception types shared across the package."""


class EmotionBoxError(Exception):
    """Base class for every domain error raised by this package."""


class MalformedFileError(EmotionBoxError):
    """Input bytes are not a structurally valid Standard MIDI File."""


class UnsupportedFormatError(EmotionBoxError):
    """The file is structurally valid SMF but uses a feature we reject."""


class EmptyCorpusError(EmotionBoxError):
    """A corpus directory yielded no usable training windows."""


class CheckpointError(EmotionBoxError):
    """A checkpoint file could not be read."""


class VersionMismatchError(CheckpointError):
    """Checkpoint was written by an incompatible container version."""


class ChecksumMismatchError(CheckpointError):
    """Checkpoint payload does not match its stored checksum."""
