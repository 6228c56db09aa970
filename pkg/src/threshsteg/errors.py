"""Exception hierarchy shared by every module of the toolkit."""


class StegError(Exception):
    """Base class for all toolkit errors."""


class ImageFormatError(StegError):
    """Image file is unreadable, malformed or in an unsupported format."""


class DimensionError(StegError, ValueError):
    """Two grids that must share a shape do not."""


class CapacityError(StegError):
    """The selected region cannot carry the requested payload."""


class KeyFormatError(StegError):
    """Key record failed validation (magic, version, CRC or invariants)."""


class MessageError(StegError, ValueError):
    """Bit stream cannot be turned back into bytes."""


class SaturatedPairError(StegError, ValueError):
    """An embedding pair contains a 0 or 255 intensity."""



class KeyChecksumError(KeyFormatError):
    """Stored CRC-32 does not match the key bytes."""
