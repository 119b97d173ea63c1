"""Exception hierarchy shared across the toolkit."""


class DctnetError(Exception):
    """Base class for all toolkit errors."""


# --- JPEG parsing / decoding ---

class JpegError(DctnetError):
    pass


class BadMarker(JpegError):
    pass


class TruncatedStream(JpegError):
    pass


class UnsupportedFrame(JpegError):
    """Progressive, arithmetic-coded, hierarchical or lossless frames."""


class UnsupportedSampling(JpegError):
    """Chroma layouts other than 4:2:0 and 4:4:4."""


class InvalidHuffmanCode(JpegError):
    pass


class CoefficientIndexOverflow(JpegError):
    """AC run-length stepped past coefficient index 63."""


# --- tensor engine ---

class ShapeMismatch(DctnetError):
    pass


class AxisOutOfRange(DctnetError):
    pass


class NonScalarLoss(DctnetError):
    pass


class MissingGradient(DctnetError):
    pass


# --- channel transforms ---

class KOutOfRange(DctnetError):
    pass


class GroupingError(DctnetError):
    """Attention group count does not divide the channel count."""


# --- network assembly ---

class GeometryMismatch(DctnetError):
    pass


class ChannelMismatch(DctnetError):
    pass


class BadStage(DctnetError):
    pass


# --- harness ---

class CropTooLarge(DctnetError):
    pass


class EmptyDataset(DctnetError):
    pass


class UnreadablePath(DctnetError):
    pass


class ClassMapMismatch(DctnetError):
    pass
