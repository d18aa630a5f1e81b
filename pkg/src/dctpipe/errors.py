"""Exception hierarchy. Every domain failure derives from DctPipeError so the
CLI can map it to exit code 1."""


class DctPipeError(Exception):
    pass


# jpeg
class JpegError(DctPipeError):
    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class UnsupportedMarker(JpegError):
    pass


class MalformedSegment(JpegError):
    pass


class MissingTable(JpegError):
    pass


class CorruptEntropyStream(JpegError):
    pass


class TruncatedStream(JpegError):
    pass


class RestartMarkerMismatch(JpegError):
    pass


class AlreadyDequantized(DctPipeError):
    pass


class NotDequantized(DctPipeError):
    pass


# tensors
class DimensionMismatch(DctPipeError):
    pass


class IndexOutOfRange(DctPipeError):
    pass


class FormatVersionMismatch(DctPipeError):
    pass


class ChecksumMismatch(DctPipeError):
    pass


class TruncatedFile(DctPipeError):
    pass


# reduction operators
class ShapeMismatch(DctPipeError):
    pass


class GroupSizeError(ShapeMismatch):
    pass


# cost model
class UnknownVariant(DctPipeError):
    pass


class UnelaboratedSpec(DctPipeError):
    pass


class MissingBaseline(DctPipeError):
    pass


# bench
class EmptyCorpus(DctPipeError):
    pass


class UnwritableOutput(DctPipeError):
    pass


class CorpusTooSmall(DctPipeError):
    pass


class ClockResolutionTooCoarse(DctPipeError):
    pass


class BadConfig(DctPipeError):
    pass
