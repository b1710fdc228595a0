"""Exception hierarchy for pdqeval."""

from __future__ import annotations


class PDQError(Exception):
    """Base class for every error raised by this package."""

    code = "pdq_error"


class NonPSDCovariance(PDQError):
    code = "non_psd_covariance"


class ClassIndexOutOfRange(PDQError):
    code = "class_index_out_of_range"


class UnknownFrame(PDQError):
    code = "unknown_frame"


class NoGroundTruth(PDQError):
    code = "no_ground_truth"


class InvalidGrid(PDQError):
    code = "invalid_grid"


class InvalidDetection(PDQError):
    code = "invalid_detection"


class IoError(PDQError):
    code = "io_error"


class FormatError(PDQError):
    """Problem with an input file. ``field`` locates the offending value."""

    code = "format_error"

    def __init__(self, message: str, *, path: str | None = None, field: str | None = None):
        self.path = path
        self.field = field
        where = ":".join(p for p in (path, field) if p)
        super().__init__(f"{where}: {message}" if where else message)


class MalformedJson(FormatError):
    code = "malformed_json"


class SchemaViolation(FormatError):
    code = "schema_violation"


class RleLengthMismatch(FormatError):
    code = "rle_length_mismatch"


class UnknownImageId(FormatError):
    code = "unknown_image_id"
