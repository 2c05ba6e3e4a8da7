"""Exception types shared across the package.

Every error raised on a documented failure path derives from Q16Error, so
callers (and the CLI) can distinguish data problems from genuine bugs.
"""


class Q16Error(Exception):
    """Base class for all errors raised by q16doc."""


class MalformedMeta(Q16Error):
    """A metadata document (meta.json, model file, report header) is invalid."""


class SizeMismatch(Q16Error):
    """Declared counts and actual file contents disagree."""


class DuplicateId(Q16Error):
    """An id occurs more than once where ids must be unique."""


class NormViolation(Q16Error):
    """A store declared normalized contains a row whose L2 norm is off by > 1e-3."""


class RejectedValue(Q16Error):
    """NaN/Inf values, or ids that cannot be represented in the line format."""


class IoFailure(Q16Error):
    """An underlying filesystem operation failed."""


class MalformedLine(Q16Error):
    """A line-delimited record could not be parsed; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class EmptyId(Q16Error):
    """A record carries an empty image id."""


class ZeroNorm(Q16Error):
    """Cosine similarity is undefined for a zero vector."""


class EmptyBatch(Q16Error):
    """A batch operation received no samples."""


class DegenerateData(Q16Error):
    """PCA input has no variance (or too few dimensions) to extract components."""


class EmptyClass(Q16Error):
    """Label construction left one of the classes empty."""


class TooFewSamples(Q16Error):
    """Not enough samples per class for the requested split."""


class DimMismatch(Q16Error):
    """Embedding dimensions of two paired inputs disagree."""


class MissingFile(Q16Error):
    """A required input file does not exist."""


class EmptyDataset(Q16Error):
    """An operation requires a nonempty dataset."""


class EmptyFlaggedSet(Q16Error):
    """Chi-squared weighting requires a nonempty flagged token set."""


class UnknownId(Q16Error):
    """A decision referenced an image id outside the flagged set."""


class VerdictInvalid(Q16Error):
    """A decision verdict is not one of the allowed values."""


class CorruptLog(Q16Error):
    """The decision log failed to replay; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class BindFailure(Q16Error):
    """The review service could not bind its address."""
