class TranslationToolkitError(Exception):
    """Base class for all exceptions raised by the toolkit."""

    reason = "Error"


class UsageError(TranslationToolkitError):
    """Exception raised for invalid command-line usage or job configuration."""

    reason = "Usage"


# Dataset formats


class DatasetFormatError(TranslationToolkitError):
    """Base class for dataset parsing and serialization errors."""

    reason = "DatasetFormat"


class MalformedSchemaError(DatasetFormatError):
    """Exception raised when a file does not follow the expected layout."""

    reason = "MalformedSchema"


class OffsetMismatchError(DatasetFormatError):
    """Exception raised when an answer offset does not point at the answer text."""

    reason = "OffsetMismatch"


class UnknownLabelError(DatasetFormatError):
    """Exception raised when an NLI label is outside the declared scheme."""

    reason = "UnknownLabel"


class RaggedRecordError(DatasetFormatError):
    """Exception raised when a record has the wrong number of fields."""

    reason = "RaggedRecord"


class DuplicateIdError(DatasetFormatError):
    """Exception raised when an id (or run entry) appears twice."""

    reason = "DuplicateId"


class UnmappedLabelError(DatasetFormatError):
    """Exception raised when a label remapping does not cover a present label."""

    reason = "UnmappedLabel"


# Span marking


class SpanMarkError(TranslationToolkitError):
    """Base class for delimiter marking and recovery errors."""

    reason = "SpanMark"


class InvalidDelimitersError(SpanMarkError, ValueError):
    """Exception raised for an unusable delimiter pair."""

    reason = "InvalidDelimiters"


class InvalidSpanError(SpanMarkError):
    """Exception raised when the answer span does not match the context."""

    reason = "InvalidSpan"


class DelimiterCollisionError(SpanMarkError):
    """Exception raised when the context already contains a delimiter token."""

    reason = "DelimiterCollision"


class MissingStartDelimiterError(SpanMarkError):
    """Exception raised when the start delimiter was lost in translation."""

    reason = "MissingStartDelimiter"


class MissingEndDelimiterError(SpanMarkError):
    """Exception raised when the end delimiter was lost in translation."""

    reason = "MissingEndDelimiter"


class OutOfOrderDelimitersError(SpanMarkError):
    """Exception raised when the end delimiter precedes the start delimiter."""

    reason = "OutOfOrderDelimiters"


class DuplicateDelimitersError(SpanMarkError):
    """Exception raised when a delimiter occurs more than once."""

    reason = "DuplicateDelimiters"


class EmptySpanError(SpanMarkError):
    """Exception raised when nothing but whitespace is left between the delimiters."""

    reason = "EmptySpan"


# Segmentation


class SegmentationError(TranslationToolkitError):
    """Base class for segmentation errors."""

    reason = "Segmentation"


class SpanOutOfBoundsError(SegmentationError):
    """Exception raised when a span lies outside the segmented text."""

    reason = "SpanOutOfBounds"


# Translation backends


class BackendError(TranslationToolkitError):
    """Base class for translation backend errors."""

    reason = "Backend"


class InvalidBatchError(BackendError, ValueError):
    """Exception raised for an empty or oversized batch."""

    reason = "InvalidBatch"


class TransportError(BackendError):
    """Exception raised when a request fails on the wire. Retryable."""

    reason = "TransportError"


class RateLimitedError(TransportError):
    """Exception raised when the backend asks the client to slow down. Retryable."""

    reason = "RateLimited"

    def __init__(self, message: str, retry_after: float = 0.0):
        super().__init__(message)
        self.retry_after = retry_after


class RequestRejectedError(BackendError):
    """Exception raised when the backend refuses a request with a non-retryable status."""

    reason = "RequestRejected"


class LengthMismatchError(BackendError):
    """Exception raised when the backend returns a different number of translations."""

    reason = "LengthMismatch"

    def __init__(self, expected: int, received: int, attempts: int = 1):
        super().__init__(f"expected {expected} translations, received {received}")
        self.expected = expected
        self.received = received
        self.attempts = attempts


# Pipelines


class PipelineError(TranslationToolkitError):
    """Base class for pipeline errors."""

    reason = "Pipeline"


class UnknownQueryError(PipelineError):
    """Exception raised when a query id is not in the run or the query set."""

    reason = "UnknownQuery"


class MissingPassageIdError(PipelineError):
    """Exception raised when a run references a passage absent from the collection."""

    reason = "MissingPassageId"


class StaleCheckpointError(PipelineError):
    """Exception raised when a checkpoint belongs to a different job definition."""

    reason = "StaleCheckpoint"


class JobInterruptedError(PipelineError):
    """Exception raised when a job stops on request after a committed batch."""

    reason = "JobInterrupted"

    def __init__(self, batches_done: int, total_batches: int = 0, billed_characters: int = 0):
        super().__init__(f"job interrupted after {batches_done} batches")
        self.batches_done = batches_done
        self.total_batches = total_batches
        self.billed_characters = billed_characters


# Cost model


class CostModelError(TranslationToolkitError):
    """Base class for cost model errors."""

    reason = "CostModel"


class InvalidPricingError(CostModelError, ValueError):
    """Exception raised for empty or non-positive price lists."""

    reason = "InvalidPricing"


class NoMeasurementsError(CostModelError):
    """Exception raised when latency is requested from a meter without batches."""

    reason = "NoMeasurements"


class MissingStatisticError(CostModelError):
    """Exception raised when a scenario needs a statistic that was not supplied."""

    reason = "MissingStatistic"


# Metrics


class MetricError(TranslationToolkitError):
    """Base class for scoring errors."""

    reason = "Metric"


class UnknownExampleIdError(MetricError):
    """Exception raised when a prediction refers to an id absent from the gold data."""

    reason = "UnknownExampleId"
