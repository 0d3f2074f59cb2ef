"""Exception hierarchy for the whole engine."""

from __future__ import annotations


class ZfdtError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(ZfdtError):
    pass


class ConfigError(ZfdtError):
    pass


class ClientError(ZfdtError):
    """A remote client call failed for good (transport error, bad status)."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class RetryableError(ClientError):
    """Rate-limit style failure; the caller may retry later."""


class DegeneratePair(ZfdtError):
    """A scored answer pair came back with identical texts."""


class ParseError(ZfdtError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class SchemaError(ZfdtError):
    def __init__(self, field: str, line: int):
        super().__init__(f"line {line}: missing or invalid field {field!r}")
        self.field = field
        self.line = line


class EmptyCorpus(ZfdtError):
    pass


class ExtractionError(ZfdtError):
    def __init__(self, chunk_id: int, message: str = "unparseable extraction output"):
        super().__init__(f"chunk {chunk_id}: {message}")
        self.chunk_id = chunk_id


class EmptyGraph(ZfdtError):
    pass


class UnknownEntity(ZfdtError):
    pass


class IoError(ZfdtError):
    pass


class SummarizeError(ZfdtError):
    def __init__(self, community_id: int, message: str = "summary generation failed"):
        super().__init__(f"community {community_id}: {message}")
        self.community_id = community_id


class DimensionError(ZfdtError):
    pass


class EmptyIndex(ZfdtError):
    pass


class NoLocalAnswers(ZfdtError):
    pass


class PipelineError(ZfdtError):
    def __init__(
        self,
        stage: str,
        message: str,
        trace: list | None = None,
        cause: Exception | None = None,
    ):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage
        self.trace = trace or []
        self.cause = cause


class InvalidWeights(ZfdtError):
    pass


class UndefinedMetric(ZfdtError):
    """Metric has no defined value on this input; suites report a skip."""


class DivergenceError(ZfdtError):
    """Training loss increased for three consecutive steps."""

    def __init__(self, message: str, last_stable_model=None):
        super().__init__(message)
        self.last_stable_model = last_stable_model


class GradientCheckError(ZfdtError):
    pass


class PreconditionError(ZfdtError):
    pass


class AssumptionError(ZfdtError):
    pass


class InsufficientData(ZfdtError):
    pass


class WorkspaceError(ZfdtError):
    pass
