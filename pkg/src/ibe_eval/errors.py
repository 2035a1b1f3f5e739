"""Exception hierarchy shared across the pipeline.

Exit-code mapping for the CLI lives in :mod:`ibe_eval.cli`; every error a
stage can raise derives from one of the three buckets below so the mapping
stays mechanical: usage (1), data (2), upstream service (3).
"""


class IbeEvalError(Exception):
    """Base class for all package errors."""


class UsageError(IbeEvalError):
    """Bad invocation: unknown flags, malformed config, invalid stage name."""


class DataError(IbeEvalError):
    """Invalid or inconsistent data encountered while processing."""


class UpstreamError(IbeEvalError):
    """A remote dependency (LLM endpoint, scorer sidecar) failed."""


class ValidationError(DataError):
    """A domain-type invariant was violated."""


class ParseError(DataError):
    """Raised when structured content cannot be extracted from raw text."""


class NoStepsFound(ParseError):
    """An explanation response contains no 'Step N' headers."""


class MalformedStep(ParseError):
    """No step in the response carries the required If/Then markers."""


class UnparseableVerdict(ParseError):
    """A judge response names neither candidate."""

    def __init__(self, message: str, raw_response: str = ""):
        super().__init__(message)
        self.raw_response = raw_response


class LogicSyntaxError(ParseError):
    """Logic-program text that does not follow the clause grammar."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class MissingQuery(ParseError):
    """Logic-program text with no '?-' clause."""


class NoFacts(ParseError):
    """Logic-program text with no ground fact."""


class ReplayMiss(DataError):
    """A fingerprint was not found in a replay-mode transcript store."""

    def __init__(self, message: str, fingerprint: str = "", candidate_index: int | None = None):
        super().__init__(message)
        self.fingerprint = fingerprint
        self.candidate_index = candidate_index


class ScorerError(DataError):
    """A scorer failed; carries the feature/step context it was computing."""


class CapabilityError(UpstreamError):
    """The scorer sidecar has the requested operation disabled."""


class MissingUpstream(DataError):
    """A stage was invoked before its input artifact exists."""


class StaleArtifact(DataError):
    """A cached stage artifact no longer matches its recorded inputs."""


class ConfigError(UsageError):
    """Pipeline configuration is missing or invalid."""
