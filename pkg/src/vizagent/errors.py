"""Exception hierarchy shared across the package.

Every declared failure mode maps to one class here so callers (CLI, HTTP
service, tests) can dispatch on type rather than message text.
"""

from __future__ import annotations


class VizAgentError(Exception):
    """Base class for all package errors."""


# -- study ingestion ---------------------------------------------------------

class SchemaError(VizAgentError):
    """A study document is missing a required field or has the wrong shape."""


class IntegrityError(VizAgentError):
    """A study document violates a structural invariant (duplicate column,
    non-increasing design_id, unknown constraint target, ...)."""


class ColumnTypeError(VizAgentError):
    """A value does not match its column's declared kind."""


class CsvParseError(VizAgentError):
    """A CSV cell could not be parsed; carries row and column context."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class UnknownColumnError(VizAgentError):
    """A referenced column is not declared by the study."""


class UnknownDesignError(VizAgentError):
    """A referenced design_id does not exist in the study."""


# -- analysis rules ----------------------------------------------------------

class NonFiniteValueError(VizAgentError):
    """A series contains NaN or infinity where finite values are required."""


class NoEligibleDesignError(VizAgentError):
    """No design satisfies the eligibility filter (e.g. all infeasible)."""


# -- knowledge store ---------------------------------------------------------

class EmptyCorpusError(VizAgentError):
    """An index cannot be built over an empty corpus."""


# -- prompt building ---------------------------------------------------------

class UnsupportedKindError(VizAgentError):
    """No guideline set exists for the requested plot kind."""


# -- llm gateway -------------------------------------------------------------

class GatewayError(VizAgentError):
    """Base class for completion-backend failures."""


class GatewayTimeoutError(GatewayError):
    """The backend did not answer within the configured timeout."""


class HttpStatusError(GatewayError):
    """The backend answered with a non-success HTTP status."""

    def __init__(self, status: int, body: str = ""):
        super().__init__(f"backend returned HTTP {status}")
        self.status = status
        self.body = body


class FixtureMissError(GatewayError):
    """Replay mode found no recorded response for a prompt fingerprint."""

    def __init__(self, fingerprint: str):
        super().__init__(f"no recorded response for fingerprint {fingerprint}")
        self.fingerprint = fingerprint


class MalformedResponseError(GatewayError):
    """The backend answered, but not in the expected wire format."""


# -- plot specs --------------------------------------------------------------

class NoSpecBlockError(VizAgentError):
    """Completion text contains no fenced plot-spec block."""


class SpecParseError(VizAgentError):
    """A fenced plot-spec block is not valid JSON; carries the location."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column


class SpecInvariantError(VizAgentError):
    """A parsed plot spec violates a structural invariant of its kind."""


class ReportMismatchError(VizAgentError):
    """A plot spec references a column the analysis report does not cover."""


class EmptySeriesError(VizAgentError):
    """A series resolved to zero data points at render time."""


# -- evaluation harness ------------------------------------------------------

class EmptyInputError(VizAgentError):
    """An aggregate was requested over an empty score list."""


class ZeroBaselineError(VizAgentError):
    """Improvement over a non-positive baseline mean is undefined."""


class DuplicateScoreError(VizAgentError):
    """Two scores share the same (scenario, assessor, system) key."""


class ScoreParseError(VizAgentError):
    """An assessor response does not contain a parseable score block."""


# -- service -----------------------------------------------------------------

class UnknownStudyError(VizAgentError):
    """The requested study id is not registered."""
