"""Exception hierarchy for the schemex engine.

Two broad families matter to callers: ValidationError covers every
machine-side check that model output or user input can fail (the CLI maps
these to exit code 2), TransportError covers endpoint/network trouble
(exit code 3). Everything derives from SchemexError.
"""

from __future__ import annotations


class SchemexError(Exception):
    """Base class for all engine errors."""


class ValidationError(SchemexError):
    """A machine-side validation check failed."""


class TransportError(SchemexError):
    """The chat-completion endpoint could not be reached or answered badly."""


# --- core model -------------------------------------------------------------

class EmptyGoalError(ValidationError):
    pass


class DuplicateIdError(ValidationError):
    pass


class NoExamplesError(ValidationError):
    pass


class RatioOutOfRangeError(ValidationError):
    pass


class ClusterMismatchError(ValidationError):
    pass


class InvariantViolation(ValidationError):
    """A domain value was constructed in a state its invariants forbid."""


# --- prompt rendering & gateway ---------------------------------------------

class MissingBindingError(ValidationError):
    def __init__(self, name: str):
        super().__init__(f"missing binding: {name}")
        self.name = name


class UnknownPlaceholderError(ValidationError):
    def __init__(self, name: str):
        super().__init__(f"unknown placeholder: {name}")
        self.name = name


class ParseFailedError(ValidationError):
    """Model output could not be parsed, even after the repair ladder.

    Carries the raw response text so callers can log or surface it.
    """

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class BudgetExceededError(TransportError):
    pass


class TranscriptMissError(SchemexError):
    def __init__(self, fingerprint: str):
        super().__init__(f"no transcript entry for fingerprint {fingerprint}")
        self.fingerprint = fingerprint


class TranscriptCorruptError(SchemexError):
    pass


# --- ingest -------------------------------------------------------------------

class DecodeError(ValidationError):
    pass


class DescriptionFailedError(SchemexError):
    def __init__(self, entry: str, reason: str):
        super().__init__(f"description failed for {entry}: {reason}")
        self.entry = entry


class UnsupportedCodecError(ValidationError):
    pass


class EmptyDescriptionError(ValidationError):
    pass


# --- evidence ------------------------------------------------------------------

class EmptySnippetError(ValidationError):
    pass


class UnknownRowIdError(ValidationError):
    pass


# --- clustering ------------------------------------------------------------------

class PartitionViolationError(ValidationError):
    """Clustering failed the partition check even after a corrective re-ask."""

    def __init__(self, violations):
        super().__init__(f"clustering violates the partition rules: {violations}")
        self.violations = list(violations)


class IncompleteMatrixError(ValidationError):
    """Evidence matrix still has missing cells after a corrective re-ask."""

    def __init__(self, missing):
        super().__init__(f"matrix incomplete, missing cells: {sorted(missing)}")
        self.missing = sorted(missing)


class UnknownClusterError(ValidationError):
    pass


class UnknownExampleError(ValidationError):
    pass


class NoOpEditError(ValidationError):
    """The edit would not change anything (e.g. move to same cluster)."""


# --- abstraction -------------------------------------------------------------------

class ParallelArrayMismatchError(ValidationError):
    def __init__(self, scope: str, n_detailed: int, n_concise: int):
        super().__init__(
            f"{scope}: {n_detailed} detailed attributes vs {n_concise} concise labels"
        )
        self.scope = scope
        self.n_detailed = n_detailed
        self.n_concise = n_concise


class DanglingColumnError(ValidationError):
    pass


class UnknownTargetError(ValidationError):
    pass


class DuplicateConciseError(ValidationError):
    pass


# --- refinement --------------------------------------------------------------------

class EmptyGenerationError(ValidationError):
    pass


class MissingDimensionValueError(ValidationError):
    def __init__(self, dimension_id: str):
        super().__init__(f"no value generated for dimension {dimension_id}")
        self.dimension_id = dimension_id


class NoEligibleInputsError(ValidationError):
    pass


class UnknownTagError(ValidationError):
    def __init__(self, line: str):
        super().__init__(f"improvement line has no recognized tag: {line!r}")
        self.line = line


class UnknownTargetDimensionError(ValidationError):
    def __init__(self, name: str):
        super().__init__(f"analysis names a dimension not in the schema: {name!r}")
        self.name = name


class AlreadyReviewedError(ValidationError):
    pass


class NothingToApplyError(ValidationError):
    pass


class StructureMismatchError(ValidationError):
    pass


# --- service -----------------------------------------------------------------------

class IngestFailedError(ValidationError):
    pass


class DependencyNotMetError(ValidationError):
    pass


class AlreadyRunningError(ValidationError):
    pass


class MissingArtifactError(ValidationError):
    def __init__(self, path):
        super().__init__(f"required artifact not found: {path}")
        self.path = path


class EventLogCorruptError(ValidationError):
    pass
