"""Core value types for the schema induction engine.

Everything downstream (clustering, abstraction, refinement, the session
store) speaks in these types. They are frozen dataclasses with dict/JSON
round-trips; identifiers are engine-assigned and sequential so repeated
runs over the same inputs produce byte-identical artifacts. No type here
carries timestamps or random ids.

Types that hold raw model output (Cluster member lists, SegmentMap) accept
invalid states on construction; the evidence validators report violations.
Types the engine assembles itself (EvidenceMatrix, Schema) enforce their
invariants in __post_init__.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .errors import (
    ClusterMismatchError,
    DanglingColumnError,
    DuplicateConciseError,
    DuplicateIdError,
    EmptyGoalError,
    InvariantViolation,
    NoExamplesError,
    RatioOutOfRangeError,
    StructureMismatchError,
)

logger = logging.getLogger(__name__)


def dumps_canonical(obj) -> str:
    """Serialize to the canonical JSON text used for all on-disk artifacts."""
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=False) + "\n"


# --- examples ----------------------------------------------------------------


class Modality(Enum):
    TEXT = "Text"
    IMAGE = "Image"
    VIDEO = "Video"
    AUDIO = "Audio"


@dataclass(frozen=True)
class Example:
    """One input example: its unified text plus where it came from.

    content always holds text; for non-text media it is the engine-written
    description and derived is true. input_context is the optional paired
    input that produced this example (e.g. a paper title).
    """

    id: str
    content: str
    input_context: str = ""
    modality: Modality = Modality.TEXT
    source_uri: Optional[str] = None
    derived: bool = False

    def __post_init__(self):
        if not self.content:
            raise InvariantViolation(f"example {self.id} has empty content")
        if self.derived and self.modality is Modality.TEXT:
            raise InvariantViolation(
                f"example {self.id} is derived but claims Text modality"
            )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "content": self.content,
            "input_context": self.input_context,
            "modality": self.modality.value,
            "source_uri": self.source_uri,
            "derived": self.derived,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Example":
        return cls(
            id=d["id"],
            content=d["content"],
            input_context=d.get("input_context", ""),
            modality=Modality(d.get("modality", "Text")),
            source_uri=d.get("source_uri"),
            derived=d.get("derived", False),
        )


@dataclass(frozen=True)
class ExampleSet:
    """The full corpus for one run: goal, content type, examples, holdout split."""

    goal: str
    content_type: str
    input_context: str
    examples: tuple[Example, ...]
    holdout_ids: frozenset[str] = frozenset()

    def __post_init__(self):
        if not self.goal.strip():
            raise EmptyGoalError("goal must be non-empty")
        ids = [e.id for e in self.examples]
        if len(ids) != len(set(ids)):
            seen, dups = set(), []
            for i in ids:
                if i in seen:
                    dups.append(i)
                seen.add(i)
            raise DuplicateIdError(f"duplicate example ids: {dups}")
        unknown = self.holdout_ids - set(ids)
        if unknown:
            raise InvariantViolation(f"holdout ids not in example set: {sorted(unknown)}")

    def by_id(self, example_id: str) -> Example:
        for e in self.examples:
            if e.id == example_id:
                return e
        raise KeyError(example_id)

    def working_examples(self) -> tuple[Example, ...]:
        """Examples available to clustering and abstraction (non-holdout)."""
        return tuple(e for e in self.examples if e.id not in self.holdout_ids)

    def holdout_examples(self) -> tuple[Example, ...]:
        return tuple(e for e in self.examples if e.id in self.holdout_ids)

    def to_dict(self) -> dict:
        return {
            "goal": self.goal,
            "content_type": self.content_type,
            "input_context": self.input_context,
            "examples": [e.to_dict() for e in self.examples],
            "holdout_ids": sorted(self.holdout_ids, key=_id_sort_key),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExampleSet":
        return cls(
            goal=d["goal"],
            content_type=d["content_type"],
            input_context=d.get("input_context", ""),
            examples=tuple(Example.from_dict(e) for e in d["examples"]),
            holdout_ids=frozenset(d.get("holdout_ids", [])),
        )


def _id_sort_key(engine_id: str):
    """Sort engine ids numerically when they follow the letter+number shape."""
    prefix = engine_id.rstrip("0123456789")
    suffix = engine_id[len(prefix):]
    if suffix.isdigit():
        return (0, prefix, int(suffix))
    return (1, engine_id, 0)


def text_examples(contents: Sequence[tuple[str, str]]) -> tuple[Example, ...]:
    """Number plain-text (content, input_context) pairs as e1, e2, ...

    The same inputs always yield the same ids.
    """
    return tuple(
        Example(id=f"e{i + 1}", content=content, input_context=context)
        for i, (content, context) in enumerate(contents)
    )


def new_example_set(
    goal: str,
    examples: Sequence[Example],
    content_type: str = "",
    input_context: str = "",
) -> ExampleSet:
    """Build an ExampleSet, validating goal, example presence and id uniqueness."""
    if not goal.strip():
        raise EmptyGoalError("goal must be non-empty")
    if not examples:
        raise NoExamplesError("at least one example is required")
    return ExampleSet(
        goal=goal,
        content_type=content_type or goal,
        input_context=input_context,
        examples=tuple(examples),
    )


MIN_EXAMPLES_FOR_HOLDOUT = 5


def split_validation(example_set: ExampleSet, ratio: float, seed: int) -> ExampleSet:
    """Return a copy with a seeded holdout split.

    floor(ratio * n) examples (at least 1) are held out. Sets smaller than
    MIN_EXAMPLES_FOR_HOLDOUT are returned with no holdout and a warning:
    small sets need every example for induction. The same
    (example_set, ratio, seed) always selects the same ids.
    """
    if not 0.0 < ratio < 0.5:
        raise RatioOutOfRangeError(f"ratio must be in (0, 0.5), got {ratio}")
    n = len(example_set.examples)
    holdout: frozenset[str] = frozenset()
    if n < MIN_EXAMPLES_FOR_HOLDOUT:
        logger.warning(
            "example set has %d examples (< %d); skipping the validation split",
            n,
            MIN_EXAMPLES_FOR_HOLDOUT,
        )
    else:
        k = max(1, int(ratio * n))
        ids = [e.id for e in example_set.examples]
        rng = random.Random(seed)
        rng.shuffle(ids)
        holdout = frozenset(ids[:k])
    return ExampleSet(
        goal=example_set.goal,
        content_type=example_set.content_type,
        input_context=example_set.input_context,
        examples=example_set.examples,
        holdout_ids=holdout,
    )


# --- evidence ----------------------------------------------------------------


class Judgment(Enum):
    YES = "Yes"
    PARTIAL = "Partial"
    NO = "No"


class Verification(Enum):
    UNCHECKED = "unchecked"
    VERIFIED = "verified"
    UNVERIFIABLE = "unverifiable"


@dataclass(frozen=True)
class EvidenceCell:
    """One (example, column) claim: does the feature/dimension/attribute apply?

    judgment is None only for placeholder cells the engine creates for
    columns added after the matrix was judged (it never fabricates a
    judgment). A No cell carries no snippet; a verified cell carries the
    span of its snippet in the example's content.
    """

    judgment: Optional[Judgment]
    snippet: Optional[str] = None
    explanation: str = ""
    verification: Verification = Verification.UNCHECKED
    verified_span: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if self.judgment is Judgment.NO and self.snippet is not None:
            raise InvariantViolation("a No judgment must not carry a snippet")
        if self.judgment is None and self.verification is not Verification.UNCHECKED:
            raise InvariantViolation("a placeholder cell cannot be verified")
        if self.verification is Verification.VERIFIED:
            if self.snippet is None or self.verified_span is None:
                raise InvariantViolation("a verified cell needs a snippet and a span")

    def to_dict(self) -> dict:
        d: dict = {
            "judgment": self.judgment.value if self.judgment is not None else None,
        }
        if self.snippet is not None:
            d["snippet"] = self.snippet
        if self.explanation:
            d["explanation"] = self.explanation
        d["verification"] = self.verification.value
        if self.verified_span is not None:
            d["verified_span"] = [self.verified_span[0], self.verified_span[1]]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EvidenceCell":
        raw = d.get("judgment")
        return cls(
            judgment=Judgment(raw) if raw is not None else None,
            snippet=d.get("snippet"),
            explanation=d.get("explanation", ""),
            verification=Verification(d.get("verification", "unchecked")),
            verified_span=(
                tuple(d["verified_span"]) if d.get("verified_span") is not None else None
            ),
        )


@dataclass(frozen=True)
class EvidenceMatrix:
    """A complete rows x columns grid of evidence cells.

    Rows are example ids, columns are feature/dimension/attribute ids.
    column_labels carry the human-readable text for each column. Every
    (row, column) pair must be present; parsers fill gaps or fail before
    constructing one.
    """

    row_ids: tuple[str, ...]
    column_ids: tuple[str, ...]
    column_labels: tuple[str, ...]
    cells: dict[tuple[str, str], EvidenceCell]

    def __post_init__(self):
        if len(self.column_ids) != len(self.column_labels):
            raise InvariantViolation("column ids and labels must be parallel")
        if len(set(self.row_ids)) != len(self.row_ids):
            raise DuplicateIdError("duplicate row ids in matrix")
        if len(set(self.column_ids)) != len(self.column_ids):
            raise DuplicateIdError("duplicate column ids in matrix")
        expected = {(r, c) for r in self.row_ids for c in self.column_ids}
        actual = set(self.cells.keys())
        if expected != actual:
            missing = sorted(expected - actual)
            extra = sorted(actual - expected)
            raise InvariantViolation(
                f"matrix not complete: missing={missing[:5]} extra={extra[:5]}"
            )

    def cell(self, row_id: str, column_id: str) -> EvidenceCell:
        return self.cells[(row_id, column_id)]

    def column_cells(self, column_id: str) -> list[EvidenceCell]:
        return [self.cells[(r, column_id)] for r in self.row_ids]

    def with_cells(self, updates: dict[tuple[str, str], EvidenceCell]) -> "EvidenceMatrix":
        merged = dict(self.cells)
        merged.update(updates)
        return EvidenceMatrix(
            row_ids=self.row_ids,
            column_ids=self.column_ids,
            column_labels=self.column_labels,
            cells=merged,
        )

    def to_dict(self) -> dict:
        return {
            "row_ids": list(self.row_ids),
            "column_ids": list(self.column_ids),
            "column_labels": list(self.column_labels),
            "cells": {
                r: {c: self.cells[(r, c)].to_dict() for c in self.column_ids}
                for r in self.row_ids
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvidenceMatrix":
        cells = {
            (r, c): EvidenceCell.from_dict(cell)
            for r, row in d["cells"].items()
            for c, cell in row.items()
        }
        return cls(
            row_ids=tuple(d["row_ids"]),
            column_ids=tuple(d["column_ids"]),
            column_labels=tuple(d["column_labels"]),
            cells=cells,
        )


# --- clustering ----------------------------------------------------------------


@dataclass(frozen=True)
class Cluster:
    """A named group of examples with the features the model claims they share.

    member_ids hold raw model output, so duplicate or empty member lists
    are representable here; check_partition reports them. The feature
    matrix is engine-attached after validation, so when present it must
    line up with the members.
    """

    id: str
    name: str
    common_features: tuple[str, ...]
    member_ids: tuple[str, ...]
    feature_matrix: Optional[EvidenceMatrix] = None

    def __post_init__(self):
        if self.feature_matrix is not None:
            if self.feature_matrix.row_ids != self.member_ids:
                raise InvariantViolation(
                    f"cluster {self.id}: feature matrix rows do not match members"
                )
            for col in self.feature_matrix.column_ids:
                if not (col.startswith("F") and col[1:].isdigit()):
                    raise InvariantViolation(
                        f"cluster {self.id}: feature column id {col!r} is not F<n>"
                    )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "common_features": list(self.common_features),
            "member_ids": list(self.member_ids),
            "feature_matrix": (
                self.feature_matrix.to_dict() if self.feature_matrix else None
            ),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Cluster":
        return cls(
            id=d["id"],
            name=d["name"],
            common_features=tuple(d["common_features"]),
            member_ids=tuple(d["member_ids"]),
            feature_matrix=(
                EvidenceMatrix.from_dict(d["feature_matrix"])
                if d.get("feature_matrix")
                else None
            ),
        )


@dataclass(frozen=True)
class Clustering:
    """All clusters proposed for one example set.

    over lists the example ids the clustering covers (the non-holdout
    subset); a valid clustering partitions exactly those ids.
    """

    clusters: tuple[Cluster, ...]
    over: tuple[str, ...] = ()

    def cluster_by_id(self, cluster_id: str) -> Cluster:
        for c in self.clusters:
            if c.id == cluster_id:
                return c
        raise KeyError(cluster_id)

    def to_dict(self) -> dict:
        return {
            "clusters": [c.to_dict() for c in self.clusters],
            "over": list(self.over),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Clustering":
        return cls(
            clusters=tuple(Cluster.from_dict(c) for c in d["clusters"]),
            over=tuple(d.get("over", ())),
        )


# --- schema --------------------------------------------------------------------


@dataclass(frozen=True)
class Attribute:
    """One detailed/concise attribute pair.

    detailed is the one-sentence description; concise is the short label
    used as the matrix column id. Scope is positional: an attribute lives
    either inside a Dimension or in a schema's overall list.
    """

    detailed: str
    concise: str

    def to_dict(self) -> dict:
        return {"detailed": self.detailed, "concise": self.concise}

    @classmethod
    def from_dict(cls, d: dict) -> "Attribute":
        return cls(detailed=d["detailed"], concise=d["concise"])


@dataclass(frozen=True)
class Dimension:
    """One axis of variation within a cluster, with its attributes."""

    id: str
    name: str
    description: str
    attributes: tuple[Attribute, ...] = ()

    def __post_init__(self):
        labels = [a.concise for a in self.attributes]
        if len(set(labels)) != len(labels):
            raise DuplicateConciseError(
                f"dimension {self.id}: duplicate concise labels"
            )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "description": self.description,
            "attributes": [a.to_dict() for a in self.attributes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Dimension":
        return cls(
            id=d["id"],
            name=d["name"],
            description=d["description"],
            attributes=tuple(Attribute.from_dict(a) for a in d.get("attributes", [])),
        )


@dataclass(frozen=True)
class Schema:
    """One revision of a schema for one cluster.

    id is "{cluster_id}-r{revision}"; revision 0 has no parent, every later
    revision points at the previous one. dimension_matrix columns are
    dimension ids; each attribute matrix is keyed by its dimension id and
    its columns (like the overall matrix's) are concise labels.
    """

    id: str
    cluster_id: str
    revision: int
    parent_id: Optional[str]
    dimensions: tuple[Dimension, ...]
    overall_attributes: tuple[Attribute, ...]
    dimension_matrix: Optional[EvidenceMatrix] = None
    attribute_matrices: dict[str, EvidenceMatrix] = field(default_factory=dict)
    overall_matrix: Optional[EvidenceMatrix] = None

    def __post_init__(self):
        if self.revision < 0:
            raise InvariantViolation("revision must be non-negative")
        if (self.revision == 0) != (self.parent_id is None):
            raise InvariantViolation(
                "revision 0 must have no parent and later revisions must have one"
            )
        dim_ids = [d.id for d in self.dimensions]
        dim_names = [d.name for d in self.dimensions]
        if len(set(dim_ids)) != len(dim_ids):
            raise DuplicateIdError("duplicate dimension ids")
        if len(set(dim_names)) != len(dim_names):
            raise DuplicateConciseError("duplicate dimension names")
        labels = [a.concise for a in self.overall_attributes]
        if len(set(labels)) != len(labels):
            raise DuplicateConciseError("duplicate concise labels in overall scope")
        if self.dimension_matrix is not None:
            for col in self.dimension_matrix.column_ids:
                if col not in dim_ids:
                    raise DanglingColumnError(
                        f"dimension matrix column {col!r} resolves to nothing"
                    )
        for dim_id, matrix in self.attribute_matrices.items():
            if dim_id not in dim_ids:
                raise DanglingColumnError(f"attribute matrix for unknown dimension {dim_id!r}")
            allowed = {a.concise for a in self.dimension_by_id(dim_id).attributes}
            for col in matrix.column_ids:
                if col not in allowed:
                    raise DanglingColumnError(
                        f"attribute matrix column {col!r} resolves to nothing in {dim_id}"
                    )
        if self.overall_matrix is not None:
            allowed = {a.concise for a in self.overall_attributes}
            for col in self.overall_matrix.column_ids:
                if col not in allowed:
                    raise DanglingColumnError(
                        f"overall matrix column {col!r} resolves to nothing"
                    )

    def attributes_for(self, scope_id: str) -> tuple[Attribute, ...]:
        """Attributes in one scope: a dimension id, or "overall"."""
        if scope_id == "overall":
            return self.overall_attributes
        return self.dimension_by_id(scope_id).attributes

    def dimension_by_id(self, dimension_id: str) -> Dimension:
        for d in self.dimensions:
            if d.id == dimension_id:
                return d
        raise KeyError(dimension_id)

    def dimension_by_name(self, name: str) -> Dimension:
        for d in self.dimensions:
            if d.name == name:
                return d
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "cluster_id": self.cluster_id,
            "revision": self.revision,
            "parent_id": self.parent_id,
            "dimensions": [d.to_dict() for d in self.dimensions],
            "overall_attributes": [a.to_dict() for a in self.overall_attributes],
            "dimension_matrix": (
                self.dimension_matrix.to_dict() if self.dimension_matrix else None
            ),
            "attribute_matrices": {
                k: m.to_dict() for k, m in sorted(self.attribute_matrices.items())
            },
            "overall_matrix": (
                self.overall_matrix.to_dict() if self.overall_matrix else None
            ),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Schema":
        return cls(
            id=d["id"],
            cluster_id=d["cluster_id"],
            revision=d["revision"],
            parent_id=d.get("parent_id"),
            dimensions=tuple(Dimension.from_dict(x) for x in d["dimensions"]),
            overall_attributes=tuple(
                Attribute.from_dict(x) for x in d["overall_attributes"]
            ),
            dimension_matrix=(
                EvidenceMatrix.from_dict(d["dimension_matrix"])
                if d.get("dimension_matrix")
                else None
            ),
            attribute_matrices={
                k: EvidenceMatrix.from_dict(m)
                for k, m in d.get("attribute_matrices", {}).items()
            },
            overall_matrix=(
                EvidenceMatrix.from_dict(d["overall_matrix"])
                if d.get("overall_matrix")
                else None
            ),
        )


# --- refinement artifacts ---------------------------------------------------------


@dataclass(frozen=True)
class GenerationRecord:
    """One output composed under a schema from one input.

    gold_id names the example the input came from (its content is the
    gold standard for contrast); is_holdout marks generations whose gold
    example was held out of induction.
    """

    id: str
    schema_id: str
    revision: int
    input_context: str
    dimension_values: dict[str, str]
    composed: str
    gold_id: Optional[str] = None
    is_holdout: bool = False

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "schema_id": self.schema_id,
            "revision": self.revision,
            "input_context": self.input_context,
            "dimension_values": dict(
                sorted(self.dimension_values.items(), key=lambda kv: _id_sort_key(kv[0]))
            ),
            "composed": self.composed,
            "gold_id": self.gold_id,
            "is_holdout": self.is_holdout,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationRecord":
        return cls(
            id=d["id"],
            schema_id=d["schema_id"],
            revision=d["revision"],
            input_context=d["input_context"],
            dimension_values=dict(d["dimension_values"]),
            composed=d["composed"],
            gold_id=d.get("gold_id"),
            is_holdout=d.get("is_holdout", False),
        )


class SuggestionTag(Enum):
    ADD = "ADD"
    DEEPEN = "DEEPEN"
    REFINE = "REFINE"
    RESTRUCTURE = "RESTRUCTURE"


class ReviewStatus(Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    EDITED = "edited"


OVERALL_TARGET = "Overall"


@dataclass(frozen=True)
class ImprovementSuggestion:
    """One tagged improvement from a contrast pass, under user review.

    target is the dimension id the suggestion falls under, or "Overall".
    origin is the generation record the contrast ran on. edited_text is
    set exactly when status is edited (accepted with replacement text).
    """

    id: str
    origin: str
    target: str
    tag: SuggestionTag
    text: str
    status: ReviewStatus = ReviewStatus.PENDING
    edited_text: Optional[str] = None

    def __post_init__(self):
        if (self.status is ReviewStatus.EDITED) != (self.edited_text is not None):
            raise InvariantViolation("edited_text is set exactly when status is edited")

    def effective_text(self) -> str:
        return self.edited_text if self.edited_text is not None else self.text

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "origin": self.origin,
            "target": self.target,
            "tag": self.tag.value,
            "text": self.text,
            "status": self.status.value,
            "edited_text": self.edited_text,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ImprovementSuggestion":
        return cls(
            id=d["id"],
            origin=d["origin"],
            target=d["target"],
            tag=SuggestionTag(d["tag"]),
            text=d["text"],
            status=ReviewStatus(d.get("status", "pending")),
            edited_text=d.get("edited_text"),
        )


class SegmentSource(Enum):
    GENERATED = "generated"
    GOLD = "gold"


class Importance(Enum):
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"


@dataclass(frozen=True)
class Segment:
    """One half-open [start, end) slice of a text, tagged with a dimension."""

    id: str
    source: SegmentSource
    start: int
    end: int
    text: str
    dimension: Optional[str]
    annotation: str = ""
    importance: Importance = Importance.MEDIUM

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source": self.source.value,
            "start": self.start,
            "end": self.end,
            "text": self.text,
            "dimension": self.dimension,
            "annotation": self.annotation,
            "importance": self.importance.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Segment":
        return cls(
            id=d["id"],
            source=SegmentSource(d["source"]),
            start=d["start"],
            end=d["end"],
            text=d["text"],
            dimension=d.get("dimension"),
            annotation=d.get("annotation", ""),
            importance=Importance(d.get("importance", "medium")),
        )


@dataclass(frozen=True)
class SegmentMap:
    """Segments over a generated output and its gold example.

    Holds raw model output (possibly with gaps or overlaps); the segment
    validator reports violations and the sentence fallback replaces maps
    that fail it. generated_len/gold_len record the lengths of the texts
    the offsets index into.
    """

    record_id: str
    segments: tuple[Segment, ...]
    dimension_analysis: dict[str, str] = field(default_factory=dict)
    generated_len: int = 0
    gold_len: int = 0
    fallback: bool = False

    def segments_for(self, source: SegmentSource) -> tuple[Segment, ...]:
        return tuple(s for s in self.segments if s.source is source)

    @property
    def generated_segments(self) -> tuple[Segment, ...]:
        return self.segments_for(SegmentSource.GENERATED)

    @property
    def gold_segments(self) -> tuple[Segment, ...]:
        return self.segments_for(SegmentSource.GOLD)

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "segments": [s.to_dict() for s in self.segments],
            "dimension_analysis": dict(sorted(self.dimension_analysis.items())),
            "generated_len": self.generated_len,
            "gold_len": self.gold_len,
            "fallback": self.fallback,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SegmentMap":
        return cls(
            record_id=d["record_id"],
            segments=tuple(Segment.from_dict(s) for s in d["segments"]),
            dimension_analysis=dict(d.get("dimension_analysis", {})),
            generated_len=d.get("generated_len", 0),
            gold_len=d.get("gold_len", 0),
            fallback=d.get("fallback", False),
        )


# --- revision diffs -----------------------------------------------------------------


@dataclass(frozen=True)
class AddedDimension:
    id: str
    name: str
    description: str
    attributes: tuple[tuple[str, str], ...]  # (concise, detailed) pairs

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "description": self.description,
            "attributes": [list(p) for p in self.attributes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AddedDimension":
        return cls(
            id=d["id"],
            name=d["name"],
            description=d["description"],
            attributes=tuple((p[0], p[1]) for p in d["attributes"]),
        )


@dataclass(frozen=True)
class RevisionDiff:
    """Structural difference between two schema revisions.

    Scopes are dimension ids, with None meaning the overall scope. Order
    changes are not structural: the diff is empty iff both revisions have
    the same dimensions (by id and name) carrying the same attributes
    (by concise label and detailed text).
    """

    dimensions_added: tuple[AddedDimension, ...] = ()
    dimensions_removed: tuple[str, ...] = ()
    dimensions_renamed: tuple[tuple[str, str, str], ...] = ()  # (id, old, new)
    attributes_added: tuple[tuple[Optional[str], str, str], ...] = ()  # (scope, concise, detailed)
    attributes_removed: tuple[tuple[Optional[str], str], ...] = ()
    attributes_renamed: tuple[tuple[Optional[str], str, str], ...] = ()  # (scope, old, new)
    details_changed: tuple[tuple[Optional[str], str, str, str], ...] = ()  # (scope, concise, old, new)
    descriptions_changed: tuple[tuple[str, str, str], ...] = ()  # (dim id, old, new)

    def is_empty(self) -> bool:
        return not (
            self.dimensions_added
            or self.dimensions_removed
            or self.dimensions_renamed
            or self.attributes_added
            or self.attributes_removed
            or self.attributes_renamed
            or self.details_changed
            or self.descriptions_changed
        )

    def to_dict(self) -> dict:
        return {
            "dimensions_added": [d.to_dict() for d in self.dimensions_added],
            "dimensions_removed": list(self.dimensions_removed),
            "dimensions_renamed": [list(t) for t in self.dimensions_renamed],
            "attributes_added": [list(t) for t in self.attributes_added],
            "attributes_removed": [list(t) for t in self.attributes_removed],
            "attributes_renamed": [list(t) for t in self.attributes_renamed],
            "details_changed": [list(t) for t in self.details_changed],
            "descriptions_changed": [list(t) for t in self.descriptions_changed],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RevisionDiff":
        return cls(
            dimensions_added=tuple(AddedDimension.from_dict(x) for x in d["dimensions_added"]),
            dimensions_removed=tuple(d["dimensions_removed"]),
            dimensions_renamed=tuple(tuple(t) for t in d["dimensions_renamed"]),
            attributes_added=tuple(tuple(t) for t in d["attributes_added"]),
            attributes_removed=tuple(tuple(t) for t in d["attributes_removed"]),
            attributes_renamed=tuple(tuple(t) for t in d["attributes_renamed"]),
            details_changed=tuple(tuple(t) for t in d["details_changed"]),
            descriptions_changed=tuple(tuple(t) for t in d["descriptions_changed"]),
        )

    def apply_to(self, schema: Schema) -> dict:
        """Apply this diff to a schema's structure and return the result.

        The result is the comparable structure of the later revision:
        {"dimensions": {dim_id: {"name", "description", "attributes":
        {concise: detailed}}}, "overall": {concise: detailed}}. Raises
        StructureMismatchError when the diff does not fit the schema.
        """
        structure = _structure_of(schema)
        dims = structure["dimensions"]
        for dim_id in self.dimensions_removed:
            if dim_id not in dims:
                raise StructureMismatchError(f"cannot remove unknown dimension {dim_id}")
            del dims[dim_id]
        for added in self.dimensions_added:
            if added.id in dims:
                raise StructureMismatchError(f"dimension {added.id} already present")
            dims[added.id] = {
                "name": added.name,
                "description": added.description,
                "attributes": {c: det for c, det in added.attributes},
            }
        for dim_id, old, new in self.dimensions_renamed:
            if dim_id not in dims or dims[dim_id]["name"] != old:
                raise StructureMismatchError(f"rename does not fit dimension {dim_id}")
            dims[dim_id]["name"] = new
        for dim_id, old, new in self.descriptions_changed:
            if dim_id not in dims or dims[dim_id]["description"] != old:
                raise StructureMismatchError(f"description change does not fit {dim_id}")
            dims[dim_id]["description"] = new

        def scope_attrs(scope: Optional[str]) -> dict:
            if scope is None:
                return structure["overall"]
            if scope not in dims:
                raise StructureMismatchError(f"unknown scope {scope}")
            return dims[scope]["attributes"]

        for scope, concise in self.attributes_removed:
            attrs = scope_attrs(scope)
            if concise not in attrs:
                raise StructureMismatchError(f"cannot remove unknown attribute {concise!r}")
            del attrs[concise]
        for scope, old, new in self.attributes_renamed:
            attrs = scope_attrs(scope)
            if old not in attrs:
                raise StructureMismatchError(f"cannot rename unknown attribute {old!r}")
            attrs[new] = attrs.pop(old)
        for scope, concise, detailed in self.attributes_added:
            attrs = scope_attrs(scope)
            if concise in attrs:
                raise StructureMismatchError(f"attribute {concise!r} already present")
            attrs[concise] = detailed
        for scope, concise, old, new in self.details_changed:
            attrs = scope_attrs(scope)
            if attrs.get(concise) != old:
                raise StructureMismatchError(f"detail change does not fit {concise!r}")
            attrs[concise] = new
        return structure


def _structure_of(schema: Schema) -> dict:
    return {
        "dimensions": {
            d.id: {
                "name": d.name,
                "description": d.description,
                "attributes": {a.concise: a.detailed for a in d.attributes},
            }
            for d in schema.dimensions
        },
        "overall": {a.concise: a.detailed for a in schema.overall_attributes},
    }


def diff_revisions(a: Schema, b: Schema) -> RevisionDiff:
    """Compute the structural diff from revision a to revision b.

    Dimensions match by id. Attributes match by concise label within a
    scope; a removed/added pair with identical detailed text is reported
    as a rename instead.
    """
    if a.cluster_id != b.cluster_id:
        raise ClusterMismatchError(
            f"cannot diff schemas of different clusters ({a.cluster_id} vs {b.cluster_id})"
        )
    sa, sb = _structure_of(a), _structure_of(b)
    a_dims, b_dims = sa["dimensions"], sb["dimensions"]

    removed_dims = tuple(d for d in a_dims if d not in b_dims)
    added_dims = tuple(
        AddedDimension(
            id=d,
            name=b_dims[d]["name"],
            description=b_dims[d]["description"],
            attributes=tuple(b_dims[d]["attributes"].items()),
        )
        for d in b_dims
        if d not in a_dims
    )
    renamed_dims = []
    desc_changed = []
    for d in a_dims:
        if d not in b_dims:
            continue
        if a_dims[d]["name"] != b_dims[d]["name"]:
            renamed_dims.append((d, a_dims[d]["name"], b_dims[d]["name"]))
        if a_dims[d]["description"] != b_dims[d]["description"]:
            desc_changed.append((d, a_dims[d]["description"], b_dims[d]["description"]))

    attrs_added = []
    attrs_removed = []
    attrs_renamed = []
    details_changed = []
    scopes: list[tuple[Optional[str], dict, dict]] = [
        (d, a_dims[d]["attributes"], b_dims[d]["attributes"])
        for d in a_dims
        if d in b_dims
    ]
    scopes.append((None, sa["overall"], sb["overall"]))
    for scope, a_attrs, b_attrs in scopes:
        gone = [c for c in a_attrs if c not in b_attrs]
        new = [c for c in b_attrs if c not in a_attrs]
        # pair a removal with an addition that kept the same detailed text
        for old in list(gone):
            for cand in list(new):
                if a_attrs[old] == b_attrs[cand]:
                    attrs_renamed.append((scope, old, cand))
                    gone.remove(old)
                    new.remove(cand)
                    break
        attrs_removed.extend((scope, c) for c in gone)
        attrs_added.extend((scope, c, b_attrs[c]) for c in new)
        for c in a_attrs:
            if c in b_attrs and a_attrs[c] != b_attrs[c]:
                details_changed.append((scope, c, a_attrs[c], b_attrs[c]))

    return RevisionDiff(
        dimensions_added=added_dims,
        dimensions_removed=removed_dims,
        dimensions_renamed=tuple(renamed_dims),
        attributes_added=tuple(attrs_added),
        attributes_removed=tuple(attrs_removed),
        attributes_renamed=tuple(attrs_renamed),
        details_changed=tuple(details_changed),
        descriptions_changed=tuple(desc_changed),
    )


def check_cluster_schema(schema: Schema, cluster: Cluster) -> None:
    """Verify a schema belongs to the cluster it claims."""
    if schema.cluster_id != cluster.id:
        raise ClusterMismatchError(
            f"schema {schema.id} belongs to {schema.cluster_id}, not {cluster.id}"
        )
