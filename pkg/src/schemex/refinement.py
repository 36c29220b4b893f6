"""Stage 3: generate with a schema, contrast against gold, iterate revisions.

A frozen schema is exercised by generating one value per dimension and
composing them into a full output for a sampled input. Each generation is
contrasted with its gold example to produce tagged improvement suggestions,
optionally backed by a character-exact segment alignment. A human reviews
each suggestion (accept, reject, or edit); accepted ones feed one rewrite
call that yields the next schema revision, with evidence matrices carried
over column by column and Unchecked placeholders for anything new.
"""

from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence, Union

from .abstraction import (
    matrix_with_placeholder_column,
    matrix_without_column,
    parse_parallel_attributes,
    placeholder_matrix,
)
from .errors import (
    AlreadyReviewedError,
    EmptyGenerationError,
    InvariantViolation,
    MissingDimensionValueError,
    NoEligibleInputsError,
    NoExamplesError,
    NothingToApplyError,
    ParseFailedError,
    StructureMismatchError,
    UnknownTagError,
    UnknownTargetDimensionError,
    UnknownTargetError,
    ValidationError,
)
from .evidence import check_segment_map, sentence_spans
from .formatting import format_examples, format_input_context
from .gateway import Gateway
from .model import (
    Attribute,
    Cluster,
    Dimension,
    Example,
    ExampleSet,
    GenerationRecord,
    Importance,
    ImprovementSuggestion,
    OVERALL_TARGET,
    ReviewStatus,
    Schema,
    Segment,
    SegmentMap,
    SegmentSource,
    SuggestionTag,
    check_cluster_schema,
    dumps_canonical,
)
from .prompts import TEMPLATES, render_prompt

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_SIZE = 2

IMPROVEMENT_LINE = re.compile(r"^\s*\[([A-Za-z]+)\]\s*(.*?)\s*$")


class ApplyTargets(Enum):
    CLUSTER_MEMBERS = "ClusterMembers"
    HOLDOUT = "Holdout"
    BOTH = "Both"


# --- prompt text builders ------------------------------------------------------


def format_attributes_text(attributes: Sequence[Attribute]) -> str:
    if not attributes:
        return "(no specific requirements)"
    return "\n".join(f"- {a.detailed}" for a in attributes)


def format_schema_text(schema: Schema) -> str:
    """Flatten a schema into the plain-text form the contrast prompts read."""
    blocks = []
    for dim in schema.dimensions:
        lines = [f"Dimension: {dim.name}", f"Description: {dim.description}"]
        lines.extend(f"- {a.concise}: {a.detailed}" for a in dim.attributes)
        blocks.append("\n".join(lines))
    overall = ["Overall attributes:"]
    overall.extend(f"- {a.concise}: {a.detailed}" for a in schema.overall_attributes)
    if len(overall) == 1:
        overall.append("- (none)")
    blocks.append("\n".join(overall))
    return "\n\n".join(blocks)


def format_dimension_values(schema: Schema, dimension_values: dict[str, str]) -> str:
    lines = []
    for dim in schema.dimensions:
        value = dimension_values.get(dim.id)
        if value is not None:
            lines.append(f"{dim.name}: {value}")
    return "\n".join(lines)


# --- generation -----------------------------------------------------------------


def generate_dimension_value(
    schema: Schema,
    dimension_id: str,
    input_context: str,
    goal: str,
    gateway: Gateway,
) -> str:
    """Generate the text for one dimension of one input.

    The dimension's detailed attributes go into the prompt as explicit
    requirements. A blank reply is an error, never silently stored.
    """
    try:
        dimension = schema.dimension_by_id(dimension_id)
    except KeyError:
        raise UnknownTargetError(
            f"schema {schema.id} has no dimension {dimension_id!r}"
        ) from None
    if not input_context.strip():
        raise InvariantViolation("input context must be non-empty")
    prompt = render_prompt(
        TEMPLATES["dimension_value"],
        {
            "current_user_goal": goal,
            "input_text": input_context,
            "dim_name": dimension.name,
            "dim_description": dimension.description,
            "attributes_text": format_attributes_text(dimension.attributes),
        },
    )
    text, _ = gateway.exchange_text("dimension_value", prompt)
    text = text.strip()
    if not text:
        raise EmptyGenerationError(f"empty value for dimension {dimension.name!r}")
    return text


def compose_output(
    schema: Schema,
    input_context: str,
    dimension_values: dict[str, str],
    goal: str,
    gateway: Gateway,
) -> str:
    """Compose per-dimension values into one output honoring overall attributes."""
    for dim in schema.dimensions:
        if not dimension_values.get(dim.id, "").strip():
            raise MissingDimensionValueError(dim.id)
    prompt = render_prompt(
        TEMPLATES["compose_output"],
        {
            "current_user_goal": goal,
            "input_text": input_context,
            "dimensions_text": format_dimension_values(schema, dimension_values),
            "overall_arrtibutes": format_attributes_text(schema.overall_attributes),
        },
    )
    text, _ = gateway.exchange_text("compose_output", prompt)
    text = text.strip()
    if not text:
        raise EmptyGenerationError("composed output is empty")
    return text


def _sample_members(
    cluster: Cluster, example_set: ExampleSet, k: int, seed: int
) -> list[Example]:
    eligible = [
        example_set.by_id(member_id)
        for member_id in cluster.member_ids
        if example_set.by_id(member_id).input_context.strip()
    ]
    n = min(k, len(eligible))
    if 0 < n < len(eligible):
        ids = [e.id for e in eligible]
        rng = random.Random(seed)
        rng.shuffle(ids)
        keep = set(ids[:n])
        eligible = [e for e in eligible if e.id in keep]
    return eligible


def apply_schema(
    schema: Schema,
    cluster: Cluster,
    example_set: ExampleSet,
    gateway: Gateway,
    targets: ApplyTargets = ApplyTargets.CLUSTER_MEMBERS,
    k: int = DEFAULT_SAMPLE_SIZE,
    seed: int = 0,
) -> list[GenerationRecord]:
    """Generate one full output per chosen input, returning replayable records.

    Cluster members are sampled down to k eligible inputs (seeded, so the
    same seed picks the same inputs); holdout examples are all used and
    their records are marked is_holdout so they never leak into cluster
    statistics. Inputs without an input context cannot be generated for
    and are skipped.
    """
    check_cluster_schema(schema, cluster)
    chosen: list[tuple[Example, bool]] = []
    if targets in (ApplyTargets.CLUSTER_MEMBERS, ApplyTargets.BOTH):
        chosen.extend((e, False) for e in _sample_members(cluster, example_set, k, seed))
    if targets in (ApplyTargets.HOLDOUT, ApplyTargets.BOTH):
        chosen.extend(
            (e, True) for e in example_set.holdout_examples() if e.input_context.strip()
        )
    if not chosen:
        raise NoEligibleInputsError(
            f"no inputs with input context for targets {targets.value}"
        )
    records = []
    for i, (example, is_holdout) in enumerate(chosen):
        values = {
            dim.id: generate_dimension_value(
                schema, dim.id, example.input_context, example_set.goal, gateway
            )
            for dim in schema.dimensions
        }
        composed = compose_output(
            schema, example.input_context, values, example_set.goal, gateway
        )
        records.append(
            GenerationRecord(
                id=f"{schema.id}-g{i + 1}",
                schema_id=schema.id,
                revision=schema.revision,
                input_context=example.input_context,
                dimension_values=values,
                composed=composed,
                gold_id=example.id,
                is_holdout=is_holdout,
            )
        )
    return records


# --- contrast -------------------------------------------------------------------


@dataclass(frozen=True)
class ContrastReport:
    """Per-dimension analysis of one generation against its gold example.

    analysis is keyed by dimension name (plus "Overall"); suggestions carry
    machine targets (dimension id or "Overall") and start out Pending.
    """

    record_id: str
    analysis: dict[str, str]
    suggestions: tuple[ImprovementSuggestion, ...]

    def suggestion_by_id(self, suggestion_id: str) -> ImprovementSuggestion:
        for suggestion in self.suggestions:
            if suggestion.id == suggestion_id:
                return suggestion
        raise KeyError(suggestion_id)

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "analysis": dict(self.analysis),
            "suggestions": [s.to_dict() for s in self.suggestions],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ContrastReport":
        return cls(
            record_id=data["record_id"],
            analysis=dict(data.get("analysis", {})),
            suggestions=tuple(
                ImprovementSuggestion.from_dict(s) for s in data.get("suggestions", [])
            ),
        )


def parse_improvement_line(line: str) -> tuple[SuggestionTag, str]:
    """Split "[TAG] text" into a known tag and its text, else UnknownTagError."""
    match = IMPROVEMENT_LINE.match(line)
    if match is None:
        raise UnknownTagError(line)
    try:
        tag = SuggestionTag(match.group(1).upper())
    except ValueError:
        raise UnknownTagError(line) from None
    return tag, match.group(2)


def contrast(
    schema: Schema,
    record: GenerationRecord,
    gold: Example,
    gateway: Gateway,
) -> ContrastReport:
    """Contrast one generation with its gold example.

    Every analysis key must resolve to a schema dimension by name or be the
    reserved "Overall" scope, and every improvement line must start with a
    known bracket tag; anything else is a hard parse error rather than a
    silently dropped suggestion.
    """
    if not record.composed.strip():
        raise EmptyGenerationError("record has no composed output to contrast")
    name_to_id = {d.name: d.id for d in schema.dimensions}
    prompt = render_prompt(
        TEMPLATES["contrast_analysis"],
        {
            "schema_text": format_schema_text(schema),
            "dimension_values_text": format_dimension_values(
                schema, record.dimension_values
            ),
            "generated_output": record.composed,
            "gold_example": gold.content,
        },
    )
    data, _ = gateway.exchange_structured(
        "contrast_analysis", prompt, TEMPLATES["contrast_analysis"].expected_keys
    )
    block = data.get("dimension_analysis")
    if not isinstance(block, dict) or not block:
        raise ParseFailedError("contrast reply has no dimension_analysis entries")
    analysis: dict[str, str] = {}
    suggestions: list[ImprovementSuggestion] = []
    for raw_name, entry in block.items():
        name = str(raw_name).strip()
        if name == OVERALL_TARGET:
            target = OVERALL_TARGET
        elif name in name_to_id:
            target = name_to_id[name]
        else:
            raise UnknownTargetDimensionError(name)
        if not isinstance(entry, dict):
            raise ParseFailedError(f"analysis for {name!r} is not an object")
        analysis[name] = str(entry.get("analysis") or "")
        improvements = entry.get("improvements") or []
        if not isinstance(improvements, list):
            raise ParseFailedError(f"improvements for {name!r} is not a list")
        for line in improvements:
            tag, text = parse_improvement_line(str(line))
            suggestions.append(
                ImprovementSuggestion(
                    id=f"{record.id}-s{len(suggestions) + 1}",
                    origin=record.id,
                    target=target,
                    tag=tag,
                    text=text,
                )
            )
    return ContrastReport(
        record_id=record.id, analysis=analysis, suggestions=tuple(suggestions)
    )


# --- segment alignment ------------------------------------------------------------


_IMPORTANCE_VALUES = {level.value: level for level in Importance}

_NULL_DIMENSION_TOKENS = ("", "null", "none")


def _parse_segments(
    data: dict,
) -> tuple[Optional[tuple[Segment, ...]], dict[str, str], str]:
    """Turn one reply into segments, or (None, {}, reason) when unusable."""
    raw = data.get("segments")
    if not isinstance(raw, list) or not raw:
        return None, {}, "segments array is missing or empty"
    segments = []
    for index, entry in enumerate(raw):
        label = f"segment {index + 1}"
        if not isinstance(entry, dict):
            return None, {}, f"{label} is not an object"
        try:
            source = SegmentSource(str(entry.get("source", "")))
        except ValueError:
            return None, {}, f"{label} has unknown source {entry.get('source')!r}"
        try:
            start = int(entry["start_index"])
            end = int(entry["end_index"])
        except (KeyError, TypeError, ValueError):
            return None, {}, f"{label} has no usable start_index/end_index"
        dimension = entry.get("dimension")
        if dimension is not None:
            dimension = str(dimension).strip()
            if dimension.lower() in _NULL_DIMENSION_TOKENS:
                dimension = None
        importance = _IMPORTANCE_VALUES.get(
            str(entry.get("importance", "")).strip().lower(), Importance.MEDIUM
        )
        segments.append(
            Segment(
                id=str(entry.get("id") or f"s{index + 1}"),
                source=source,
                start=start,
                end=end,
                text=str(entry.get("text") or ""),
                dimension=dimension,
                annotation=str(entry.get("annotation") or ""),
                importance=importance,
            )
        )
    analysis_block = data.get("dimension_analysis")
    analysis = (
        {str(k): str(v) for k, v in analysis_block.items()}
        if isinstance(analysis_block, dict)
        else {}
    )
    return tuple(segments), analysis, ""


def fallback_segment_map(
    record_id: str,
    generated_text: str,
    gold_text: str,
    dimension_analysis: Optional[dict[str, str]] = None,
) -> SegmentMap:
    """Sentence-level alignment that never guesses: one segment per sentence,
    no dimension tags, Low importance. Always tiles both texts exactly."""
    segments = []
    for source, text in (
        (SegmentSource.GENERATED, generated_text),
        (SegmentSource.GOLD, gold_text),
    ):
        for index, (start, end) in enumerate(sentence_spans(text)):
            segments.append(
                Segment(
                    id=f"{source.value}-{index + 1}",
                    source=source,
                    start=start,
                    end=end,
                    text=text[start:end],
                    dimension=None,
                    annotation="fallback alignment",
                    importance=Importance.LOW,
                )
            )
    return SegmentMap(
        record_id=record_id,
        segments=tuple(segments),
        dimension_analysis=dict(dimension_analysis or {}),
        generated_len=len(generated_text),
        gold_len=len(gold_text),
        fallback=True,
    )


def align_segments(
    schema: Schema,
    record: GenerationRecord,
    gold: Example,
    gateway: Gateway,
) -> SegmentMap:
    """Produce a validated character-exact alignment of generated vs gold.

    An invalid reply earns exactly one corrective re-ask listing the
    violations; if that also fails validation, the deterministic sentence
    fallback is committed instead. The returned map always passes
    check_segment_map with zero violations.
    """
    generated_text = record.composed
    gold_text = gold.content
    if not generated_text or not gold_text:
        raise ParseFailedError("segment alignment needs non-empty generated and gold texts")
    dimension_names = [d.name for d in schema.dimensions]
    prompt = render_prompt(
        TEMPLATES["segment_alignment"],
        {
            "schema_text": format_schema_text(schema),
            "generated_output": generated_text,
            "gold_example": gold_text,
        },
    )
    analysis: dict[str, str] = {}
    data, _ = gateway.exchange_structured(
        "segment_alignment", prompt, TEMPLATES["segment_alignment"].expected_keys
    )
    for attempt in range(2):
        segments, parsed_analysis, reason = _parse_segments(data)
        if segments is None:
            problems = [reason]
        else:
            analysis = parsed_analysis
            candidate = SegmentMap(
                record_id=record.id,
                segments=segments,
                dimension_analysis=parsed_analysis,
                generated_len=len(generated_text),
                gold_len=len(gold_text),
            )
            report = check_segment_map(
                candidate, generated_text, gold_text, dimension_names
            )
            if report.ok():
                return candidate
            problems = [
                f"{v.source}: {v.kind.value}: {v.detail}" for v in report.violations
            ]
        if attempt == 0:
            logger.info(
                "segment map for %s invalid (%d problems); re-asking once",
                record.id,
                len(problems),
            )
            retry_prompt = (
                prompt
                + "\n\nYour previous reply broke these segmentation rules:\n"
                + "\n".join(f"- {p}" for p in problems)
                + "\nEvery character of each text must be covered exactly once, "
                + "each segment's text must equal the exact slice at its indices, "
                + "and dimension labels must come from the schema (or be null). "
                + "Reply again with the full corrected JSON."
            )
            data, _ = gateway.exchange_structured(
                "segment_alignment",
                retry_prompt,
                TEMPLATES["segment_alignment"].expected_keys,
            )
    logger.warning(
        "segment alignment for %s failed validation twice; committing sentence fallback",
        record.id,
    )
    return fallback_segment_map(record.id, generated_text, gold_text, analysis)


# --- suggestion review -------------------------------------------------------------


@dataclass(frozen=True)
class Accept:
    def to_dict(self) -> dict:
        return {"kind": "Accept"}


@dataclass(frozen=True)
class Reject:
    def to_dict(self) -> dict:
        return {"kind": "Reject"}


@dataclass(frozen=True)
class Edit:
    text: str

    def to_dict(self) -> dict:
        return {"kind": "Edit", "text": self.text}


ReviewAction = Union[Accept, Reject, Edit]


def review_action_from_dict(data: dict) -> ReviewAction:
    kind = data.get("kind")
    if kind == "Accept":
        return Accept()
    if kind == "Reject":
        return Reject()
    if kind == "Edit":
        return Edit(text=data["text"])
    raise ValidationError(f"unknown review action kind {kind!r}")


def review_suggestion(
    report: ContrastReport, suggestion_id: str, action: ReviewAction
) -> ContrastReport:
    """Apply one review decision; each suggestion moves out of Pending once."""
    try:
        suggestion = report.suggestion_by_id(suggestion_id)
    except KeyError:
        raise UnknownTargetError(
            f"report {report.record_id} has no suggestion {suggestion_id!r}"
        ) from None
    if suggestion.status is not ReviewStatus.PENDING:
        raise AlreadyReviewedError(
            f"suggestion {suggestion_id} is already {suggestion.status.value}"
        )
    if isinstance(action, Accept):
        updated = replace(suggestion, status=ReviewStatus.ACCEPTED)
    elif isinstance(action, Reject):
        updated = replace(suggestion, status=ReviewStatus.REJECTED)
    elif isinstance(action, Edit):
        updated = replace(suggestion, status=ReviewStatus.EDITED, edited_text=action.text)
    else:
        raise ValidationError(f"unknown review action {action!r}")
    return replace(
        report,
        suggestions=tuple(
            updated if s.id == suggestion_id else s for s in report.suggestions
        ),
    )


# --- schema iteration ---------------------------------------------------------------


def schema_prompt_json(schema: Schema) -> str:
    """The canonical JSON rendering of a schema that the rewrite prompt sees
    and that replies must mirror (parallel detailed/concise arrays)."""
    return dumps_canonical(
        {
            "dimensions": {
                d.name: {
                    "description": d.description,
                    "detailed": [a.detailed for a in d.attributes],
                    "concise": [a.concise for a in d.attributes],
                }
                for d in schema.dimensions
            },
            "overall_attributes": {
                "detailed": [a.detailed for a in schema.overall_attributes],
                "concise": [a.concise for a in schema.overall_attributes],
            },
        }
    )


def _suggestion_target_name(schema: Schema, suggestion: ImprovementSuggestion) -> str:
    if suggestion.target == OVERALL_TARGET:
        return OVERALL_TARGET
    try:
        return schema.dimension_by_id(suggestion.target).name
    except KeyError:
        raise UnknownTargetError(
            f"suggestion {suggestion.id} targets unknown dimension "
            f"{suggestion.target!r}"
        ) from None


def _carry_columns(
    matrix,
    wanted: Sequence[tuple[str, str]],
):
    """Keep matching columns of an existing matrix, drop vanished ones, and
    append Unchecked placeholder columns for anything new."""
    rows = matrix.row_ids
    for column in list(matrix.column_ids):
        if column not in {c for c, _ in wanted}:
            matrix = matrix_without_column(matrix, column)
            if matrix is None:
                break
    for column, label in wanted:
        if matrix is None:
            matrix = placeholder_matrix(rows, column, label)
        elif column not in matrix.column_ids:
            matrix = matrix_with_placeholder_column(matrix, column, label)
    return matrix


def iterate_schema(
    schema: Schema,
    suggestions: Sequence[ImprovementSuggestion],
    gateway: Gateway,
    goal: str = "",
    context: str = "",
) -> Schema:
    """Fold accepted suggestions into the next schema revision.

    One rewrite call sees the original schema JSON plus the accepted
    suggestion lines and must return the same structure. Dimensions are
    matched back by name (so ids and evidence survive renames of content,
    not of names); verified cells are carried over wherever a column's
    concise label survives, and new attributes get Unchecked placeholders.
    """
    accepted = [
        s
        for s in suggestions
        if s.status in (ReviewStatus.ACCEPTED, ReviewStatus.EDITED)
    ]
    if not accepted:
        raise NothingToApplyError("no accepted suggestions to apply")
    improvement_lines = "\n".join(
        f"- [{s.tag.value}] ({_suggestion_target_name(schema, s)}) {s.effective_text()}"
        for s in accepted
    )
    prompt = render_prompt(
        TEMPLATES["iterate_schema"],
        {
            "user_goal": goal,
            "context_text": context,
            "all_suggested_improvements": improvement_lines,
            "original_schema": schema_prompt_json(schema),
        },
    )
    data, _ = gateway.exchange_structured(
        "iterate_schema", prompt, TEMPLATES["iterate_schema"].expected_keys
    )
    dimensions_block = data.get("dimensions")
    if not isinstance(dimensions_block, dict) or not dimensions_block:
        raise StructureMismatchError("revised schema lists no dimensions")
    overall_block = data.get("overall_attributes")
    if not isinstance(overall_block, dict):
        raise StructureMismatchError("revised schema has no overall_attributes object")

    by_name = {d.name: d for d in schema.dimensions}
    numbers = [int(d.id[1:]) for d in schema.dimensions if d.id[1:].isdigit()]
    next_number = max(numbers, default=0) + 1
    new_dimensions: list[Dimension] = []
    for raw_name, block in dimensions_block.items():
        name = str(raw_name).strip()
        if not name or not isinstance(block, dict):
            raise StructureMismatchError(f"revised dimension {raw_name!r} is malformed")
        attributes = tuple(parse_parallel_attributes(block, name))
        old = by_name.get(name)
        if old is not None:
            dim_id = old.id
            description = str(block.get("description") or old.description)
        else:
            dim_id = f"d{next_number}"
            next_number += 1
            description = str(block.get("description") or "")
        new_dimensions.append(
            Dimension(id=dim_id, name=name, description=description, attributes=attributes)
        )
    overall_attributes = tuple(parse_parallel_attributes(overall_block, "overall"))

    dimension_matrix = schema.dimension_matrix
    if dimension_matrix is not None:
        dimension_matrix = _carry_columns(
            dimension_matrix, [(d.id, d.name) for d in new_dimensions]
        )
    attribute_matrices = {}
    for dim in new_dimensions:
        old_matrix = schema.attribute_matrices.get(dim.id)
        if old_matrix is None:
            continue
        carried = _carry_columns(
            old_matrix, [(a.concise, a.concise) for a in dim.attributes]
        )
        if carried is not None:
            attribute_matrices[dim.id] = carried
    overall_matrix = schema.overall_matrix
    if overall_matrix is not None:
        overall_matrix = _carry_columns(
            overall_matrix, [(a.concise, a.concise) for a in overall_attributes]
        )

    try:
        return Schema(
            id=f"{schema.cluster_id}-r{schema.revision + 1}",
            cluster_id=schema.cluster_id,
            revision=schema.revision + 1,
            parent_id=schema.id,
            dimensions=tuple(new_dimensions),
            overall_attributes=overall_attributes,
            dimension_matrix=dimension_matrix,
            attribute_matrices=attribute_matrices,
            overall_matrix=overall_matrix,
        )
    except ValidationError as exc:
        raise StructureMismatchError(f"revised schema is inconsistent: {exc}") from exc


# --- single-pass baseline -------------------------------------------------------------


def run_baseline(example_set: ExampleSet, gateway: Gateway) -> str:
    """One-shot prose schema over the working examples; stored raw, never parsed."""
    working = example_set.working_examples()
    if not working:
        raise NoExamplesError("baseline needs at least one working example")
    prompt = render_prompt(
        TEMPLATES["single_pass_baseline"],
        {
            "content_type": example_set.content_type,
            "examples": format_examples(working),
            "number_of_examples": str(len(working)),
            "input_context": format_input_context(example_set, working),
        },
    )
    text, _ = gateway.exchange_text("single_pass_baseline", prompt)
    if not text.strip():
        raise EmptyGenerationError("baseline reply is empty")
    return text
