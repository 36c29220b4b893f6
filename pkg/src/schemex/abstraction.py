"""Stage 2: dimensions, attributes, overall attributes, schema assembly, edits.

Three inference calls per cluster run in order (attributes need the
dimensions), each producing both the inferred structure and a verified
evidence matrix. In strict mode, dimension-scoped attributes whose
support falls below the threshold are dropped with a logged reason.
assemble_schema fixes the result as revision 0; apply_schema_edit rewrites
the working copy (same revision) while keeping matrices consistent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import (
    DuplicateConciseError,
    IncompleteMatrixError,
    NoExamplesError,
    ParallelArrayMismatchError,
    UnknownTargetError,
)
from .evidence import (
    DEFAULT_POLICY,
    NormalizationPolicy,
    SUPPORT_THRESHOLD,
    SupportReport,
    VerificationReport,
    check_support,
    verify_matrix,
)
from .formatting import (
    format_example_ids,
    format_examples,
    format_input_context,
    normalize_example_id,
    parse_judgment,
)
from .gateway import Gateway
from .model import (
    Attribute,
    Cluster,
    Dimension,
    EvidenceCell,
    EvidenceMatrix,
    ExampleSet,
    Judgment,
    Schema,
)
from .prompts import TEMPLATES, render_prompt

logger = logging.getLogger(__name__)

LENGTH_FORMAT_KEYWORDS = ("word", "length", "count", "format", "paragraph", "sentence")
ORGANIZATION_KEYWORDS = ("order", "sequence", "organization", "structure", "flow")

OVERALL_SCOPE = "overall"


# --- matrix column helpers ---------------------------------------------------


def matrix_with_column_renamed(
    matrix: EvidenceMatrix, old: str, new: str, new_label: Optional[str] = None
) -> EvidenceMatrix:
    idx = matrix.column_ids.index(old)
    column_ids = tuple(new if c == old else c for c in matrix.column_ids)
    labels = list(matrix.column_labels)
    labels[idx] = new_label if new_label is not None else labels[idx]
    cells = {
        (r, new if c == old else c): cell for (r, c), cell in matrix.cells.items()
    }
    return EvidenceMatrix(matrix.row_ids, column_ids, tuple(labels), cells)


def matrix_without_column(matrix: EvidenceMatrix, column: str) -> Optional[EvidenceMatrix]:
    """Drop one column; a matrix with no columns left drops entirely."""
    idx = matrix.column_ids.index(column)
    column_ids = tuple(c for c in matrix.column_ids if c != column)
    if not column_ids:
        return None
    labels = tuple(l for k, l in enumerate(matrix.column_labels) if k != idx)
    cells = {(r, c): cell for (r, c), cell in matrix.cells.items() if c != column}
    return EvidenceMatrix(matrix.row_ids, column_ids, labels, cells)


def matrix_with_placeholder_column(
    matrix: EvidenceMatrix, column: str, label: str
) -> EvidenceMatrix:
    """Add a column of Unchecked placeholder cells (no judgments invented)."""
    cells = dict(matrix.cells)
    for r in matrix.row_ids:
        cells[(r, column)] = EvidenceCell(judgment=None)
    return EvidenceMatrix(
        matrix.row_ids,
        matrix.column_ids + (column,),
        matrix.column_labels + (label,),
        cells,
    )


def placeholder_matrix(row_ids: tuple[str, ...], column: str, label: str) -> EvidenceMatrix:
    return EvidenceMatrix(
        row_ids=row_ids,
        column_ids=(column,),
        column_labels=(label,),
        cells={(r, column): EvidenceCell(judgment=None) for r in row_ids},
    )


# --- dimension inference -------------------------------------------------------


@dataclass(frozen=True)
class DimensionInference:
    dimensions: tuple[Dimension, ...]
    matrix: EvidenceMatrix
    report: VerificationReport


def _mapping_cells(
    mappings: list,
    member_ids: list[str],
    name_to_col: dict[str, str],
) -> dict[tuple[str, str], EvidenceCell]:
    cells: dict[tuple[str, str], EvidenceCell] = {}
    for entry in mappings:
        if not isinstance(entry, dict):
            continue
        row = normalize_example_id(str(entry.get("example_id", "")), member_ids)
        if row is None:
            logger.warning("mapping names unknown example %r", entry.get("example_id"))
            continue
        for app in entry.get("dimension_applications", []):
            if not isinstance(app, dict):
                continue
            col = name_to_col.get(str(app.get("dimension", "")).strip())
            if col is None:
                logger.warning("mapping names unknown dimension %r", app.get("dimension"))
                continue
            judgment = parse_judgment(app.get("applies"))
            if judgment is None:
                continue
            snippet = str(app.get("snippet") or "").strip() or None
            if judgment is Judgment.NO:
                snippet = None
            if judgment is Judgment.YES and snippet is None:
                # the inference rules say a Yes must come with a snippet
                judgment = Judgment.PARTIAL
            cells[(row, col)] = EvidenceCell(
                judgment=judgment,
                snippet=snippet,
                explanation=str(app.get("explanation") or ""),
            )
    return cells


def infer_dimensions(
    cluster: Cluster,
    example_set: ExampleSet,
    gateway: Gateway,
    strict: bool = True,
    policy: NormalizationPolicy = DEFAULT_POLICY,
) -> DimensionInference:
    """Infer the cluster's dimensions and judge every member against each.

    Dimension ids are assigned d1..dn in reply order. The mapping must
    cover members x dimensions; one corrective re-ask fills gaps, after
    which missing cells fail the call.
    """
    if not cluster.member_ids:
        raise NoExamplesError(f"cluster {cluster.id} has no members")
    members = [example_set.by_id(m) for m in cluster.member_ids]
    member_ids = [e.id for e in members]
    prompt = render_prompt(
        TEMPLATES["infer_dimensions"],
        {
            "user_goal": example_set.goal,
            "cluster_name": cluster.name,
            "examples_str": format_examples(members),
            "input_context": format_input_context(example_set, members),
        },
    )
    data, _ = gateway.exchange_structured(
        "infer_dimensions", prompt, ("dimensions", "example_mappings")
    )
    dimensions: list[Dimension] = []
    seen_names = set()
    for d in data.get("dimensions", []):
        if not isinstance(d, dict):
            continue
        name = str(d.get("name", "")).strip()
        if not name or name in seen_names:
            if name:
                logger.warning("duplicate dimension name %r ignored", name)
            continue
        seen_names.add(name)
        dimensions.append(
            Dimension(
                id=f"d{len(dimensions) + 1}",
                name=name,
                description=str(d.get("description", "")).strip(),
            )
        )
    if not dimensions:
        raise IncompleteMatrixError(["no dimensions returned"])
    name_to_col = {d.name: d.id for d in dimensions}
    cells = _mapping_cells(data.get("example_mappings", []), member_ids, name_to_col)
    expected = {(r, d.id) for r in member_ids for d in dimensions}
    missing = expected - set(cells)
    if missing:
        by_name = {d.id: d.name for d in dimensions}
        missing_text = ", ".join(f"({r}, {by_name[c]})" for r, c in sorted(missing))
        logger.info("dimension mapping incomplete (%s), re-asking", missing_text)
        retry_prompt = (
            f"{prompt}\n\n"
            f"Your previous reply did not judge these (example, dimension) pairs: "
            f"{missing_text}.\n"
            f"Keep the same dimensions and reply again with example_mappings covering "
            f"every example and every dimension."
        )
        data, _ = gateway.exchange_structured(
            "infer_dimensions", retry_prompt, ("dimensions", "example_mappings")
        )
        for key, value in _mapping_cells(
            data.get("example_mappings", []), member_ids, name_to_col
        ).items():
            cells.setdefault(key, value)
        missing = expected - set(cells)
    if missing:
        raise IncompleteMatrixError([f"{r}/{c}" for r, c in sorted(missing)])
    matrix = EvidenceMatrix(
        row_ids=tuple(member_ids),
        column_ids=tuple(d.id for d in dimensions),
        column_labels=tuple(d.name for d in dimensions),
        cells=cells,
    )
    contents = {e.id: e.content for e in members}
    matrix, report = verify_matrix(matrix, contents, policy=policy, strict=strict)
    return DimensionInference(dimensions=tuple(dimensions), matrix=matrix, report=report)


# --- attribute inference ----------------------------------------------------------


@dataclass(frozen=True)
class AttributeInference:
    attributes: dict[str, tuple[Attribute, ...]] = field(default_factory=dict)
    matrices: dict[str, EvidenceMatrix] = field(default_factory=dict)
    reports: dict[str, VerificationReport] = field(default_factory=dict)
    support: dict[str, SupportReport] = field(default_factory=dict)
    dropped: tuple[tuple[str, str, float], ...] = ()  # (dimension id, concise, ratio)


def parse_parallel_attributes(block: dict, scope_label: str) -> list[Attribute]:
    detailed = block.get("detailed", [])
    concise = block.get("concise", [])
    if not isinstance(detailed, list) or not isinstance(concise, list):
        raise ParallelArrayMismatchError(scope_label, -1, -1)
    if len(detailed) != len(concise):
        raise ParallelArrayMismatchError(scope_label, len(detailed), len(concise))
    attributes = []
    seen = set()
    for det, con in zip(detailed, concise):
        det, con = str(det).strip(), str(con).strip()
        if not det or not con:
            continue
        if con in seen:
            logger.warning("%s: duplicate concise label %r ignored", scope_label, con)
            continue
        seen.add(con)
        attributes.append(Attribute(detailed=det, concise=con))
    return attributes


def _attribute_cells(
    entries_by_detailed: dict,
    attributes: list[Attribute],
    member_ids: list[str],
) -> dict[tuple[str, str], EvidenceCell]:
    detailed_to_concise = {a.detailed: a.concise for a in attributes}
    cells: dict[tuple[str, str], EvidenceCell] = {}
    for detailed_text, entries in entries_by_detailed.items():
        col = detailed_to_concise.get(str(detailed_text).strip())
        if col is None:
            logger.warning("attribute entries for unknown attribute %r", detailed_text)
            continue
        if not isinstance(entries, list):
            continue
        for entry in entries:
            if not isinstance(entry, dict):
                continue
            row = normalize_example_id(str(entry.get("example_id", "")), member_ids)
            if row is None:
                logger.warning(
                    "attribute entry names unknown example %r", entry.get("example_id")
                )
                continue
            judgment = parse_judgment(entry.get("classification"))
            if judgment is None:
                continue
            snippet = str(entry.get("quote") or "").strip() or None
            if judgment is Judgment.NO:
                snippet = None
            if judgment is Judgment.YES and snippet is None:
                # a YES classification must carry a quote
                judgment = Judgment.PARTIAL
            cells[(row, col)] = EvidenceCell(
                judgment=judgment,
                snippet=snippet,
                explanation=str(entry.get("explanation") or ""),
            )
    return cells


def infer_dimension_attributes(
    cluster: Cluster,
    example_set: ExampleSet,
    dimensions: tuple[Dimension, ...],
    gateway: Gateway,
    strict: bool = True,
    policy: NormalizationPolicy = DEFAULT_POLICY,
    support_threshold: float = SUPPORT_THRESHOLD,
) -> AttributeInference:
    """Infer detailed/concise attribute pairs per dimension with evidence.

    Parallel-array mismatches fail the dimension. Each dimension gets its
    own matrix (rows = members, columns = concise labels). In strict mode
    an attribute whose support ratio is below the threshold is dropped.
    """
    if not dimensions:
        raise UnknownTargetError("no dimensions to attribute")
    members = [example_set.by_id(m) for m in cluster.member_ids]
    member_ids = [e.id for e in members]
    prompt = render_prompt(
        TEMPLATES["dimension_attributes"],
        {
            "user_goal": example_set.goal,
            "cluster_name": cluster.name,
            "examples_full_text": format_examples(members),
            "input_context": format_input_context(example_set, members),
            "dimensions_text": "\n".join(f"{d.name}: {d.description}" for d in dimensions),
            "example_ids_text": format_example_ids(members),
        },
    )
    data, _ = gateway.exchange_structured(
        "dimension_attributes", prompt, ("dimensions", "attributes_examples")
    )
    name_to_dim = {d.name: d for d in dimensions}
    attrs_by_dim: dict[str, list[Attribute]] = {}
    for dim_name, block in (data.get("dimensions") or {}).items():
        dim = name_to_dim.get(str(dim_name).strip())
        if dim is None:
            logger.warning("attributes for unknown dimension %r ignored", dim_name)
            continue
        if not isinstance(block, dict):
            continue
        attrs_by_dim[dim.id] = parse_parallel_attributes(block, dim.name)

    contents = {e.id: e.content for e in members}
    entries_root = data.get("attributes_examples") or {}

    def cells_for(dim: Dimension) -> dict[tuple[str, str], EvidenceCell]:
        raw = entries_root.get(dim.name) or {}
        return _attribute_cells(
            raw if isinstance(raw, dict) else {}, attrs_by_dim.get(dim.id, []), member_ids
        )

    # collect missing cells across all dimensions, allow one corrective re-ask
    all_cells: dict[str, dict[tuple[str, str], EvidenceCell]] = {}
    missing_text_parts = []
    for dim in dimensions:
        attrs = attrs_by_dim.get(dim.id, [])
        if not attrs:
            continue
        cells = cells_for(dim)
        all_cells[dim.id] = cells
        expected = {(r, a.concise) for r in member_ids for a in attrs}
        for r, c in sorted(expected - set(cells)):
            missing_text_parts.append(f"({r}, {dim.name}: {c})")
    if missing_text_parts:
        missing_text = ", ".join(missing_text_parts)
        logger.info("attribute matrices incomplete (%s), re-asking", missing_text)
        retry_prompt = (
            f"{prompt}\n\n"
            f"Your previous reply did not classify these (example, attribute) pairs: "
            f"{missing_text}.\n"
            f"Keep the same dimensions and attributes and reply again with "
            f"attributes_examples covering every example under every attribute."
        )
        data2, _ = gateway.exchange_structured(
            "dimension_attributes", retry_prompt, ("dimensions", "attributes_examples")
        )
        entries_root = data2.get("attributes_examples") or {}
        for dim in dimensions:
            if not attrs_by_dim.get(dim.id):
                continue
            for key, value in cells_for(dim).items():
                all_cells[dim.id].setdefault(key, value)

    attributes: dict[str, tuple[Attribute, ...]] = {}
    matrices: dict[str, EvidenceMatrix] = {}
    reports: dict[str, VerificationReport] = {}
    support: dict[str, SupportReport] = {}
    dropped: list[tuple[str, str, float]] = []
    for dim in dimensions:
        attrs = attrs_by_dim.get(dim.id, [])
        if not attrs:
            logger.warning("dimension %s received no attributes", dim.name)
            continue
        cells = all_cells[dim.id]
        expected = {(r, a.concise) for r in member_ids for a in attrs}
        missing = expected - set(cells)
        if missing:
            raise IncompleteMatrixError([f"{r}/{c}" for r, c in sorted(missing)])
        matrix = EvidenceMatrix(
            row_ids=tuple(member_ids),
            column_ids=tuple(a.concise for a in attrs),
            column_labels=tuple(a.concise for a in attrs),
            cells=cells,
        )
        matrix, report = verify_matrix(matrix, contents, policy=policy, strict=strict)
        support_report = check_support(matrix, threshold=support_threshold)
        keep: list[Attribute] = []
        for attr in attrs:
            stats = support_report.columns[attr.concise]
            if strict and not stats.passes:
                logger.info(
                    "dropping attribute %r under %s: support %.2f below %.2f",
                    attr.concise, dim.name, stats.ratio, support_threshold,
                )
                dropped.append((dim.id, attr.concise, stats.ratio))
                matrix = matrix_without_column(matrix, attr.concise)
            else:
                keep.append(attr)
        attributes[dim.id] = tuple(keep)
        if matrix is not None and keep:
            matrices[dim.id] = matrix
            reports[dim.id] = report
        support[dim.id] = support_report
    return AttributeInference(
        attributes=attributes,
        matrices=matrices,
        reports=reports,
        support=support,
        dropped=tuple(dropped),
    )


# --- overall attributes --------------------------------------------------------------


@dataclass(frozen=True)
class OverallInference:
    attributes: tuple[Attribute, ...]
    matrix: Optional[EvidenceMatrix]
    report: Optional[VerificationReport]
    warnings: tuple[str, ...] = ()


def category_warnings(attributes: tuple[Attribute, ...]) -> tuple[str, ...]:
    """Heuristic check for the two required overall-attribute categories."""
    texts = [f"{a.detailed} {a.concise}".lower() for a in attributes]
    warnings = []
    if not any(any(k in t for k in LENGTH_FORMAT_KEYWORDS) for t in texts):
        warnings.append("no overall attribute mentions length or format")
    if not any(any(k in t for k in ORGANIZATION_KEYWORDS) for t in texts):
        warnings.append("no overall attribute mentions organization")
    return tuple(warnings)


def infer_overall_attributes(
    cluster: Cluster,
    example_set: ExampleSet,
    gateway: Gateway,
    strict: bool = True,
    policy: NormalizationPolicy = DEFAULT_POLICY,
) -> OverallInference:
    """Infer whole-output attributes for the cluster with evidence.

    The category rule (at least one length/format attribute and one
    organization attribute) is checked by keyword heuristic and only
    warns; judging prose categories harder than that belongs to a model,
    not a validator.
    """
    if not cluster.member_ids:
        raise NoExamplesError(f"cluster {cluster.id} has no members")
    members = [example_set.by_id(m) for m in cluster.member_ids]
    member_ids = [e.id for e in members]
    prompt = render_prompt(
        TEMPLATES["overall_attributes"],
        {
            "user_goal": example_set.goal,
            "examples_full_text": format_examples(members),
            "input_context": format_input_context(example_set, members),
            "example_ids_text": format_example_ids(members),
        },
    )
    data, _ = gateway.exchange_structured(
        "overall_attributes", prompt, ("overall_attributes", "overall_attributes_examples")
    )
    block = data.get("overall_attributes") or {}
    attributes = parse_parallel_attributes(
        block if isinstance(block, dict) else {}, OVERALL_SCOPE
    )
    warnings = category_warnings(tuple(attributes))
    for w in warnings:
        logger.warning("%s (cluster %s)", w, cluster.id)
    if not attributes:
        return OverallInference(attributes=(), matrix=None, report=None, warnings=warnings)

    entries_root = data.get("overall_attributes_examples") or {}
    cells = _attribute_cells(
        entries_root if isinstance(entries_root, dict) else {}, attributes, member_ids
    )
    expected = {(r, a.concise) for r in member_ids for a in attributes}
    missing = expected - set(cells)
    if missing:
        missing_text = ", ".join(f"({r}, {c})" for r, c in sorted(missing))
        logger.info("overall attribute matrix incomplete (%s), re-asking", missing_text)
        retry_prompt = (
            f"{prompt}\n\n"
            f"Your previous reply did not classify these (example, attribute) pairs: "
            f"{missing_text}.\n"
            f"Keep the same attributes and reply again with overall_attributes_examples "
            f"covering every example under every attribute."
        )
        data2, _ = gateway.exchange_structured(
            "overall_attributes", retry_prompt,
            ("overall_attributes", "overall_attributes_examples"),
        )
        entries_root = data2.get("overall_attributes_examples") or {}
        for key, value in _attribute_cells(
            entries_root if isinstance(entries_root, dict) else {}, attributes, member_ids
        ).items():
            cells.setdefault(key, value)
        missing = expected - set(cells)
    if missing:
        raise IncompleteMatrixError([f"{r}/{c}" for r, c in sorted(missing)])
    matrix = EvidenceMatrix(
        row_ids=tuple(member_ids),
        column_ids=tuple(a.concise for a in attributes),
        column_labels=tuple(a.concise for a in attributes),
        cells=cells,
    )
    contents = {e.id: e.content for e in members}
    matrix, report = verify_matrix(matrix, contents, policy=policy, strict=strict)
    return OverallInference(
        attributes=tuple(attributes), matrix=matrix, report=report, warnings=warnings
    )


# --- assembly ----------------------------------------------------------------------


def assemble_schema(
    cluster: Cluster,
    dimension_inference: DimensionInference,
    attribute_inference: AttributeInference,
    overall_inference: OverallInference,
) -> Schema:
    """Fix the three inference results as the cluster's revision-0 schema."""
    dimensions = tuple(
        replace(d, attributes=attribute_inference.attributes.get(d.id, ()))
        for d in dimension_inference.dimensions
    )
    return Schema(
        id=f"{cluster.id}-r0",
        cluster_id=cluster.id,
        revision=0,
        parent_id=None,
        dimensions=dimensions,
        overall_attributes=overall_inference.attributes,
        dimension_matrix=dimension_inference.matrix,
        attribute_matrices=dict(attribute_inference.matrices),
        overall_matrix=overall_inference.matrix,
    )


# --- edits ------------------------------------------------------------------------


@dataclass(frozen=True)
class RenameAttribute:
    scope: str  # dimension id or "overall"
    old_concise: str
    new_concise: str
    new_detailed: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "kind": "RenameAttribute",
            "scope": self.scope,
            "old_concise": self.old_concise,
            "new_concise": self.new_concise,
            "new_detailed": self.new_detailed,
        }


@dataclass(frozen=True)
class AddAttribute:
    scope: str
    detailed: str
    concise: str

    def to_dict(self) -> dict:
        return {
            "kind": "AddAttribute",
            "scope": self.scope,
            "detailed": self.detailed,
            "concise": self.concise,
        }


@dataclass(frozen=True)
class RemoveAttribute:
    scope: str
    concise: str

    def to_dict(self) -> dict:
        return {"kind": "RemoveAttribute", "scope": self.scope, "concise": self.concise}


@dataclass(frozen=True)
class RenameDimension:
    dimension_id: str
    name: str

    def to_dict(self) -> dict:
        return {"kind": "RenameDimension", "dimension_id": self.dimension_id, "name": self.name}


@dataclass(frozen=True)
class RemoveDimension:
    dimension_id: str

    def to_dict(self) -> dict:
        return {"kind": "RemoveDimension", "dimension_id": self.dimension_id}


SchemaEdit = RenameAttribute | AddAttribute | RemoveAttribute | RenameDimension | RemoveDimension


def schema_edit_from_dict(d: dict) -> SchemaEdit:
    kind = d.get("kind")
    if kind == "RenameAttribute":
        return RenameAttribute(
            d["scope"], d["old_concise"], d["new_concise"], d.get("new_detailed")
        )
    if kind == "AddAttribute":
        return AddAttribute(d["scope"], d["detailed"], d["concise"])
    if kind == "RemoveAttribute":
        return RemoveAttribute(d["scope"], d["concise"])
    if kind == "RenameDimension":
        return RenameDimension(d["dimension_id"], d["name"])
    if kind == "RemoveDimension":
        return RemoveDimension(d["dimension_id"])
    raise ValueError(f"unknown edit kind {kind!r}")


def apply_schema_edit(schema: Schema, edit: SchemaEdit) -> Schema:
    """Apply one edit to the working copy, preserving its revision.

    Renames re-key matrix columns so evidence survives; removals drop
    their columns; AddAttribute installs an Unchecked placeholder column
    until evidence is rebuilt.
    """
    dimensions = list(schema.dimensions)
    overall = list(schema.overall_attributes)
    dimension_matrix = schema.dimension_matrix
    attribute_matrices = dict(schema.attribute_matrices)
    overall_matrix = schema.overall_matrix

    def dim_index(dimension_id: str) -> int:
        for k, d in enumerate(dimensions):
            if d.id == dimension_id:
                return k
        raise UnknownTargetError(f"no dimension {dimension_id!r}")

    def scope_attributes(scope: str) -> tuple[Attribute, ...]:
        if scope == OVERALL_SCOPE:
            return tuple(overall)
        return dimensions[dim_index(scope)].attributes

    def scope_matrix(scope: str) -> Optional[EvidenceMatrix]:
        return overall_matrix if scope == OVERALL_SCOPE else attribute_matrices.get(scope)

    def set_scope(scope: str, attrs: tuple[Attribute, ...], matrix: Optional[EvidenceMatrix]):
        nonlocal overall, overall_matrix
        if scope == OVERALL_SCOPE:
            overall = list(attrs)
            overall_matrix = matrix
        else:
            k = dim_index(scope)
            dimensions[k] = replace(dimensions[k], attributes=attrs)
            if matrix is None:
                attribute_matrices.pop(scope, None)
            else:
                attribute_matrices[scope] = matrix

    if isinstance(edit, RenameAttribute):
        attrs = scope_attributes(edit.scope)
        target = next((a for a in attrs if a.concise == edit.old_concise), None)
        if target is None:
            raise UnknownTargetError(f"no attribute {edit.old_concise!r} in {edit.scope}")
        if edit.new_concise != edit.old_concise and any(
            a.concise == edit.new_concise for a in attrs
        ):
            raise DuplicateConciseError(f"{edit.new_concise!r} already in {edit.scope}")
        replacement = Attribute(
            detailed=edit.new_detailed if edit.new_detailed is not None else target.detailed,
            concise=edit.new_concise,
        )
        new_attrs = tuple(replacement if a is target else a for a in attrs)
        matrix = scope_matrix(edit.scope)
        if matrix is not None and edit.old_concise in matrix.column_ids:
            matrix = matrix_with_column_renamed(
                matrix, edit.old_concise, edit.new_concise, new_label=edit.new_concise
            )
        set_scope(edit.scope, new_attrs, matrix)
    elif isinstance(edit, AddAttribute):
        attrs = scope_attributes(edit.scope)
        if any(a.concise == edit.concise for a in attrs):
            raise DuplicateConciseError(f"{edit.concise!r} already in {edit.scope}")
        new_attrs = attrs + (Attribute(detailed=edit.detailed, concise=edit.concise),)
        matrix = scope_matrix(edit.scope)
        if matrix is not None:
            matrix = matrix_with_placeholder_column(matrix, edit.concise, edit.concise)
        elif dimension_matrix is not None:
            matrix = placeholder_matrix(dimension_matrix.row_ids, edit.concise, edit.concise)
        set_scope(edit.scope, new_attrs, matrix)
    elif isinstance(edit, RemoveAttribute):
        attrs = scope_attributes(edit.scope)
        target = next((a for a in attrs if a.concise == edit.concise), None)
        if target is None:
            raise UnknownTargetError(f"no attribute {edit.concise!r} in {edit.scope}")
        new_attrs = tuple(a for a in attrs if a is not target)
        matrix = scope_matrix(edit.scope)
        if matrix is not None and edit.concise in matrix.column_ids:
            matrix = matrix_without_column(matrix, edit.concise)
        set_scope(edit.scope, new_attrs, matrix)
    elif isinstance(edit, RenameDimension):
        k = dim_index(edit.dimension_id)
        if any(d.name == edit.name and d.id != edit.dimension_id for d in dimensions):
            raise DuplicateConciseError(f"dimension name {edit.name!r} already used")
        dimensions[k] = replace(dimensions[k], name=edit.name)
        if dimension_matrix is not None and edit.dimension_id in dimension_matrix.column_ids:
            dimension_matrix = matrix_with_column_renamed(
                dimension_matrix, edit.dimension_id, edit.dimension_id, new_label=edit.name
            )
    elif isinstance(edit, RemoveDimension):
        k = dim_index(edit.dimension_id)
        del dimensions[k]
        attribute_matrices.pop(edit.dimension_id, None)
        if dimension_matrix is not None and edit.dimension_id in dimension_matrix.column_ids:
            dimension_matrix = matrix_without_column(dimension_matrix, edit.dimension_id)
    else:
        raise ValueError(f"unknown edit type {type(edit).__name__}")

    return Schema(
        id=schema.id,
        cluster_id=schema.cluster_id,
        revision=schema.revision,
        parent_id=schema.parent_id,
        dimensions=tuple(dimensions),
        overall_attributes=tuple(overall),
        dimension_matrix=dimension_matrix,
        attribute_matrices=attribute_matrices,
        overall_matrix=overall_matrix,
    )
