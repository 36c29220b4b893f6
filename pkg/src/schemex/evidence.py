"""Machine-side verification of model claims.

Every claim the pipeline accepts is checked here: snippets must be found
verbatim (under a tolerant normalization) in the example they cite,
clusterings must partition the example set, evidence columns must clear a
support threshold, and segment maps must tile their texts exactly.
Normalization tracks an offset map so matches are reported as spans into
the original, unnormalized text.
"""

from __future__ import annotations

import logging
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .errors import EmptySnippetError, UnknownRowIdError
from .model import (
    Clustering,
    EvidenceCell,
    EvidenceMatrix,
    Judgment,
    SegmentMap,
    Verification,
)

logger = logging.getLogger(__name__)

SUPPORT_THRESHOLD = 0.5

_QUOTE_MAP = {
    "‘": "'",
    "’": "'",
    "“": '"',
    "”": '"',
}


@dataclass(frozen=True)
class NormalizationPolicy:
    """What differences between snippet and source are forgiven.

    Defaults: unicode composition (NFC), whitespace runs collapse to one
    space, curly quotes straighten. Case is preserved unless fold_case is
    set.
    """

    nfc: bool = True
    collapse_whitespace: bool = True
    straighten_quotes: bool = True
    fold_case: bool = False

    def to_dict(self) -> dict:
        return {
            "nfc": self.nfc,
            "collapse_whitespace": self.collapse_whitespace,
            "straighten_quotes": self.straighten_quotes,
            "fold_case": self.fold_case,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationPolicy":
        return cls(
            nfc=d.get("nfc", True),
            collapse_whitespace=d.get("collapse_whitespace", True),
            straighten_quotes=d.get("straighten_quotes", True),
            fold_case=d.get("fold_case", False),
        )


DEFAULT_POLICY = NormalizationPolicy()


def _normalize_with_map(
    text: str, policy: NormalizationPolicy
) -> tuple[str, list[int], list[int]]:
    """Normalize text, keeping per-character spans into the original.

    Returns (normalized, starts, ends) where normalized[k] came from
    text[starts[k]:ends[k]]. Combining marks are normalized together with
    their base character, so both halves of a composed/decomposed pair map
    to the same original span.
    """
    chars: list[str] = []
    starts: list[int] = []
    ends: list[int] = []
    i = 0
    n = len(text)
    while i < n:
        j = i + 1
        while j < n and unicodedata.combining(text[j]):
            j += 1
        cluster = text[i:j]
        if policy.nfc:
            cluster = unicodedata.normalize("NFC", cluster)
        for ch in cluster:
            if policy.straighten_quotes:
                ch = _QUOTE_MAP.get(ch, ch)
            if policy.fold_case:
                ch = ch.lower()
            for out in ch:
                chars.append(out)
                starts.append(i)
                ends.append(j)
        i = j

    if not policy.collapse_whitespace:
        return "".join(chars), starts, ends

    out_chars: list[str] = []
    out_starts: list[int] = []
    out_ends: list[int] = []
    k = 0
    while k < len(chars):
        if chars[k].isspace():
            run_start = starts[k]
            while k < len(chars) and chars[k].isspace():
                run_end = ends[k]
                k += 1
            out_chars.append(" ")
            out_starts.append(run_start)
            out_ends.append(run_end)
        else:
            out_chars.append(chars[k])
            out_starts.append(starts[k])
            out_ends.append(ends[k])
            k += 1
    return "".join(out_chars), out_starts, out_ends


def normalize(text: str, policy: NormalizationPolicy = DEFAULT_POLICY) -> str:
    """Normalized form of a text: what snippet matching compares."""
    normalized, _, _ = _normalize_with_map(text, policy)
    return normalized.strip() if policy.collapse_whitespace else normalized


def find_verbatim(
    snippet: str, text: str, policy: NormalizationPolicy = DEFAULT_POLICY
) -> Optional[tuple[int, int]]:
    """Locate a snippet in a text up to the normalization policy.

    Returns the leftmost half-open span (start, end) into the ORIGINAL
    text whose slice normalizes to the normalized snippet, or None when
    the snippet does not occur. Snippets that normalize to nothing are an
    error, not a miss.
    """
    norm_snippet = normalize(snippet, policy)
    if not norm_snippet:
        raise EmptySnippetError("snippet is empty after normalization")
    norm_text, starts, ends = _normalize_with_map(text, policy)
    idx = norm_text.find(norm_snippet)
    if idx == -1:
        return None
    return (starts[idx], ends[idx + len(norm_snippet) - 1])


# --- matrix verification --------------------------------------------------------


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of verifying one evidence matrix against its examples."""

    verified: int
    unverifiable: int
    unchecked: int
    downgraded: tuple[tuple[str, str], ...]

    def to_dict(self) -> dict:
        return {
            "verified": self.verified,
            "unverifiable": self.unverifiable,
            "unchecked": self.unchecked,
            "downgraded": [list(t) for t in self.downgraded],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        return cls(
            verified=d["verified"],
            unverifiable=d["unverifiable"],
            unchecked=d["unchecked"],
            downgraded=tuple((t[0], t[1]) for t in d["downgraded"]),
        )


def verify_matrix(
    matrix: EvidenceMatrix,
    contents: dict[str, str],
    policy: NormalizationPolicy = DEFAULT_POLICY,
    strict: bool = True,
) -> tuple[EvidenceMatrix, VerificationReport]:
    """Check every snippet in a matrix against the example it cites.

    Cells claiming Yes or Partial must carry a snippet found verbatim
    (under the policy) in their row's content; those become verified with
    a span. Claims whose snippet is missing or unlocatable become
    unverifiable, and in strict mode an unverifiable Yes is downgraded to
    Partial (the judgment is weakened, never invented). No-cells and
    placeholder cells carry no claim and stay unchecked.
    """
    for row_id in matrix.row_ids:
        if row_id not in contents:
            raise UnknownRowIdError(f"no content for matrix row {row_id!r}")
    updates: dict[tuple[str, str], EvidenceCell] = {}
    verified = unverifiable = unchecked = 0
    downgraded: list[tuple[str, str]] = []
    for row_id in matrix.row_ids:
        for col_id in matrix.column_ids:
            cell = matrix.cell(row_id, col_id)
            if cell.judgment is None or cell.judgment is Judgment.NO:
                unchecked += 1
                continue
            span = None
            if cell.snippet is not None:
                try:
                    span = find_verbatim(cell.snippet, contents[row_id], policy)
                except EmptySnippetError:
                    span = None
            if span is not None:
                updates[(row_id, col_id)] = EvidenceCell(
                    judgment=cell.judgment,
                    snippet=cell.snippet,
                    explanation=cell.explanation,
                    verification=Verification.VERIFIED,
                    verified_span=span,
                )
                verified += 1
                continue
            judgment = cell.judgment
            if strict and judgment is Judgment.YES:
                judgment = Judgment.PARTIAL
                downgraded.append((row_id, col_id))
                logger.info(
                    "downgraded %s/%s: Yes claim with unverifiable snippet", row_id, col_id
                )
            updates[(row_id, col_id)] = EvidenceCell(
                judgment=judgment,
                snippet=cell.snippet,
                explanation=cell.explanation,
                verification=Verification.UNVERIFIABLE,
                verified_span=None,
            )
            unverifiable += 1
    report = VerificationReport(
        verified=verified,
        unverifiable=unverifiable,
        unchecked=unchecked,
        downgraded=tuple(downgraded),
    )
    return matrix.with_cells(updates), report


# --- partition check -------------------------------------------------------------


@dataclass(frozen=True)
class PartitionReport:
    """Which example ids break the exactly-once rule across clusters."""

    omitted: tuple[str, ...]
    duplicated: tuple[str, ...]
    unknown: tuple[str, ...]

    def ok(self) -> bool:
        return not (self.omitted or self.duplicated or self.unknown)

    def describe(self) -> str:
        parts = []
        if self.omitted:
            parts.append(f"omitted: {', '.join(self.omitted)}")
        if self.duplicated:
            parts.append(f"duplicated: {', '.join(self.duplicated)}")
        if self.unknown:
            parts.append(f"unknown: {', '.join(self.unknown)}")
        return "; ".join(parts) if parts else "valid partition"

    def to_dict(self) -> dict:
        return {
            "omitted": list(self.omitted),
            "duplicated": list(self.duplicated),
            "unknown": list(self.unknown),
        }


def check_partition(
    clustering: Clustering, example_ids: Optional[Iterable[str]] = None
) -> PartitionReport:
    """Check that the clusters cover each example id exactly once.

    Reports omissions (id never placed), duplications (placed twice,
    within or across clusters), and unknowns (placed ids that are not in
    the example set). When example_ids is omitted, the clustering's own
    coverage list is checked.
    """
    expected = list(example_ids if example_ids is not None else clustering.over)
    expected_set = set(expected)
    counts: dict[str, int] = {}
    for cluster in clustering.clusters:
        for member in cluster.member_ids:
            counts[member] = counts.get(member, 0) + 1
    omitted = [i for i in expected if counts.get(i, 0) == 0]
    duplicated = sorted(
        (i for i, c in counts.items() if c > 1 and i in expected_set),
        key=_numeric_id_key,
    )
    unknown = sorted((i for i in counts if i not in expected_set), key=_numeric_id_key)
    return PartitionReport(
        omitted=tuple(omitted), duplicated=tuple(duplicated), unknown=tuple(unknown)
    )


def _numeric_id_key(engine_id: str):
    prefix = engine_id.rstrip("0123456789")
    suffix = engine_id[len(prefix):]
    return (prefix, int(suffix)) if suffix.isdigit() else (engine_id, -1)


# --- support check ---------------------------------------------------------------


@dataclass(frozen=True)
class ColumnSupport:
    yes: int
    partial: int
    no: int
    unchecked: int
    ratio: float
    passes: bool

    def to_dict(self) -> dict:
        return {
            "yes": self.yes,
            "partial": self.partial,
            "no": self.no,
            "unchecked": self.unchecked,
            "ratio": self.ratio,
            "passes": self.passes,
        }


@dataclass(frozen=True)
class SupportReport:
    """Per-column support tallies for one matrix."""

    columns: dict[str, ColumnSupport] = field(default_factory=dict)

    def failing_columns(self) -> tuple[str, ...]:
        return tuple(c for c, s in self.columns.items() if not s.passes)

    def to_dict(self) -> dict:
        return {c: s.to_dict() for c, s in self.columns.items()}


def check_support(
    matrix: EvidenceMatrix, threshold: float = SUPPORT_THRESHOLD
) -> SupportReport:
    """Tally judgments per column and test the support rule.

    A column passes when (#Yes + #Partial) / #rows >= threshold.
    Placeholder cells count toward the row total but support nothing.
    """
    columns: dict[str, ColumnSupport] = {}
    n_rows = len(matrix.row_ids)
    for col in matrix.column_ids:
        yes = partial = no = unchecked = 0
        for cell in matrix.column_cells(col):
            if cell.judgment is Judgment.YES:
                yes += 1
            elif cell.judgment is Judgment.PARTIAL:
                partial += 1
            elif cell.judgment is Judgment.NO:
                no += 1
            else:
                unchecked += 1
        ratio = (yes + partial) / n_rows if n_rows else 0.0
        columns[col] = ColumnSupport(
            yes=yes,
            partial=partial,
            no=no,
            unchecked=unchecked,
            ratio=ratio,
            passes=ratio >= threshold,
        )
    return SupportReport(columns=columns)


# --- segment map check -------------------------------------------------------------


class SegmentViolationKind(Enum):
    GAP = "Gap"
    OVERLAP = "Overlap"
    SLICE_MISMATCH = "SliceMismatch"
    INDEX_OUT_OF_RANGE = "IndexOutOfRange"
    UNKNOWN_DIMENSION = "UnknownDimension"


@dataclass(frozen=True)
class SegmentViolation:
    kind: SegmentViolationKind
    source: str  # "generated" or "gold"
    detail: str
    segment_id: Optional[str] = None
    span: Optional[tuple[int, int]] = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "source": self.source,
            "detail": self.detail,
            "segment_id": self.segment_id,
            "span": list(self.span) if self.span else None,
        }


@dataclass(frozen=True)
class SegmentMapReport:
    violations: tuple[SegmentViolation, ...]

    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"violations": [v.to_dict() for v in self.violations]}


def check_segment_map(
    segment_map: SegmentMap,
    generated_text: str,
    gold_text: str,
    dimension_names: Iterable[str],
) -> SegmentMapReport:
    """Check that both segment lists tile their texts exactly.

    Each side must cover every character exactly once (no gaps, no
    overlaps), every segment's text must equal its slice, indices must be
    in range, and any non-null dimension tag must name a known dimension.
    """
    allowed = set(dimension_names)
    violations: list[SegmentViolation] = []
    for source, segments, text in (
        ("generated", segment_map.generated_segments, generated_text),
        ("gold", segment_map.gold_segments, gold_text),
    ):
        occupancy = [0] * len(text)
        for seg in segments:
            if seg.start < 0 or seg.end > len(text) or seg.start > seg.end:
                violations.append(
                    SegmentViolation(
                        kind=SegmentViolationKind.INDEX_OUT_OF_RANGE,
                        source=source,
                        detail=f"[{seg.start}, {seg.end}) outside text of length {len(text)}",
                        segment_id=seg.id,
                        span=(seg.start, seg.end),
                    )
                )
                continue
            if text[seg.start:seg.end] != seg.text:
                violations.append(
                    SegmentViolation(
                        kind=SegmentViolationKind.SLICE_MISMATCH,
                        source=source,
                        detail="segment text does not equal its slice",
                        segment_id=seg.id,
                        span=(seg.start, seg.end),
                    )
                )
            for k in range(seg.start, seg.end):
                occupancy[k] += 1
            if seg.dimension is not None and seg.dimension not in allowed:
                violations.append(
                    SegmentViolation(
                        kind=SegmentViolationKind.UNKNOWN_DIMENSION,
                        source=source,
                        detail=f"dimension {seg.dimension!r} is not in the schema",
                        segment_id=seg.id,
                        span=(seg.start, seg.end),
                    )
                )
        for kind, predicate in (
            (SegmentViolationKind.GAP, lambda c: c == 0),
            (SegmentViolationKind.OVERLAP, lambda c: c > 1),
        ):
            k = 0
            while k < len(occupancy):
                if predicate(occupancy[k]):
                    run_start = k
                    while k < len(occupancy) and predicate(occupancy[k]):
                        k += 1
                    violations.append(
                        SegmentViolation(
                            kind=kind,
                            source=source,
                            detail=f"characters [{run_start}, {k}) covered "
                            f"{'zero times' if kind is SegmentViolationKind.GAP else 'more than once'}",
                            span=(run_start, k),
                        )
                    )
                else:
                    k += 1
    return SegmentMapReport(violations=tuple(violations))


_SENTENCE_BREAK = re.compile(r"[.!?\n]+[ \t]*")


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Split a text into sentence-ish spans that tile it exactly.

    Breaks after runs of terminal punctuation or newlines plus trailing
    inline whitespace. Every character lands in exactly one span, so maps
    built from these spans always pass check_segment_map.
    """
    spans: list[tuple[int, int]] = []
    start = 0
    for m in _SENTENCE_BREAK.finditer(text):
        if m.end() > start:
            spans.append((start, m.end()))
            start = m.end()
    if start < len(text):
        spans.append((start, len(text)))
    return spans
