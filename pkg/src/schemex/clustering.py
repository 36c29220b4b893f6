"""Stage 1: propose clusters, parse the prose reply, build feature matrices.

The clustering reply is line-oriented prose, not JSON; parse_cluster_prose
is the normative reader for it. A proposed clustering must partition the
working examples exactly once; on violation the model gets one corrective
re-ask with the violation list, then the run fails. Feature matrices are
completed cell-by-cell and verified against example contents before a
clustering is committed.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, replace

from .errors import (
    IncompleteMatrixError,
    NoExamplesError,
    NoOpEditError,
    ParseFailedError,
    PartitionViolationError,
    UnknownClusterError,
    UnknownExampleError,
)
from .evidence import NormalizationPolicy, DEFAULT_POLICY, check_partition, verify_matrix
from .formatting import (
    format_examples,
    format_input_context,
    normalize_example_id,
    parse_judgment,
)
from .gateway import Gateway
from .model import Cluster, Clustering, EvidenceCell, EvidenceMatrix, ExampleSet, Judgment
from .prompts import TEMPLATES, render_prompt

logger = logging.getLogger(__name__)


# --- prose parsing -------------------------------------------------------------

_CLUSTER_HEADER = re.compile(r"^Cluster\s+\d+\s*:\s*(.+?)\s*$", re.IGNORECASE)
_TOTAL_LINE = re.compile(r"^Total number of examples\s*:\s*(\d+)", re.IGNORECASE)


@dataclass(frozen=True)
class ParsedCluster:
    name: str
    features: tuple[str, ...]
    members: tuple[str, ...]
    declared_total: int | None


def _strip_brackets(text: str) -> str:
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        return text[1:-1].strip()
    return text


def parse_cluster_prose(text: str) -> list[ParsedCluster]:
    """Parse the line-oriented clustering reply.

    Sections open with "Cluster <k>: <name>"; "- " lines under "Common
    Features:" are features and under "Examples:" are member references;
    "Total number of examples: <N>" closes a section and is cross-checked
    against the member count (mismatch warns, it does not fail). Unknown
    lines are ignored with a warning.
    """
    clusters: list[ParsedCluster] = []
    name = None
    features: list[str] = []
    members: list[str] = []
    declared: int | None = None
    mode = ""

    def flush():
        nonlocal name, features, members, declared, mode
        if name is not None:
            clusters.append(
                ParsedCluster(
                    name=name,
                    features=tuple(features),
                    members=tuple(members),
                    declared_total=declared,
                )
            )
        name, features, members, declared, mode = None, [], [], None, ""

    for raw_line in text.splitlines():
        line = raw_line.strip()
        if not line:
            continue
        header = _CLUSTER_HEADER.match(line)
        if header:
            flush()
            name = _strip_brackets(header.group(1))
            continue
        if name is None:
            continue  # preamble before the first cluster
        if re.match(r"^Common Features\s*:?\s*$", line, re.IGNORECASE):
            mode = "features"
            continue
        if re.match(r"^Examples\s*:?\s*$", line, re.IGNORECASE):
            mode = "members"
            continue
        total = _TOTAL_LINE.match(line)
        if total:
            declared = int(total.group(1))
            continue
        if line.startswith("- ") or line.startswith("* "):
            item = _strip_brackets(line[2:])
            if mode == "features":
                features.append(item)
                continue
            if mode == "members":
                members.append(item)
                continue
        logger.warning("clustering reply: ignoring line %r", raw_line)
    flush()

    if not clusters:
        raise ParseFailedError("no cluster sections found", raw=text)
    for c in clusters:
        if c.declared_total is not None and c.declared_total != len(c.members):
            logger.warning(
                "cluster %r declares %d examples but lists %d",
                c.name, c.declared_total, len(c.members),
            )
    return clusters


def format_clustering_prose(clustering: Clustering) -> str:
    """Serialize a clustering back to the prose reply shape."""
    sections = []
    for k, cluster in enumerate(clustering.clusters, start=1):
        lines = [f"Cluster {k}: {cluster.name}", "Common Features:"]
        lines.extend(f"- {f}" for f in cluster.common_features)
        lines.append("Examples:")
        lines.extend(f"- Example {m}" for m in cluster.member_ids)
        lines.append(f"Total number of examples: {len(cluster.member_ids)}")
        sections.append("\n".join(lines))
    return "\n\n".join(sections)


def _assemble(parsed: list[ParsedCluster], known_ids: list[str]) -> Clustering:
    clusters = []
    for p in parsed:
        members = []
        for token in p.members:
            resolved = normalize_example_id(token, known_ids)
            # unknown references are kept verbatim so check_partition reports them
            members.append(resolved if resolved is not None else token)
        if not members:
            logger.warning("dropping empty cluster %r", p.name)
            continue
        clusters.append(
            Cluster(
                id=f"c{len(clusters) + 1}",
                name=p.name,
                common_features=p.features,
                member_ids=tuple(members),
            )
        )
    return Clustering(clusters=tuple(clusters), over=tuple(known_ids))


def propose_clusters(example_set: ExampleSet, gateway: Gateway) -> Clustering:
    """Run the clustering call and enforce the partition rule.

    One corrective re-ask is allowed: the violation list and the prior
    reply are appended to the prompt. A second violation fails the run.
    """
    working = example_set.working_examples()
    if not working:
        raise NoExamplesError("no non-holdout examples to cluster")
    ids = [e.id for e in working]
    prompt = render_prompt(
        TEMPLATES["cluster_examples"],
        {
            "content_type": example_set.content_type,
            "examples": format_examples(working),
            "input_context": format_input_context(example_set, working),
        },
    )
    text, _ = gateway.exchange_text("cluster_examples", prompt)
    clustering = _assemble(parse_cluster_prose(text), ids)
    report = check_partition(clustering, ids)
    if report.ok():
        return clustering
    logger.info("clustering violated the partition (%s), re-asking", report.describe())
    retry_prompt = (
        f"{prompt}\n\n"
        f"Your previous clustering broke the clustering rules ({report.describe()}).\n"
        f"Previous reply:\n{text}\n\n"
        f"Reply again in the same format, assigning every example to exactly one cluster."
    )
    text, _ = gateway.exchange_text("cluster_examples", retry_prompt)
    clustering = _assemble(parse_cluster_prose(text), ids)
    report = check_partition(clustering, ids)
    if not report.ok():
        raise PartitionViolationError([report.describe()])
    return clustering


# --- feature matrix ---------------------------------------------------------------


def _feature_columns(cluster: Cluster) -> tuple[tuple[str, ...], tuple[str, ...]]:
    ids = tuple(f"F{k + 1}" for k in range(len(cluster.common_features)))
    return ids, cluster.common_features


def _parse_mapping(
    data: dict, cluster: Cluster, member_ids: list[str]
) -> dict[tuple[str, str], EvidenceCell]:
    col_ids, labels = _feature_columns(cluster)
    label_to_col = {label: cid for cid, label in zip(col_ids, labels)}
    cells: dict[tuple[str, str], EvidenceCell] = {}
    for entry in data.get("mapping", []):
        if not isinstance(entry, dict):
            continue
        row = normalize_example_id(str(entry.get("example_index", "")), member_ids)
        if row is None:
            logger.warning("feature matrix names unknown example %r", entry.get("example_index"))
            continue
        for fm in entry.get("feature_mapping", []):
            if not isinstance(fm, dict):
                continue
            col = str(fm.get("feature_id", "")).strip()
            if col not in col_ids:
                col = label_to_col.get(str(fm.get("feature", "")).strip(), "")
            if col not in col_ids:
                logger.warning("feature matrix names unknown feature %r", fm.get("feature_id"))
                continue
            judgment = parse_judgment(fm.get("applies"))
            if judgment is None:
                continue
            snippet = str(fm.get("snippet") or "").strip() or None
            if judgment is Judgment.NO:
                snippet = None
            cells[(row, col)] = EvidenceCell(
                judgment=judgment,
                snippet=snippet,
                explanation=str(fm.get("explanation") or ""),
            )
    return cells


def build_feature_matrix(
    cluster: Cluster,
    example_set: ExampleSet,
    gateway: Gateway,
    strict: bool = True,
    policy: NormalizationPolicy = DEFAULT_POLICY,
):
    """Judge every (member, feature) pair and verify the snippets.

    The reply must cover the full grid; missing cells get one corrective
    re-ask listing them, and anything still missing fails. Returns the
    verified matrix and its verification report.
    """
    if not cluster.common_features:
        raise ParseFailedError(f"cluster {cluster.id} has no features to judge")
    members = [example_set.by_id(m) for m in cluster.member_ids]
    member_ids = [e.id for e in members]
    col_ids, labels = _feature_columns(cluster)
    features_text = "\n".join(f"{cid}: {label}" for cid, label in zip(col_ids, labels))
    prompt = render_prompt(
        TEMPLATES["feature_matrix"],
        {
            "content_type": example_set.content_type,
            "cluster_name": cluster.name,
            "common_features": features_text,
            "examples": format_examples(members),
        },
    )
    data, _ = gateway.exchange_structured("feature_matrix", prompt, ("mapping",))
    cells = _parse_mapping(data, cluster, member_ids)
    expected = {(r, c) for r in member_ids for c in col_ids}
    missing = expected - set(cells)
    if missing:
        missing_text = ", ".join(f"({r}, {c})" for r, c in sorted(missing))
        logger.info("feature matrix incomplete (%s), re-asking", missing_text)
        retry_prompt = (
            f"{prompt}\n\n"
            f"Your previous reply did not judge these (example, feature) pairs: "
            f"{missing_text}.\n"
            f"Reply again with the complete mapping for every example and every feature."
        )
        data, _ = gateway.exchange_structured("feature_matrix", retry_prompt, ("mapping",))
        for key, value in _parse_mapping(data, cluster, member_ids).items():
            cells.setdefault(key, value)
        missing = expected - set(cells)
    if missing:
        raise IncompleteMatrixError([f"{r}/{c}" for r, c in sorted(missing)])
    matrix = EvidenceMatrix(
        row_ids=tuple(member_ids),
        column_ids=col_ids,
        column_labels=labels,
        cells=cells,
    )
    contents = {e.id: e.content for e in members}
    return verify_matrix(matrix, contents, policy=policy, strict=strict)


def build_all_feature_matrices(
    clustering: Clustering,
    example_set: ExampleSet,
    gateway: Gateway,
    strict: bool = True,
) -> Clustering:
    """Build and attach a verified feature matrix to every cluster."""
    clusters = []
    for cluster in clustering.clusters:
        matrix, report = build_feature_matrix(cluster, example_set, gateway, strict=strict)
        clusters.append(replace(cluster, feature_matrix=matrix))
        logger.info(
            "cluster %s matrix: %d verified, %d unverifiable",
            cluster.id, report.verified, report.unverifiable,
        )
    return Clustering(clusters=tuple(clusters), over=clustering.over)


# --- edits ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MoveExample:
    example_id: str
    from_cluster: str
    to_cluster: str

    def to_dict(self) -> dict:
        return {
            "kind": "MoveExample",
            "example_id": self.example_id,
            "from_cluster": self.from_cluster,
            "to_cluster": self.to_cluster,
        }


@dataclass(frozen=True)
class RenameCluster:
    cluster_id: str
    name: str

    def to_dict(self) -> dict:
        return {"kind": "RenameCluster", "cluster_id": self.cluster_id, "name": self.name}


@dataclass(frozen=True)
class MergeClusters:
    first: str
    second: str
    name: str

    def to_dict(self) -> dict:
        return {
            "kind": "MergeClusters",
            "first": self.first,
            "second": self.second,
            "name": self.name,
        }


ClusterEdit = MoveExample | RenameCluster | MergeClusters


def edit_from_dict(d: dict) -> ClusterEdit:
    kind = d.get("kind")
    if kind == "MoveExample":
        return MoveExample(d["example_id"], d["from_cluster"], d["to_cluster"])
    if kind == "RenameCluster":
        return RenameCluster(d["cluster_id"], d["name"])
    if kind == "MergeClusters":
        return MergeClusters(d["first"], d["second"], d["name"])
    raise ValueError(f"unknown edit kind {kind!r}")


def apply_cluster_edit(clustering: Clustering, edit: ClusterEdit) -> Clustering:
    """Apply one edit, returning a new Clustering.

    Edits never break the partition. Feature matrices of touched clusters
    are dropped rather than kept stale; they must be rebuilt.
    """
    by_id = {c.id: c for c in clustering.clusters}

    def require(cluster_id: str) -> Cluster:
        if cluster_id not in by_id:
            raise UnknownClusterError(f"no cluster {cluster_id!r}")
        return by_id[cluster_id]

    if isinstance(edit, MoveExample):
        source = require(edit.from_cluster)
        target = require(edit.to_cluster)
        if edit.from_cluster == edit.to_cluster:
            raise NoOpEditError("move target equals source")
        if edit.example_id not in source.member_ids:
            raise UnknownExampleError(
                f"{edit.example_id} is not in cluster {edit.from_cluster}"
            )
        new_source = Cluster(
            id=source.id,
            name=source.name,
            common_features=source.common_features,
            member_ids=tuple(m for m in source.member_ids if m != edit.example_id),
        )
        new_target = Cluster(
            id=target.id,
            name=target.name,
            common_features=target.common_features,
            member_ids=target.member_ids + (edit.example_id,),
        )
        clusters = []
        for c in clustering.clusters:
            if c.id == new_source.id:
                if new_source.member_ids:
                    clusters.append(new_source)
                # an emptied cluster disappears
            elif c.id == new_target.id:
                clusters.append(new_target)
            else:
                clusters.append(c)
    elif isinstance(edit, RenameCluster):
        cluster = require(edit.cluster_id)
        if cluster.name == edit.name:
            raise NoOpEditError("rename to the same name")
        clusters = [
            Cluster(c.id, edit.name, c.common_features, c.member_ids)
            if c.id == edit.cluster_id
            else c
            for c in clustering.clusters
        ]
    elif isinstance(edit, MergeClusters):
        first = require(edit.first)
        second = require(edit.second)
        if edit.first == edit.second:
            raise NoOpEditError("cannot merge a cluster with itself")
        features = list(first.common_features)
        for f in second.common_features:
            if f not in features:
                features.append(f)
        merged = Cluster(
            id=first.id,
            name=edit.name,
            common_features=tuple(features),
            member_ids=first.member_ids + second.member_ids,
        )
        clusters = [
            merged if c.id == first.id else c
            for c in clustering.clusters
            if c.id != second.id
        ]
    else:
        raise ValueError(f"unknown edit type {type(edit).__name__}")

    return Clustering(clusters=tuple(clusters), over=clustering.over)
