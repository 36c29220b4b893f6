"""Event-sourced sessions: append-only log, node graph, resumable pipeline.

One directory per session holds events.jsonl (the append-only source of
truth, each event hash-chained to its predecessor) and state.json (a
snapshot written after every commit for inspection and fast external
reads). Loading a session always replays the full event log, so on-disk
state can never drift from what replay produces.

Pipeline stages are nodes keyed like "cluster", "dimensions:c1", or
"apply:c1-r0". A run appends a started event and then exactly one
terminal event (a commit or a failure). A node found still running at
load time was interrupted by a crash; loading records that as a failure.
Edits are stored as the edit itself, not its result: replay re-applies
them through the owning module, which keeps replayed state honest.
"""

from __future__ import annotations

import hashlib
import json
import logging
import uuid
from dataclasses import replace
from enum import Enum
from pathlib import Path
from typing import Optional

from .abstraction import (
    AttributeInference,
    DimensionInference,
    apply_schema_edit,
    assemble_schema,
    infer_dimension_attributes,
    infer_dimensions,
    infer_overall_attributes,
    schema_edit_from_dict,
)
from .clustering import (
    apply_cluster_edit,
    build_feature_matrix,
    edit_from_dict as cluster_edit_from_dict,
    propose_clusters,
)
from .errors import (
    AlreadyRunningError,
    DependencyNotMetError,
    DuplicateIdError,
    EventLogCorruptError,
    MissingArtifactError,
    UnknownTargetError,
    ValidationError,
)
from .evidence import VerificationReport
from .gateway import Gateway
from .model import (
    Attribute,
    Cluster,
    Clustering,
    Dimension,
    EvidenceMatrix,
    ExampleSet,
    GenerationRecord,
    Schema,
    SegmentMap,
    dumps_canonical,
)
from .refinement import (
    ApplyTargets,
    ContrastReport,
    DEFAULT_SAMPLE_SIZE,
    align_segments,
    apply_schema,
    contrast,
    iterate_schema,
    review_action_from_dict,
    review_suggestion,
)

logger = logging.getLogger(__name__)

GENESIS_HASH = "0" * 64

EVENTS_FILENAME = "events.jsonl"
STATE_FILENAME = "state.json"


class NodeStatus(Enum):
    IDLE = "Idle"
    RUNNING = "Running"
    DONE = "Done"
    FAILED = "Failed"


class NodeKind(Enum):
    CLUSTER = "cluster"
    FEATURE_MATRIX = "feature_matrix"
    DIMENSIONS = "dimensions"
    ATTRIBUTES = "attributes"
    OVERALL = "overall"
    APPLY = "apply"
    CONTRAST = "contrast"
    ALIGN = "align"
    ITERATE = "iterate"


def parse_node_key(key: str) -> tuple[NodeKind, str]:
    """Split "kind:target" into its parts; "cluster" is the only bare key."""
    kind_text, _, target = key.partition(":")
    try:
        kind = NodeKind(kind_text)
    except ValueError:
        raise UnknownTargetError(f"unknown node kind {kind_text!r}") from None
    if kind is NodeKind.CLUSTER:
        if target:
            raise UnknownTargetError("the cluster node takes no target")
    elif not target:
        raise UnknownTargetError(f"node kind {kind_text!r} needs a target id")
    return kind, target


# --- event encoding ---------------------------------------------------------------


def encode_event_core(seq: int, event_type: str, payload: dict) -> str:
    return json.dumps(
        {"seq": seq, "type": event_type, "payload": payload},
        sort_keys=True,
        ensure_ascii=False,
        separators=(",", ":"),
    )


def event_hash(prev_hash: str, core: str) -> str:
    return hashlib.sha256((prev_hash + core).encode("utf-8")).hexdigest()


def _parse_event_line(line: str, index: int, prev_hash: str) -> dict:
    position = f"event {index + 1}"
    try:
        event = json.loads(line)
    except json.JSONDecodeError as exc:
        raise EventLogCorruptError(f"{position}: not valid JSON ({exc})") from None
    if not isinstance(event, dict):
        raise EventLogCorruptError(f"{position}: not an object")
    for key in ("seq", "type", "payload", "prev_hash", "hash"):
        if key not in event:
            raise EventLogCorruptError(f"{position}: missing {key}")
    if event["seq"] != index + 1:
        raise EventLogCorruptError(
            f"{position}: expected seq {index + 1}, found {event['seq']!r}"
        )
    if event["prev_hash"] != prev_hash:
        raise EventLogCorruptError(f"{position}: prev_hash does not chain")
    core = encode_event_core(event["seq"], event["type"], event["payload"])
    if event["hash"] != event_hash(prev_hash, core):
        raise EventLogCorruptError(f"{position}: hash mismatch")
    return event


def _read_log_text(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise EventLogCorruptError(f"event log is not valid UTF-8 ({exc})") from None


def verify_event_log(path: Path) -> list[dict]:
    """Strict full-file verification; any anomaly raises EventLogCorruptError.

    This includes a torn final line (missing trailing newline): strict
    verification treats every byte as load-bearing.
    """
    raw = _read_log_text(path)
    if raw == "":
        return []
    if not raw.endswith("\n"):
        raise EventLogCorruptError("torn final line (no trailing newline)")
    events = []
    prev_hash = GENESIS_HASH
    for index, line in enumerate(raw.split("\n")[:-1]):
        event = _parse_event_line(line, index, prev_hash)
        events.append(event)
        prev_hash = event["hash"]
    return events


def read_events(path: Path) -> list[dict]:
    """Chain-verified read for loading; tolerates one torn final line.

    A crash mid-append can leave a partial last line with no trailing
    newline; that tail is dropped with a warning so every clean event
    prefix stays loadable. Anything else raises EventLogCorruptError.
    """
    raw = _read_log_text(path)
    lines = raw.split("\n")
    if lines[-1]:
        logger.warning("dropping torn final line in %s", path)
    lines = lines[:-1]
    events = []
    prev_hash = GENESIS_HASH
    for index, line in enumerate(lines):
        event = _parse_event_line(line, index, prev_hash)
        events.append(event)
        prev_hash = event["hash"]
    return events


# --- session state -----------------------------------------------------------------


class Session:
    """In-memory state of one session, kept in lockstep with its event log."""

    def __init__(self, session_id: str, directory: Path):
        self.id = session_id
        self.directory = Path(directory)
        self.example_set: Optional[ExampleSet] = None
        self.clustering: Optional[Clustering] = None
        self.pending: dict[str, dict] = {}
        self.schemas: dict[str, Schema] = {}
        self.records: dict[str, GenerationRecord] = {}
        self.reports: dict[str, ContrastReport] = {}
        self.segment_maps: dict[str, SegmentMap] = {}
        self.node_status: dict[str, NodeStatus] = {}
        self.node_errors: dict[str, str] = {}
        self.events: list[dict] = []
        self.last_seq = 0
        self.last_hash = GENESIS_HASH

    @property
    def events_path(self) -> Path:
        return self.directory / EVENTS_FILENAME

    @property
    def state_path(self) -> Path:
        return self.directory / STATE_FILENAME

    # -- event application --

    def append(self, event_type: str, payload: dict) -> dict:
        seq = self.last_seq + 1
        core = encode_event_core(seq, event_type, payload)
        event = {
            "seq": seq,
            "type": event_type,
            "payload": payload,
            "prev_hash": self.last_hash,
            "hash": event_hash(self.last_hash, core),
        }
        line = json.dumps(
            event, sort_keys=True, ensure_ascii=False, separators=(",", ":")
        )
        with open(self.events_path, "a", encoding="utf-8") as handle:
            handle.write(line + "\n")
            handle.flush()
        self.apply_event(event)
        return event

    def apply_event(self, event: dict) -> None:
        self.last_seq = event["seq"]
        self.last_hash = event["hash"]
        self.events.append(event)
        payload = event["payload"]
        event_type = event["type"]
        if event_type == "session_created":
            self.example_set = ExampleSet.from_dict(payload["example_set"])
        elif event_type == "node_started":
            node = payload["node"]
            self.node_status[node] = NodeStatus.RUNNING
            self.node_errors.pop(node, None)
        elif event_type in ("node_failed", "node_interrupted"):
            node = payload["node"]
            self.node_status[node] = NodeStatus.FAILED
            self.node_errors[node] = payload.get(
                "error", "interrupted: the session was reloaded while this node was running"
            )
        elif event_type == "clustering_committed":
            self.clustering = Clustering.from_dict(payload["clustering"])
            self._mark_done(payload["node"])
        elif event_type == "cluster_updated":
            updated = Cluster.from_dict(payload["cluster"])
            clusters = tuple(
                updated if c.id == updated.id else c for c in self.clustering.clusters
            )
            self.clustering = Clustering(clusters=clusters, over=self.clustering.over)
            self._mark_done(payload["node"])
        elif event_type == "dimensions_committed":
            pending = self.pending.setdefault(payload["cluster_id"], {})
            pending["dimensions"] = tuple(
                Dimension.from_dict(d) for d in payload["dimensions"]
            )
            pending["dimension_matrix"] = EvidenceMatrix.from_dict(payload["matrix"])
            self._mark_done(payload["node"])
        elif event_type == "attributes_committed":
            pending = self.pending.setdefault(payload["cluster_id"], {})
            pending["attributes"] = {
                dim_id: tuple(Attribute.from_dict(a) for a in attrs)
                for dim_id, attrs in payload["attributes"].items()
            }
            pending["attribute_matrices"] = {
                dim_id: EvidenceMatrix.from_dict(m)
                for dim_id, m in payload["matrices"].items()
            }
            self._mark_done(payload["node"])
        elif event_type == "schema_committed":
            schema = Schema.from_dict(payload["schema"])
            self.schemas[schema.id] = schema
            self._mark_done(payload["node"])
        elif event_type == "generations_committed":
            for entry in payload["records"]:
                record = GenerationRecord.from_dict(entry)
                self.records[record.id] = record
            self._mark_done(payload["node"])
        elif event_type == "contrast_committed":
            report = ContrastReport.from_dict(payload["report"])
            self.reports[report.record_id] = report
            self._mark_done(payload["node"])
        elif event_type == "segment_map_committed":
            segment_map = SegmentMap.from_dict(payload["segment_map"])
            self.segment_maps[segment_map.record_id] = segment_map
            self._mark_done(payload["node"])
        elif event_type == "edit_applied":
            self._apply_edit_event(payload)
        else:
            logger.warning("ignoring unknown event type %r", event_type)

    def _mark_done(self, node: str) -> None:
        self.node_status[node] = NodeStatus.DONE
        self.node_errors.pop(node, None)

    def _apply_edit_event(self, payload: dict) -> None:
        kind = payload["kind"]
        if kind == "cluster":
            edit = cluster_edit_from_dict(payload["edit"])
            self.clustering = apply_cluster_edit(self.clustering, edit)
        elif kind == "schema":
            target = payload["target"]
            edit = schema_edit_from_dict(payload["edit"])
            self.schemas[target] = apply_schema_edit(self.schemas[target], edit)
        elif kind == "review":
            target = payload["target"]
            action = review_action_from_dict(payload["action"])
            self.reports[target] = review_suggestion(
                self.reports[target], payload["suggestion_id"], action
            )
        else:
            raise ValidationError(f"unknown edit kind {kind!r}")

    # -- snapshotting --

    def snapshot(self) -> None:
        state = {
            "id": self.id,
            "last_seq": self.last_seq,
            "last_hash": self.last_hash,
            "example_set": self.example_set.to_dict() if self.example_set else None,
            "clustering": self.clustering.to_dict() if self.clustering else None,
            "pending": {
                cluster_id: {
                    key: (
                        [d.to_dict() for d in value]
                        if key == "dimensions"
                        else {k: [a.to_dict() for a in v] for k, v in sorted(value.items())}
                        if key == "attributes"
                        else {k: m.to_dict() for k, m in sorted(value.items())}
                        if key == "attribute_matrices"
                        else value.to_dict()
                    )
                    for key, value in sorted(pieces.items())
                }
                for cluster_id, pieces in sorted(self.pending.items())
            },
            "schemas": {k: s.to_dict() for k, s in sorted(self.schemas.items())},
            "records": {k: r.to_dict() for k, r in sorted(self.records.items())},
            "reports": {k: r.to_dict() for k, r in sorted(self.reports.items())},
            "segment_maps": {k: m.to_dict() for k, m in sorted(self.segment_maps.items())},
            "node_status": {k: v.value for k, v in sorted(self.node_status.items())},
            "node_errors": dict(sorted(self.node_errors.items())),
        }
        tmp_path = self.directory / (STATE_FILENAME + ".tmp")
        tmp_path.write_text(dumps_canonical(state), encoding="utf-8")
        tmp_path.replace(self.state_path)


class SessionStore:
    """Creates, lists, and loads sessions under one data directory."""

    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)

    def create(self, example_set: ExampleSet, session_id: Optional[str] = None) -> Session:
        session_id = session_id or f"s-{uuid.uuid4().hex[:12]}"
        directory = self.data_dir / session_id
        if directory.exists():
            raise DuplicateIdError(f"session {session_id!r} already exists")
        directory.mkdir(parents=True)
        session = Session(session_id, directory)
        session.append("session_created", {"example_set": example_set.to_dict()})
        session.snapshot()
        return session

    def load(self, session_id: str) -> Session:
        directory = self.data_dir / session_id
        events_path = directory / EVENTS_FILENAME
        if not events_path.exists():
            raise MissingArtifactError(str(events_path))
        session = Session(session_id, directory)
        for event in read_events(events_path):
            session.apply_event(event)
        interrupted = [
            node
            for node, status in sorted(session.node_status.items())
            if status is NodeStatus.RUNNING
        ]
        for node in interrupted:
            logger.warning("node %s was interrupted; marking it failed", node)
            session.append("node_interrupted", {"node": node})
        if interrupted:
            session.snapshot()
        return session

    def list_ids(self) -> list[str]:
        return sorted(
            p.name for p in self.data_dir.iterdir() if (p / EVENTS_FILENAME).exists()
        )


# --- node graph --------------------------------------------------------------------


def _require_done(session: Session, node: str, what: str) -> None:
    if session.node_status.get(node) is not NodeStatus.DONE:
        raise DependencyNotMetError(f"{what} (node {node}) has not completed")


def _require_cluster(session: Session, cluster_id: str) -> Cluster:
    _require_done(session, "cluster", "clustering")
    try:
        return session.clustering.cluster_by_id(cluster_id)
    except KeyError:
        raise DependencyNotMetError(f"no cluster {cluster_id!r} in the clustering") from None


def check_node_dependencies(session: Session, kind: NodeKind, target: str) -> None:
    if kind is NodeKind.CLUSTER:
        return
    if kind in (NodeKind.FEATURE_MATRIX, NodeKind.DIMENSIONS):
        _require_cluster(session, target)
    elif kind is NodeKind.ATTRIBUTES:
        _require_cluster(session, target)
        _require_done(session, f"dimensions:{target}", "dimension inference")
    elif kind is NodeKind.OVERALL:
        _require_cluster(session, target)
        _require_done(session, f"attributes:{target}", "attribute inference")
    elif kind in (NodeKind.APPLY, NodeKind.ITERATE):
        if target not in session.schemas:
            raise DependencyNotMetError(f"no schema {target!r} committed yet")
    elif kind in (NodeKind.CONTRAST, NodeKind.ALIGN):
        if target not in session.records:
            raise DependencyNotMetError(f"no generation record {target!r} committed yet")


def _parse_apply_params(params: dict) -> tuple[ApplyTargets, int, int]:
    targets_text = params.get("targets", ApplyTargets.BOTH.value)
    try:
        targets = ApplyTargets(targets_text)
    except ValueError:
        raise ValidationError(f"unknown apply targets {targets_text!r}") from None
    try:
        k = int(params.get("k", DEFAULT_SAMPLE_SIZE))
        seed = int(params.get("seed", 0))
    except (TypeError, ValueError):
        raise ValidationError("k and seed must be integers") from None
    return targets, k, seed


def _execute_node(
    session: Session,
    kind: NodeKind,
    target: str,
    node_key: str,
    gateway: Gateway,
    params: dict,
) -> None:
    example_set = session.example_set
    strict = bool(params.get("strict", True))
    if kind is NodeKind.CLUSTER:
        clustering = propose_clusters(example_set, gateway)
        session.append(
            "clustering_committed",
            {"node": node_key, "clustering": clustering.to_dict()},
        )
    elif kind is NodeKind.FEATURE_MATRIX:
        cluster = session.clustering.cluster_by_id(target)
        matrix, _ = build_feature_matrix(cluster, example_set, gateway, strict=strict)
        session.append(
            "cluster_updated",
            {"node": node_key, "cluster": replace(cluster, feature_matrix=matrix).to_dict()},
        )
    elif kind is NodeKind.DIMENSIONS:
        cluster = session.clustering.cluster_by_id(target)
        inference = infer_dimensions(cluster, example_set, gateway, strict=strict)
        session.append(
            "dimensions_committed",
            {
                "node": node_key,
                "cluster_id": target,
                "dimensions": [d.to_dict() for d in inference.dimensions],
                "matrix": inference.matrix.to_dict(),
            },
        )
    elif kind is NodeKind.ATTRIBUTES:
        cluster = session.clustering.cluster_by_id(target)
        dimensions = session.pending[target]["dimensions"]
        inference = infer_dimension_attributes(
            cluster, example_set, dimensions, gateway, strict=strict
        )
        session.append(
            "attributes_committed",
            {
                "node": node_key,
                "cluster_id": target,
                "attributes": {
                    dim_id: [a.to_dict() for a in attrs]
                    for dim_id, attrs in sorted(inference.attributes.items())
                },
                "matrices": {
                    dim_id: m.to_dict() for dim_id, m in sorted(inference.matrices.items())
                },
                "dropped": [list(t) for t in inference.dropped],
            },
        )
    elif kind is NodeKind.OVERALL:
        cluster = session.clustering.cluster_by_id(target)
        pending = session.pending[target]
        overall = infer_overall_attributes(cluster, example_set, gateway, strict=strict)
        dimension_inference = DimensionInference(
            dimensions=pending["dimensions"],
            matrix=pending["dimension_matrix"],
            report=VerificationReport(0, 0, 0, ()),
        )
        attribute_inference = AttributeInference(
            attributes=dict(pending["attributes"]),
            matrices=dict(pending["attribute_matrices"]),
        )
        schema = assemble_schema(cluster, dimension_inference, attribute_inference, overall)
        session.append(
            "schema_committed", {"node": node_key, "schema": schema.to_dict()}
        )
    elif kind is NodeKind.APPLY:
        schema = session.schemas[target]
        cluster = session.clustering.cluster_by_id(schema.cluster_id)
        targets, k, seed = _parse_apply_params(params)
        records = apply_schema(
            schema, cluster, example_set, gateway, targets=targets, k=k, seed=seed
        )
        session.append(
            "generations_committed",
            {"node": node_key, "records": [r.to_dict() for r in records]},
        )
    elif kind is NodeKind.CONTRAST:
        record = session.records[target]
        schema = session.schemas[record.schema_id]
        if record.gold_id is None:
            raise ValidationError(f"record {target} has no gold example to contrast")
        gold = example_set.by_id(record.gold_id)
        report = contrast(schema, record, gold, gateway)
        session.append(
            "contrast_committed", {"node": node_key, "report": report.to_dict()}
        )
    elif kind is NodeKind.ALIGN:
        record = session.records[target]
        schema = session.schemas[record.schema_id]
        if record.gold_id is None:
            raise ValidationError(f"record {target} has no gold example to align")
        gold = example_set.by_id(record.gold_id)
        segment_map = align_segments(schema, record, gold, gateway)
        session.append(
            "segment_map_committed",
            {"node": node_key, "segment_map": segment_map.to_dict()},
        )
    elif kind is NodeKind.ITERATE:
        schema = session.schemas[target]
        suggestions = [
            suggestion
            for report in session.reports.values()
            if session.records[report.record_id].schema_id == target
            for suggestion in report.suggestions
        ]
        revised = iterate_schema(schema, suggestions, gateway, goal=example_set.goal)
        session.append(
            "schema_committed", {"node": node_key, "schema": revised.to_dict()}
        )


def run_node(
    session: Session,
    node_key: str,
    gateway: Gateway,
    params: Optional[dict] = None,
) -> NodeStatus:
    """Run one node synchronously: started event, work, terminal event.

    Dependencies must be Done and the node must not already be running.
    Failures are recorded as events and re-raised for the caller to map.
    """
    params = params or {}
    kind, target = parse_node_key(node_key)
    if session.node_status.get(node_key) is NodeStatus.RUNNING:
        raise AlreadyRunningError(f"node {node_key} is already running")
    check_node_dependencies(session, kind, target)
    session.append("node_started", {"node": node_key})
    try:
        _execute_node(session, kind, target, node_key, gateway, params)
    except Exception as exc:
        session.append(
            "node_failed",
            {"node": node_key, "error": f"{type(exc).__name__}: {exc}"},
        )
        session.snapshot()
        raise
    session.snapshot()
    return session.node_status[node_key]


# --- edits -------------------------------------------------------------------------


def submit_edit(session: Session, request: dict) -> dict:
    """Validate an edit against current state, then commit it as an event.

    The edit is dry-run through the owning module first so invalid edits
    raise that module's error without touching the log; the committed
    event stores the edit itself and replay re-applies it.
    """
    if any(status is NodeStatus.RUNNING for status in session.node_status.values()):
        raise AlreadyRunningError("a node is running; submit the edit when it finishes")
    kind = request.get("kind")
    if kind == "cluster":
        if session.clustering is None:
            raise DependencyNotMetError("no clustering to edit yet")
        edit = cluster_edit_from_dict(request["edit"])
        apply_cluster_edit(session.clustering, edit)
        session.append("edit_applied", {"kind": "cluster", "edit": edit.to_dict()})
        session.snapshot()
        return session.clustering.to_dict()
    if kind == "schema":
        target = request.get("target", "")
        if target not in session.schemas:
            raise UnknownTargetError(f"no schema {target!r} to edit")
        edit = schema_edit_from_dict(request["edit"])
        apply_schema_edit(session.schemas[target], edit)
        session.append(
            "edit_applied", {"kind": "schema", "target": target, "edit": edit.to_dict()}
        )
        session.snapshot()
        return session.schemas[target].to_dict()
    if kind == "review":
        target = request.get("target", "")
        if target not in session.reports:
            raise UnknownTargetError(f"no contrast report for record {target!r}")
        action = review_action_from_dict(request["action"])
        suggestion_id = request.get("suggestion_id", "")
        review_suggestion(session.reports[target], suggestion_id, action)
        session.append(
            "edit_applied",
            {
                "kind": "review",
                "target": target,
                "suggestion_id": suggestion_id,
                "action": action.to_dict(),
            },
        )
        session.snapshot()
        return session.reports[target].to_dict()
    raise ValidationError(f"unknown edit kind {kind!r}")


# --- views -------------------------------------------------------------------------


def node_view(session: Session, node_key: str) -> dict:
    kind, target = parse_node_key(node_key)
    status = session.node_status.get(node_key, NodeStatus.IDLE)
    artifact = None
    if status is NodeStatus.DONE:
        if kind is NodeKind.CLUSTER:
            artifact = session.clustering.to_dict()
        elif kind is NodeKind.FEATURE_MATRIX:
            artifact = session.clustering.cluster_by_id(target).to_dict()
        elif kind is NodeKind.DIMENSIONS:
            pending = session.pending.get(target, {})
            artifact = {
                "dimensions": [d.to_dict() for d in pending.get("dimensions", ())],
                "matrix": pending["dimension_matrix"].to_dict()
                if "dimension_matrix" in pending
                else None,
            }
        elif kind is NodeKind.ATTRIBUTES:
            pending = session.pending.get(target, {})
            artifact = {
                "attributes": {
                    dim_id: [a.to_dict() for a in attrs]
                    for dim_id, attrs in sorted(pending.get("attributes", {}).items())
                },
                "matrices": {
                    dim_id: m.to_dict()
                    for dim_id, m in sorted(pending.get("attribute_matrices", {}).items())
                },
            }
        elif kind is NodeKind.OVERALL:
            schema = session.schemas.get(f"{target}-r0")
            artifact = schema.to_dict() if schema else None
        elif kind is NodeKind.APPLY:
            artifact = {
                "records": [
                    r.to_dict()
                    for r in session.records.values()
                    if r.schema_id == target
                ]
            }
        elif kind is NodeKind.CONTRAST:
            report = session.reports.get(target)
            artifact = report.to_dict() if report else None
        elif kind is NodeKind.ALIGN:
            segment_map = session.segment_maps.get(target)
            artifact = segment_map.to_dict() if segment_map else None
        elif kind is NodeKind.ITERATE:
            children = [s for s in session.schemas.values() if s.parent_id == target]
            artifact = children[-1].to_dict() if children else None
    return {
        "node": node_key,
        "status": status.value,
        "error": session.node_errors.get(node_key),
        "artifact": artifact,
    }


def session_view(session: Session) -> dict:
    return {
        "id": session.id,
        "goal": session.example_set.goal if session.example_set else "",
        "example_set": session.example_set.to_dict() if session.example_set else None,
        "nodes": {
            key: {"status": status.value, "error": session.node_errors.get(key)}
            for key, status in sorted(session.node_status.items())
        },
        "clustering": session.clustering.to_dict() if session.clustering else None,
        "schemas": {k: s.to_dict() for k, s in sorted(session.schemas.items())},
        "records": {k: r.to_dict() for k, r in sorted(session.records.items())},
        "reports": {k: r.to_dict() for k, r in sorted(session.reports.items())},
        "segment_maps": {
            k: m.to_dict() for k, m in sorted(session.segment_maps.items())
        },
        "last_seq": session.last_seq,
    }
