"""Tests for the HTTP service layer: endpoints, error mapping, streaming."""

import pytest
from fastapi.testclient import TestClient

from schemex.gateway import Gateway, ModelParams
from schemex.service import build_example_set, create_app
from schemex.session import NodeStatus

from test_session import (
    APPLY_REPLIES,
    ATTRIBUTES_REPLY,
    BAD_SEGMENTS_REPLY,
    CLUSTER_PROSE,
    CONTRAST_REPLY,
    DIMENSIONS_REPLY,
    FEATURE_REPLY,
    OVERALL_REPLY,
    FailingTransport,
    ScriptedTransport,
    iterate_reply,
)

PARAMS = ModelParams(model="test-model", temperature=0.0, seed=7)

EXAMPLES = [
    {"content": "The survey covered 300 nurses. Burnout rose.", "input_context": "Nurse workload survey data."},
    {"content": "The field test used 40 teams. Output fell.", "input_context": "Team deadline experiment data."},
    {"content": "The review scanned 52 papers. Gaps remain.", "input_context": "Policy literature corpus."},
    {"content": "We define a trust calculus. Proofs follow.", "input_context": "Trust formalism notes."},
    {"content": "We extend a game model. Equilibria shift.", "input_context": "Game theory extension notes."},
]


def session_body(session_id="s1", holdout_ratio=0):
    return {
        "id": session_id,
        "goal": "Write study abstracts",
        "content_type": "study abstract",
        "examples": EXAMPLES,
        "holdout_ratio": holdout_ratio,
    }


class QueueFactory:
    """Gateway factory backed by one shared ordered response queue."""

    def __init__(self, responses=()):
        self.transport = ScriptedTransport(responses)

    def __call__(self):
        return Gateway(params=PARAMS, transport=self.transport)


def make_client(tmp_path, factory=None):
    app = create_app(data_dir=tmp_path, gateway_factory=factory or QueueFactory())
    return TestClient(app), app


def run(client, session_id, node_key, body=None):
    return client.post(f"/sessions/{session_id}/nodes/{node_key}/run", json=body)


def drive_pipeline_over_http(client, app, factory):
    factory.transport.responses.extend(
        [CLUSTER_PROSE, FEATURE_REPLY, DIMENSIONS_REPLY, ATTRIBUTES_REPLY, OVERALL_REPLY]
    )
    for node_key in (
        "cluster",
        "feature_matrix:c1",
        "dimensions:c1",
        "attributes:c1",
        "overall:c1",
    ):
        response = run(client, "s1", node_key)
        assert response.status_code == 200, response.text
        assert response.json()["status"] == "Done"
    factory.transport.responses.extend(APPLY_REPLIES)
    assert run(client, "s1", "apply:c1-r0").status_code == 200
    factory.transport.responses.append(CONTRAST_REPLY)
    assert run(client, "s1", "contrast:c1-r0-g1").status_code == 200
    factory.transport.responses.extend([BAD_SEGMENTS_REPLY, BAD_SEGMENTS_REPLY])
    assert run(client, "s1", "align:c1-r0-g1").status_code == 200
    accept = client.post(
        "/sessions/s1/edits",
        json={
            "kind": "review",
            "target": "c1-r0-g1",
            "suggestion_id": "c1-r0-g1-s1",
            "action": {"kind": "Accept"},
        },
    )
    assert accept.status_code == 200, accept.text
    schema = app.state.service.sessions["s1"].schemas["c1-r0"]
    factory.transport.responses.append(iterate_reply(schema))
    assert run(client, "s1", "iterate:c1-r0").status_code == 200


# --- creation and views --------------------------------------------------------------


def test_healthz(tmp_path):
    client, _ = make_client(tmp_path)
    response = client.get("/healthz")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_create_session_returns_view(tmp_path):
    client, _ = make_client(tmp_path)
    response = client.post("/sessions", json=session_body())
    assert response.status_code == 201
    view = response.json()
    assert view["id"] == "s1"
    assert view["goal"] == "Write study abstracts"
    assert len(view["example_set"]["examples"]) == 5
    assert view["example_set"]["holdout_ids"] == []
    assert client.get("/sessions").json() == {"sessions": ["s1"]}


def test_create_session_with_holdout_split(tmp_path):
    client, _ = make_client(tmp_path)
    response = client.post("/sessions", json=session_body(holdout_ratio=0.2))
    assert response.status_code == 201
    assert len(response.json()["example_set"]["holdout_ids"]) == 1


def test_create_session_rejects_empty_goal(tmp_path):
    client, _ = make_client(tmp_path)
    body = session_body()
    body["goal"] = "  "
    response = client.post("/sessions", json=body)
    assert response.status_code == 400
    assert response.json()["error"] == "EmptyGoalError"


def test_create_session_rejects_bad_ratio_type(tmp_path):
    client, _ = make_client(tmp_path)
    body = session_body()
    body["holdout_ratio"] = "lots"
    response = client.post("/sessions", json=body)
    assert response.status_code == 400
    assert response.json()["error"] == "ValidationError"


def test_duplicate_session_id_conflicts(tmp_path):
    client, _ = make_client(tmp_path)
    assert client.post("/sessions", json=session_body()).status_code == 201
    response = client.post("/sessions", json=session_body())
    assert response.status_code == 409
    assert response.json()["error"] == "DuplicateIdError"


def test_get_unknown_session_is_404(tmp_path):
    client, _ = make_client(tmp_path)
    response = client.get("/sessions/s-missing")
    assert response.status_code == 404
    assert response.json()["error"] == "MissingArtifactError"


def test_build_example_set_rejects_non_object_entries():
    from schemex.errors import ValidationError

    with pytest.raises(ValidationError):
        build_example_set({"goal": "g", "examples": ["just text"]})


# --- node runs -----------------------------------------------------------------------


def test_full_pipeline_over_http(tmp_path):
    factory = QueueFactory()
    client, app = make_client(tmp_path, factory)
    assert client.post("/sessions", json=session_body()).status_code == 201
    drive_pipeline_over_http(client, app, factory)
    view = client.get("/sessions/s1").json()
    assert set(view["schemas"]) == {"c1-r0", "c1-r1"}
    assert view["nodes"]["iterate:c1-r0"]["status"] == "Done"
    overall = client.get("/sessions/s1/nodes/overall:c1").json()
    assert overall["artifact"]["id"] == "c1-r0"
    apply_view = client.get("/sessions/s1/nodes/apply:c1-r0").json()
    assert len(apply_view["artifact"]["records"]) == 2
    idle = client.get("/sessions/s1/nodes/align:c1-r0-g2").json()
    assert idle["status"] == "Idle"
    assert idle["artifact"] is None


def test_dependency_not_met_is_409(tmp_path):
    client, _ = make_client(tmp_path)
    client.post("/sessions", json=session_body())
    response = run(client, "s1", "dimensions:c1")
    assert response.status_code == 409
    assert response.json()["error"] == "DependencyNotMetError"


def test_unknown_node_kind_is_404(tmp_path):
    client, _ = make_client(tmp_path)
    client.post("/sessions", json=session_body())
    response = run(client, "s1", "sing:c1")
    assert response.status_code == 404
    assert response.json()["error"] == "UnknownTargetError"


def test_transport_failure_is_502_and_node_failed(tmp_path):
    def failing_factory():
        return Gateway(params=PARAMS, transport=FailingTransport())

    client, _ = make_client(tmp_path, failing_factory)
    client.post("/sessions", json=session_body())
    response = run(client, "s1", "cluster")
    assert response.status_code == 502
    assert response.json()["error"] == "TransportError"
    node = client.get("/sessions/s1/nodes/cluster").json()
    assert node["status"] == "Failed"
    assert "TransportError" in node["error"]


def test_unconfigured_backend_is_502(tmp_path, monkeypatch):
    monkeypatch.delenv("SCHEMEX_MODEL", raising=False)
    monkeypatch.delenv("SCHEMEX_BASE_URL", raising=False)
    app = create_app(data_dir=tmp_path)
    client = TestClient(app)
    client.post("/sessions", json=session_body())
    response = run(client, "s1", "cluster")
    assert response.status_code == 502


# --- edits ---------------------------------------------------------------------------


def test_edit_rejected_while_node_running(tmp_path):
    factory = QueueFactory([CLUSTER_PROSE])
    client, app = make_client(tmp_path, factory)
    client.post("/sessions", json=session_body())
    run(client, "s1", "cluster")
    session = app.state.service.sessions["s1"]
    session.node_status["dimensions:c1"] = NodeStatus.RUNNING
    response = client.post(
        "/sessions/s1/edits",
        json={
            "kind": "cluster",
            "edit": {"kind": "RenameCluster", "cluster_id": "c1", "name": "Field Studies"},
        },
    )
    assert response.status_code == 409
    assert response.json()["error"] == "AlreadyRunningError"
    session.node_status["dimensions:c1"] = NodeStatus.IDLE
    response = client.post(
        "/sessions/s1/edits",
        json={
            "kind": "cluster",
            "edit": {"kind": "RenameCluster", "cluster_id": "c1", "name": "Field Studies"},
        },
    )
    assert response.status_code == 200
    assert response.json()["artifact"]["clusters"][0]["name"] == "Field Studies"


def test_schema_attribute_rename_over_http(tmp_path):
    factory = QueueFactory()
    client, app = make_client(tmp_path, factory)
    client.post("/sessions", json=session_body())
    drive_pipeline_over_http(client, app, factory)
    response = client.post(
        "/sessions/s1/edits",
        json={
            "kind": "schema",
            "target": "c1-r0",
            "edit": {
                "kind": "RenameAttribute",
                "scope": "d1",
                "old_concise": "Sample Size",
                "new_concise": "Cohort Size",
            },
        },
    )
    assert response.status_code == 200
    names = [a["concise"] for a in response.json()["artifact"]["dimensions"][0]["attributes"]]
    assert names == ["Cohort Size"]


def test_unknown_edit_kind_is_400(tmp_path):
    client, _ = make_client(tmp_path)
    client.post("/sessions", json=session_body())
    response = client.post("/sessions/s1/edits", json={"kind": "repaint"})
    assert response.status_code == 400
    assert response.json()["error"] == "ValidationError"


# --- persistence and streaming -------------------------------------------------------


def test_sessions_survive_app_restart(tmp_path):
    factory = QueueFactory([CLUSTER_PROSE])
    client, _ = make_client(tmp_path, factory)
    client.post("/sessions", json=session_body())
    run(client, "s1", "cluster")
    before = client.get("/sessions/s1").json()
    fresh_client, _ = make_client(tmp_path)
    after = fresh_client.get("/sessions/s1").json()
    assert after == before


def test_event_stream_replays_then_closes(tmp_path):
    factory = QueueFactory([CLUSTER_PROSE])
    client, _ = make_client(tmp_path, factory)
    client.post("/sessions", json=session_body())
    run(client, "s1", "cluster")
    response = client.get("/sessions/s1/events")
    assert response.status_code == 200
    assert response.headers["content-type"].startswith("text/event-stream")
    body = response.text
    assert "event: session_created" in body
    assert "event: clustering_committed" in body
    assert body.rstrip().endswith('data: {"reason": "replay complete"}')
    frames = [f for f in body.split("\n\n") if f.startswith("id: ")]
    assert [f.split("\n")[0] for f in frames] == ["id: 1", "id: 2", "id: 3"]


def test_event_stream_since_filter(tmp_path):
    factory = QueueFactory([CLUSTER_PROSE])
    client, _ = make_client(tmp_path, factory)
    client.post("/sessions", json=session_body())
    run(client, "s1", "cluster")
    body = client.get("/sessions/s1/events", params={"since": 2}).text
    assert "event: session_created" not in body
    assert "id: 3" in body
    assert client.get("/sessions/s-nope/events").status_code == 404
