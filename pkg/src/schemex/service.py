"""HTTP service over sessions: create, run nodes, edit, and stream events.

The service is a thin JSON layer over the session store. All writes to
one session are serialized through a per-session lock, so there is never
more than one writer appending to a session's event log. Requests that
arrive while a node runs are rejected with 409 rather than queued: the
caller polls node status or follows the event stream instead.

Configuration comes from flags or the environment: SCHEMEX_DATA_DIR for
the session root, and SCHEMEX_MODEL, SCHEMEX_BASE_URL, SCHEMEX_API_KEY
for the upstream completion endpoint. The API key authenticates this
service to the model backend; the service itself has no auth.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import threading
from pathlib import Path
from typing import Callable, Iterator, Optional

from fastapi import Body, FastAPI
from fastapi.responses import JSONResponse, StreamingResponse

from .errors import (
    AlreadyReviewedError,
    AlreadyRunningError,
    DependencyNotMetError,
    DuplicateIdError,
    MissingArtifactError,
    SchemexError,
    TransportError,
    UnknownTargetError,
    ValidationError,
)
from .gateway import Gateway, HttpTransport, ModelParams
from .ingest import load_examples, load_manifest
from .model import ExampleSet, new_example_set, split_validation, text_examples
from .session import (
    Session,
    SessionStore,
    node_view,
    run_node,
    session_view,
    submit_edit,
)

logger = logging.getLogger(__name__)

DEFAULT_DATA_DIR = "schemex-data"
DEFAULT_HOLDOUT_RATIO = 0.2

GatewayFactory = Callable[[], Gateway]


def default_gateway_factory() -> Gateway:
    """Build a live gateway from the environment; fail as a transport error."""
    model = os.environ.get("SCHEMEX_MODEL", "")
    base_url = os.environ.get("SCHEMEX_BASE_URL", "")
    if not model or not base_url:
        raise TransportError(
            "no model endpoint configured; set SCHEMEX_MODEL and SCHEMEX_BASE_URL"
        )
    transport = HttpTransport(base_url, api_key=os.environ.get("SCHEMEX_API_KEY", ""))
    return Gateway(params=ModelParams(model=model), transport=transport)


def build_example_set(body: dict) -> ExampleSet:
    """Turn a session-creation body into a validated, optionally split corpus.

    Accepts either inline examples ({"goal", "examples": [{"content",
    "input_context"}], ...}) or {"manifest_path"} pointing at an ingestion
    manifest on disk. holdout_ratio 0 skips the validation split.
    """
    if "manifest_path" in body:
        manifest = load_manifest(Path(body["manifest_path"]))
        example_set = load_examples(manifest)
    else:
        goal = body.get("goal", "")
        entries = body.get("examples", [])
        if not isinstance(entries, list) or not all(
            isinstance(entry, dict) for entry in entries
        ):
            raise ValidationError("examples must be a list of objects")
        pairs = [
            (entry.get("content", ""), entry.get("input_context", ""))
            for entry in entries
        ]
        example_set = new_example_set(
            goal,
            text_examples(pairs),
            content_type=body.get("content_type", ""),
            input_context=body.get("input_context", ""),
        )
    try:
        ratio = float(body.get("holdout_ratio", DEFAULT_HOLDOUT_RATIO))
        seed = int(body.get("seed", 0))
    except (TypeError, ValueError):
        raise ValidationError("holdout_ratio and seed must be numbers") from None
    if ratio:
        example_set = split_validation(example_set, ratio, seed)
    return example_set


_STATUS_FOR_ERROR = (
    (MissingArtifactError, 404),
    (UnknownTargetError, 404),
    (AlreadyRunningError, 409),
    (AlreadyReviewedError, 409),
    (DependencyNotMetError, 409),
    (DuplicateIdError, 409),
    (TransportError, 502),
)


def error_response(exc: Exception) -> JSONResponse:
    for error_type, status in _STATUS_FOR_ERROR:
        if isinstance(exc, error_type):
            break
    else:
        status = 400
    return JSONResponse(
        status_code=status,
        content={"error": type(exc).__name__, "detail": str(exc)},
    )


class ServiceState:
    """Store, gateway factory, loaded sessions, and their write locks."""

    def __init__(self, store: SessionStore, gateway_factory: GatewayFactory):
        self.store = store
        self.gateway_factory = gateway_factory
        self.sessions: dict[str, Session] = {}
        self.locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self.locks.setdefault(session_id, threading.Lock())

    def register(self, session: Session) -> Session:
        with self._registry_lock:
            self.sessions[session.id] = session
        return session

    def get_session(self, session_id: str) -> Session:
        with self._registry_lock:
            cached = self.sessions.get(session_id)
        if cached is not None:
            return cached
        return self.register(self.store.load(session_id))


def sse_stream(session: Session, since: int) -> Iterator[str]:
    """Replay the committed events after `since` as SSE frames, then end.

    The stream closes after replay; callers re-subscribe with the last
    seq they saw to pick up anything newer.
    """
    for event in session.events:
        if event["seq"] <= since:
            continue
        data = json.dumps(event, sort_keys=True, ensure_ascii=False)
        yield f"id: {event['seq']}\nevent: {event['type']}\ndata: {data}\n\n"
    yield 'event: end\ndata: {"reason": "replay complete"}\n\n'


def create_app(
    data_dir: Optional[Path] = None,
    gateway_factory: Optional[GatewayFactory] = None,
) -> FastAPI:
    data_dir = Path(data_dir or os.environ.get("SCHEMEX_DATA_DIR", DEFAULT_DATA_DIR))
    state = ServiceState(
        store=SessionStore(data_dir),
        gateway_factory=gateway_factory or default_gateway_factory,
    )
    app = FastAPI(title="schemex", docs_url=None, redoc_url=None)
    app.state.service = state

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "sessions": len(state.store.list_ids())}

    @app.post("/sessions", status_code=201)
    def create_session(body: dict = Body(...)):
        try:
            example_set = build_example_set(body)
            session = state.store.create(example_set, session_id=body.get("id"))
        except SchemexError as exc:
            return error_response(exc)
        state.register(session)
        return session_view(session)

    @app.get("/sessions")
    def list_sessions() -> dict:
        return {"sessions": state.store.list_ids()}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            return session_view(state.get_session(session_id))
        except SchemexError as exc:
            return error_response(exc)

    @app.post("/sessions/{session_id}/nodes/{node_key}/run")
    def run_session_node(session_id: str, node_key: str, body: Optional[dict] = Body(None)):
        lock = state.lock_for(session_id)
        if not lock.acquire(blocking=False):
            return error_response(
                AlreadyRunningError(f"session {session_id} has a write in progress")
            )
        try:
            session = state.get_session(session_id)
            run_node(session, node_key, state.gateway_factory(), params=body or {})
            return node_view(session, node_key)
        except SchemexError as exc:
            return error_response(exc)
        finally:
            lock.release()

    @app.get("/sessions/{session_id}/nodes/{node_key}")
    def get_node(session_id: str, node_key: str):
        try:
            return node_view(state.get_session(session_id), node_key)
        except SchemexError as exc:
            return error_response(exc)

    @app.post("/sessions/{session_id}/edits")
    def post_edit(session_id: str, body: dict = Body(...)):
        lock = state.lock_for(session_id)
        if not lock.acquire(blocking=False):
            return error_response(
                AlreadyRunningError(f"session {session_id} has a write in progress")
            )
        try:
            session = state.get_session(session_id)
            artifact = submit_edit(session, body)
            return {"kind": body.get("kind"), "artifact": artifact}
        except SchemexError as exc:
            return error_response(exc)
        finally:
            lock.release()

    @app.get("/sessions/{session_id}/events")
    def stream_events(session_id: str, since: int = 0):
        try:
            session = state.get_session(session_id)
        except SchemexError as exc:
            return error_response(exc)
        return StreamingResponse(
            sse_stream(session, since), media_type="text/event-stream"
        )

    return app


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="schemex-service", description="Run the schema induction HTTP service."
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--data-dir", default=None, help="session storage root")
    parser.add_argument("--model", default=None, help="completion model name")
    parser.add_argument("--base-url", default=None, help="completion endpoint base URL")
    args = parser.parse_args(argv)
    if args.model:
        os.environ["SCHEMEX_MODEL"] = args.model
    if args.base_url:
        os.environ["SCHEMEX_BASE_URL"] = args.base_url
    import uvicorn

    logging.basicConfig(level=logging.INFO)
    uvicorn.run(create_app(data_dir=args.data_dir), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
