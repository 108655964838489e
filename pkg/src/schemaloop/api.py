"""HTTP JSON API driving the curation UI and CLI.

Handlers are stateless: every request loads the session from the store,
mutates under a per-session lock, and saves before responding, so a restart
loses nothing. Stage executions run as background jobs polled via /jobs;
one session never runs two jobs at once.
"""

from __future__ import annotations

import logging
import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import errors as err
from .curation import apply_curation, create_session
from .metrics import session_report
from .model import PIPELINE_STAGES, SchemaSession
from .pipeline import (
    Runtime,
    run_graph_construction,
    run_grounding,
    run_node_extraction,
    run_step_generation,
)
from .store import SessionStore, export_schema

log = logging.getLogger(__name__)

# Closed error taxonomy; every non-success response carries exactly one of these.
ERROR_CODES = frozenset(
    {
        "unknown_session",
        "unknown_job",
        "unknown_entity",
        "malformed_payload",
        "bad_stage_params",
        "llm_failure",
        "job_in_progress",
        "empty_graph",
    }
)

_STATUS = {
    "unknown_session": 404,
    "unknown_job": 404,
    "unknown_entity": 404,
    "malformed_payload": 400,
    "bad_stage_params": 400,
    "llm_failure": 502,
    "job_in_progress": 409,
    "empty_graph": 409,
}


class ApiError(Exception):
    def __init__(self, code: str, message: str, detail: dict | None = None):
        assert code in ERROR_CODES, f"undocumented error code {code!r}"
        super().__init__(message)
        self.code = code
        self.message = message
        self.detail = detail

    def to_response(self) -> JSONResponse:
        body: dict = {"error": {"code": self.code, "message": self.message}}
        if self.detail is not None:
            body["error"]["detail"] = self.detail
        return JSONResponse(status_code=_STATUS[self.code], content=body)


def _api_error_from(exc: Exception) -> ApiError:
    if isinstance(exc, ApiError):
        return exc
    if isinstance(exc, err.NotFound):
        return ApiError("unknown_session", str(exc))
    if isinstance(exc, err.UnknownEntity):
        return ApiError("unknown_entity", str(exc))
    if isinstance(exc, (err.MalformedPayload, err.EmptyScenario, err.CorruptRecord)):
        return ApiError("malformed_payload", str(exc))
    if isinstance(exc, err.TooFewNodes):
        return ApiError("bad_stage_params", str(exc))
    if isinstance(exc, err.EmptyGraph):
        return ApiError("empty_graph", str(exc))
    if isinstance(
        exc,
        (err.ProviderError, err.TransportError, err.MissingCredential, err.NoTuplesFound),
    ):
        return ApiError("llm_failure", str(exc))
    log.exception("unhandled error: %s", exc)
    return ApiError("malformed_payload", f"unhandled error: {exc}")


@dataclass
class Job:
    job_id: str
    session_id: str
    stage: str
    status: str = "running"  # running | done | error
    done: int = 0
    total: int = 0
    result: dict | None = None
    error: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "job_id": self.job_id,
            "session_id": self.session_id,
            "stage": self.stage,
            "status": self.status,
            "progress": {"done": self.done, "total": self.total},
        }
        if self.result is not None:
            out["result"] = self.result
        if self.error is not None:
            out["error"] = self.error
        return out


@dataclass
class JobManager:
    jobs: dict[str, Job] = field(default_factory=dict)
    active_sessions: set[str] = field(default_factory=set)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def start(self, session_id: str, stage: str) -> Job:
        with self.lock:
            if session_id in self.active_sessions:
                raise ApiError("job_in_progress", f"session {session_id} already has a running job")
            job = Job(job_id=uuid.uuid4().hex[:12], session_id=session_id, stage=stage)
            self.jobs[job.job_id] = job
            self.active_sessions.add(session_id)
            return job

    def finish(self, job: Job, result: dict | None = None, error: dict | None = None):
        with self.lock:
            job.result = result
            job.error = error
            job.status = "error" if error else "done"
            self.active_sessions.discard(job.session_id)

    def get(self, job_id: str) -> Job:
        job = self.jobs.get(job_id)
        if job is None:
            raise ApiError("unknown_job", f"no job {job_id!r}")
        return job


class SessionLocks:
    """Single-writer rule: all mutations to one session serialize through one lock."""

    def __init__(self):
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def for_session(self, session_id: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(session_id, threading.Lock())


def create_app(store: SessionStore, runtime: Runtime) -> FastAPI:
    app = FastAPI(title="schemaloop", docs_url=None, redoc_url=None)
    # demo tool: the browser UI is served from a different origin, no auth
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    jobs = JobManager()
    locks = SessionLocks()

    @app.exception_handler(ApiError)
    async def _handle_api_error(request: Request, exc: ApiError):
        return exc.to_response()

    @app.exception_handler(RequestValidationError)
    async def _handle_validation(request: Request, exc: RequestValidationError):
        return ApiError("malformed_payload", "request body failed validation").to_response()

    def _load(session_id: str) -> SchemaSession:
        try:
            return store.load_session(session_id)
        except err.NotFound as exc:
            raise ApiError("unknown_session", str(exc)) from exc

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    async def post_session(body: dict):
        scenario = body.get("scenario")
        if not isinstance(scenario, str):
            raise ApiError("malformed_payload", "body needs a 'scenario' string")
        try:
            session = create_session(scenario)
        except err.EmptyScenario as exc:
            raise ApiError("malformed_payload", str(exc)) from exc
        store.save_session(session)
        return session.to_dict()

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return _load(session_id).to_dict()

    @app.post("/sessions/{session_id}/events")
    async def post_event(session_id: str, body: dict):
        action = body.get("action")
        payload = body.get("payload")
        actor = body.get("actor", "human")
        if not isinstance(action, str) or not isinstance(payload, dict):
            raise ApiError("malformed_payload", "body needs 'action' and 'payload'")
        if actor not in ("human", "model"):
            raise ApiError("malformed_payload", f"unknown actor {actor!r}")
        with locks.for_session(session_id):
            session = _load(session_id)
            try:
                event = apply_curation(session, action, payload, actor=actor)
            except (err.MalformedPayload, err.UnknownEntity) as exc:
                raise _api_error_from(exc) from exc
            store.save_session(session)
            return {"event_id": event.event_id, "changed": _changed_entities(session, event)}

    @app.post("/sessions/{session_id}/stages/{stage}", status_code=202)
    async def post_stage(session_id: str, stage: str, body: dict | None = None):
        if stage not in PIPELINE_STAGES:
            raise ApiError("bad_stage_params", f"unknown stage {stage!r}")
        _load(session_id)  # 404 before we enqueue anything
        params = body or {}
        if not isinstance(params, dict):
            raise ApiError("bad_stage_params", "stage params must be an object")
        stage_kwargs = _stage_kwargs(runtime, stage, params)  # eager param validation
        job = jobs.start(session_id, stage)

        def progress(done: int, total: int):
            job.done, job.total = done, total

        def run():
            try:
                with locks.for_session(session_id):
                    session = _load(session_id)
                    outcome = _STAGE_RUNNERS[stage](session, runtime, progress=progress, **stage_kwargs)
                    store.save_session(session)
                jobs.finish(job, result=outcome.to_dict())
            except Exception as exc:
                api_error = _api_error_from(exc)
                jobs.finish(job, error={"code": api_error.code, "message": api_error.message})

        threading.Thread(target=run, daemon=True).start()
        return {"job_id": job.job_id}

    @app.get("/jobs/{job_id}")
    async def get_job(job_id: str):
        return jobs.get(job_id).to_dict()

    @app.get("/sessions/{session_id}/export")
    async def get_export(session_id: str):
        session = _load(session_id)
        try:
            return export_schema(session)
        except err.EmptyGraph as exc:
            raise ApiError("empty_graph", str(exc)) from exc

    @app.get("/sessions/{session_id}/metrics")
    async def get_metrics(session_id: str, k: int = 3):
        if k < 1:
            raise ApiError("bad_stage_params", "k must be >= 1")
        return session_report(_load(session_id), k=k).to_dict()

    return app


def _validated_ids(params: dict, key: str) -> list[str] | None:
    value = params.get(key)
    if value is None:
        return None
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ApiError("bad_stage_params", f"{key} must be an array of ids")
    return value


def _positive_int(params: dict, key: str) -> int | None:
    value = params.get(key)
    if value is None:
        return None
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ApiError("bad_stage_params", f"{key} must be a positive integer")
    return value


def _stage_kwargs(runtime: Runtime, stage: str, params: dict) -> dict:
    """Validate stage params up front; the job only runs if they are sane."""
    if stage == "step-generation":
        template_id = params.get("template_id", "sub-steps")
        try:
            runtime.registry.get(template_id)
        except err.UnknownTemplate as exc:
            raise ApiError("bad_stage_params", str(exc)) from exc
        render_params = params.get("params")
        if render_params is not None and not isinstance(render_params, dict):
            raise ApiError("bad_stage_params", "params must be an object")
        parent = params.get("parent_step_id")
        if parent is not None and not isinstance(parent, str):
            raise ApiError("bad_stage_params", "parent_step_id must be an id string")
        return {
            "template_id": template_id,
            "params": render_params,
            "count": _positive_int(params, "count"),
            "parent_step_id": parent,
        }
    if stage == "node-extraction":
        method = params.get("method", "llm")
        if method != "llm":
            raise ApiError("bad_stage_params", f"unknown extraction method {method!r}")
        return {"step_ids": _validated_ids(params, "step_ids"), "method": method}
    if stage == "graph-construction":
        return {"node_ids": _validated_ids(params, "node_ids")}
    # grounding
    method = params.get("method", "similarity")
    if method not in ("similarity", "inference"):
        raise ApiError("bad_stage_params", f"unknown grounding method {method!r}")
    if runtime.ontology is None:
        raise ApiError("bad_stage_params", "service has no ontology configured")
    if method == "similarity" and runtime.embeddings is None:
        raise ApiError("bad_stage_params", "service has no embeddings configured")
    node_ids = _validated_ids(params, "node_ids")
    if node_ids is None and params.get("node_id") is not None:
        if not isinstance(params["node_id"], str):
            raise ApiError("bad_stage_params", "node_id must be an id string")
        node_ids = [params["node_id"]]
    return {"node_ids": node_ids, "method": method, "k": _positive_int(params, "k")}


_STAGE_RUNNERS = {
    "step-generation": run_step_generation,
    "node-extraction": run_node_extraction,
    "graph-construction": run_graph_construction,
    "grounding": run_grounding,
}


def _changed_entities(session: SchemaSession, event) -> dict:
    """Echo the entities an event touched, for UI reconciliation."""
    payload = event.payload
    action = event.action
    if action in ("select-step", "edit-step", "add-step"):
        step = session.find_step(payload["step_id"])
        return {"step": step.to_dict() if step else None}
    if action == "delete-step":
        return {"deleted_step": payload["step_id"]}
    if action in ("select-node", "edit-node", "add-node"):
        node = session.find_node(payload["node_id"])
        return {"node": node.to_dict() if node else None}
    if action == "delete-node":
        return {"deleted_node": payload["node_id"]}
    if action in ("generate-steps",):
        return {"steps": [s.to_dict() for s in session.steps]}
    if action in ("extract-nodes",):
        return {"nodes": [n.to_dict() for n in session.nodes]}
    if action in ("build-graph", "add-edge", "delete-edge", "edit-edge", "add-graph-node", "delete-graph-node"):
        return {"graph": session.graph.to_dict()}
    if action in ("ground-query", "choose-grounding"):
        state = session.groundings.get(payload["node_id"])
        return {"grounding": {payload["node_id"]: state.to_dict() if state else None}}
    return {}
