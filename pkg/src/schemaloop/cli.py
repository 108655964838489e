"""Headless pipeline driver and service launcher.

Exit codes: 0 success, 1 pipeline error, 2 configuration error. Errors print
as one-line JSON diagnostics shaped like the API's error envelope.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import errors as err
from .curation import apply_curation, create_session
from .grounding import load_embeddings, load_ontology
from .grounding.entailment import HttpEntailmentScorer
from .llm import ProviderConfig, resolve_provider
from .metrics import session_report
from .model import ACTIONS, SchemaSession
from .pipeline import (
    Runtime,
    run_graph_construction,
    run_grounding,
    run_node_extraction,
    run_step_generation,
)
from .store import SessionStore, export_bytes

STAGE_ALIASES = {
    "steps": "step-generation",
    "nodes": "node-extraction",
    "graph": "graph-construction",
    "grounding": "grounding",
}
STAGE_ORDER = ("steps", "nodes", "graph", "grounding")

ENV_SESSION_DIR = "SCHEMALOOP_SESSION_DIR"
ENV_PROVIDER_CONFIG = "SCHEMALOOP_PROVIDER_CONFIG"
ENV_ONTOLOGY = "SCHEMALOOP_ONTOLOGY"
ENV_EMBEDDINGS = "SCHEMALOOP_EMBEDDINGS"
ENV_ENTAILMENT_URL = "SCHEMALOOP_ENTAILMENT_URL"
ENV_BIND = "SCHEMALOOP_BIND"


class ConfigError(Exception):
    """Bad flags/environment; maps to exit code 2."""


def load_edit_file(path: str | Path) -> list[dict]:
    """Parse and pre-validate an edit file: a JSON array of {action, payload}.

    Validation is all-or-nothing at the structural level here; entity-level
    validation happens when the batch is applied (also all-or-nothing).
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise err.MalformedPayload(f"unreadable edit file {path}: {exc}") from exc
    if not isinstance(raw, list):
        raise err.MalformedPayload("edit file must be a JSON array of events")
    for index, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise err.MalformedPayload(f"edit {index}: not an object")
        if entry.get("action") not in ACTIONS:
            raise err.MalformedPayload(f"edit {index}: unknown action {entry.get('action')!r}")
        if not isinstance(entry.get("payload"), dict):
            raise err.MalformedPayload(f"edit {index}: payload must be an object")
        if entry.get("actor", "human") not in ("human", "model"):
            raise err.MalformedPayload(f"edit {index}: unknown actor")
    return raw


def apply_edit_file(session: SchemaSession, edits: list[dict]) -> SchemaSession:
    """Apply a batch of curation events all-or-nothing.

    The batch runs against a copy; only if every event applies does the copy
    replace the caller's session (returned).
    """
    trial = SchemaSession.from_dict(session.to_dict())
    for entry in edits:
        apply_curation(trial, entry["action"], entry["payload"], actor=entry.get("actor", "human"))
    return trial


def run_pipeline(
    scenario: str,
    provider_config: ProviderConfig,
    *,
    session_dir: str | Path,
    stages: tuple[str, ...] = STAGE_ORDER,
    edits_after: dict[str, str] | None = None,
    template_id: str = "sub-steps",
    count: int | None = None,
    method: str = "similarity",
    k: int = 3,
    ontology_path: str | Path | None = None,
    embeddings_path: str | Path | None = None,
    entailment_url: str | None = None,
    concurrency: int = 1,
) -> tuple[SchemaSession, bytes | None]:
    """Execute the requested stages end to end and export the schema.

    All generated steps and nodes stay selected unless an edit file hooked
    after a stage intervenes. Returns (session, export bytes); the export is
    None when the session has no graph (the session is still saved).
    """
    provider = resolve_provider(provider_config)
    runtime = Runtime(
        provider=provider,
        k=k,
        concurrency=concurrency,
        decoding=provider_config.extra.get("decoding", {}),
    )
    if "grounding" in stages:
        if not ontology_path:
            raise ConfigError("grounding stage needs --ontology")
        if method == "similarity" and not embeddings_path:
            raise ConfigError("similarity grounding needs --embeddings")
        runtime.ontology = load_ontology(ontology_path)
        if embeddings_path:
            runtime.embeddings = load_embeddings(embeddings_path)
        if entailment_url:
            runtime.scorer = HttpEntailmentScorer(entailment_url)

    hooks = dict(edits_after or {})
    for stage in hooks:
        if stage not in STAGE_ALIASES:
            raise ConfigError(f"unknown stage {stage!r} in --edits-after")
    loaded_edits = {stage: load_edit_file(path) for stage, path in hooks.items()}

    session = create_session(scenario)
    store = SessionStore(session_dir)
    for stage in STAGE_ORDER:
        if stage not in stages:
            continue
        if stage == "steps":
            run_step_generation(session, runtime, template_id=template_id, count=count)
        elif stage == "nodes":
            run_node_extraction(session, runtime)
        elif stage == "graph":
            run_graph_construction(session, runtime)
        elif stage == "grounding":
            run_grounding(session, runtime, method=method, k=k)
        if stage in loaded_edits:
            session = apply_edit_file(session, loaded_edits[stage])
    store.save_session(session)

    try:
        document = export_bytes(session)
    except err.EmptyGraph:
        document = None
    return session, document


def format_report(report) -> str:
    def ratio(value):
        return f"{value} ({value.value:.3f})" if value else "n/a"

    def count(value):
        return str(value) if value is not None else "n/a"

    rows = [
        ("Step Acc", ratio(report.step_accuracy)),
        ("Node Acc", ratio(report.node_accuracy)),
        ("Graph Node ED", count(report.graph_node_edit_distance)),
        ("Graph Edge ED", count(report.graph_edge_edit_distance)),
        ("Grounding Success", ratio(report.grounding_success_rate)),
        ("Elapsed (s)", count(report.elapsed_s)),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name.ljust(width)}  {value}" for name, value in rows)


def _diagnostic(code: str, message: str):
    print(json.dumps({"error": {"code": code, "message": message}}), file=sys.stderr)


def _parse_args(argv):
    parser = argparse.ArgumentParser(prog="schemaloop", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the pipeline end to end")
    run.add_argument("--scenario", required=True)
    run.add_argument("--provider-config", default=os.environ.get(ENV_PROVIDER_CONFIG))
    run.add_argument("--stages", default=",".join(STAGE_ORDER), help="comma list of steps,nodes,graph,grounding")
    run.add_argument(
        "--edits-after",
        action="append",
        default=[],
        metavar="STAGE:FILE",
        help="apply a curation edit file after the named stage (repeatable)",
    )
    run.add_argument("--out", help="write the export document here (default: stdout)")
    run.add_argument("--k", type=int, default=3)
    run.add_argument("--template", default="sub-steps", help="step-generation template id")
    run.add_argument("--count", type=int, default=None, help="keep at most this many generated steps")
    run.add_argument("--method", default="similarity", choices=["similarity", "inference"])
    run.add_argument("--ontology", default=os.environ.get(ENV_ONTOLOGY))
    run.add_argument("--embeddings", default=os.environ.get(ENV_EMBEDDINGS))
    run.add_argument("--entailment-url", default=os.environ.get(ENV_ENTAILMENT_URL))
    run.add_argument("--session-dir", default=os.environ.get(ENV_SESSION_DIR, "sessions"))
    run.add_argument("--concurrency", type=int, default=1)

    ev = sub.add_parser("eval", help="print the evaluation report for a session")
    ev.add_argument("session_id")
    ev.add_argument("--session-dir", default=os.environ.get(ENV_SESSION_DIR, "sessions"))
    ev.add_argument("--k", type=int, default=3)

    serve = sub.add_parser("serve", help="start the HTTP API")
    serve.add_argument("--bind", default=os.environ.get(ENV_BIND, "127.0.0.1:8000"))
    serve.add_argument("--provider-config", default=os.environ.get(ENV_PROVIDER_CONFIG))
    serve.add_argument("--session-dir", default=os.environ.get(ENV_SESSION_DIR, "sessions"))
    serve.add_argument("--ontology", default=os.environ.get(ENV_ONTOLOGY))
    serve.add_argument("--embeddings", default=os.environ.get(ENV_EMBEDDINGS))
    serve.add_argument("--entailment-url", default=os.environ.get(ENV_ENTAILMENT_URL))
    serve.add_argument("--k", type=int, default=3)
    serve.add_argument("--concurrency", type=int, default=4)

    return parser.parse_args(argv)


def _cmd_run(args) -> int:
    if not args.provider_config:
        _diagnostic("bad_stage_params", "no provider config (flag --provider-config or env)")
        return 2
    try:
        provider_config = ProviderConfig.from_file(args.provider_config)
    except (OSError, json.JSONDecodeError, err.UnknownProviderKind) as exc:
        _diagnostic("bad_stage_params", f"provider config: {exc}")
        return 2

    stages = tuple(s.strip() for s in args.stages.split(",") if s.strip())
    for stage in stages:
        if stage not in STAGE_ALIASES:
            _diagnostic("bad_stage_params", f"unknown stage {stage!r}")
            return 2
    edits_after = {}
    for hook in args.edits_after:
        stage, _, path = hook.partition(":")
        if not path or stage not in STAGE_ALIASES:
            _diagnostic("bad_stage_params", f"bad --edits-after value {hook!r}")
            return 2
        edits_after[stage] = path

    try:
        session, document = run_pipeline(
            args.scenario,
            provider_config,
            session_dir=args.session_dir,
            stages=stages,
            edits_after=edits_after,
            template_id=args.template,
            count=args.count,
            method=args.method,
            k=args.k,
            ontology_path=args.ontology,
            embeddings_path=args.embeddings,
            entailment_url=args.entailment_url,
            concurrency=args.concurrency,
        )
    except ConfigError as exc:
        _diagnostic("bad_stage_params", str(exc))
        return 2
    except (err.UnknownProviderKind, err.MissingCredential, err.MalformedScriptFile) as exc:
        _diagnostic("bad_stage_params", str(exc))
        return 2
    except err.SchemaloopError as exc:
        _diagnostic("llm_failure" if isinstance(exc, (err.ProviderError, err.TransportError)) else "malformed_payload", str(exc))
        return 1

    print(session.session_id)
    if document is None:
        _diagnostic("empty_graph", "session has no graph to export; session saved")
        return 1
    if args.out:
        Path(args.out).write_bytes(document)
    else:
        sys.stdout.write(document.decode("utf-8"))
    return 0


def _cmd_eval(args) -> int:
    store = SessionStore(args.session_dir)
    try:
        session = store.load_session(args.session_id)
    except err.NotFound as exc:
        _diagnostic("unknown_session", str(exc))
        return 1
    print(format_report(session_report(session, k=args.k)))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    if not args.provider_config:
        _diagnostic("bad_stage_params", "no provider config (flag --provider-config or env)")
        return 2
    try:
        provider_config = ProviderConfig.from_file(args.provider_config)
        provider = resolve_provider(provider_config)
        runtime = Runtime(
            provider=provider,
            k=args.k,
            concurrency=args.concurrency,
            decoding=provider_config.extra.get("decoding", {}),
        )
        if args.ontology:
            runtime.ontology = load_ontology(args.ontology)
        if args.embeddings:
            runtime.embeddings = load_embeddings(args.embeddings)
        if args.entailment_url:
            runtime.scorer = HttpEntailmentScorer(args.entailment_url)
    except err.SchemaloopError as exc:
        _diagnostic("bad_stage_params", str(exc))
        return 2
    host, _, port = args.bind.partition(":")
    app = create_app(SessionStore(args.session_dir), runtime)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
    return 0


def main(argv=None) -> int:
    args = _parse_args(argv if argv is not None else sys.argv[1:])
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "eval":
        return _cmd_eval(args)
    return _cmd_serve(args)


if __name__ == "__main__":
    sys.exit(main())
