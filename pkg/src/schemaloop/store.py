"""Durable session persistence and schema export.

One JSON file per session (log + snapshot); writes are atomic
(write-temp-then-rename) and the log is append-only — a save whose log does
not extend the stored one is refused. On load the snapshot is verified by
replaying the log; a mismatch falls back to the replayed state with a
warning, because the log is the source of truth.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from pathlib import Path

from .curation import replay_log
from .errors import CorruptRecord, EmptyGraph, NotFound, StorageFailure
from .graphbuild import detect_temporal_cycles, multi_parent_nodes
from .model import CurationEvent, SchemaSession

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class SessionStore:
    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, session_id: str) -> Path:
        return self.directory / f"{session_id}.json"

    def save_session(self, session: SchemaSession) -> str:
        """Atomically persist log + snapshot; returns the session id."""
        record = {
            "schema_version": SCHEMA_VERSION,
            "session_id": session.session_id,
            "scenario": session.scenario,
            "log": [event.to_dict() for event in session.curation_log],
            "snapshot": session.state_dict(),
        }
        path = self._path(session.session_id)
        if path.exists():
            self._check_log_extends(path, record["log"])
        try:
            fd, tmp_name = tempfile.mkstemp(dir=self.directory, prefix=".tmp-", suffix=".json")
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                json.dump(record, handle, indent=2, ensure_ascii=False)
                handle.write("\n")
            os.replace(tmp_name, path)
        except OSError as exc:
            raise StorageFailure(f"could not persist session {session.session_id}: {exc}") from exc
        return session.session_id

    def _check_log_extends(self, path: Path, new_log: list[dict]):
        try:
            existing = json.loads(path.read_text(encoding="utf-8")).get("log", [])
        except (OSError, json.JSONDecodeError):
            return  # existing record unreadable; overwrite is the best recovery
        if len(new_log) < len(existing) or new_log[: len(existing)] != existing:
            raise StorageFailure(
                f"refusing to save {path.name}: new log does not extend the stored log"
            )

    def load_session(self, session_id: str) -> SchemaSession:
        """Snapshot after replay-verification; mismatches rebuild from the log."""
        path = self._path(session_id)
        if not path.exists():
            raise NotFound(f"no session {session_id!r}")
        try:
            record = json.loads(path.read_text(encoding="utf-8"))
            raw_log = record["log"]
            events = [CurationEvent.from_dict(entry) for entry in raw_log]
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CorruptRecord(f"session {session_id!r} log unreadable: {exc}") from exc

        replayed = replay_log(events, session_id=session_id)
        snapshot = record.get("snapshot")
        if snapshot != replayed.state_dict():
            log.warning("session %s snapshot does not match its log; rebuilt from log", session_id)
        return replayed

    def list_sessions(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("*.json") if not p.name.startswith("."))


def export_schema(session: SchemaSession) -> dict:
    """Self-contained schema document: nodes, edges, provenance, warnings.

    Deterministic by construction — no timestamps, no session id, arrays in
    graph order — so identical sessions export byte-identically.
    """
    if not session.graph.graph_nodes:
        raise EmptyGraph("session has no graph to export")

    nodes = []
    node_provenance: dict[str, int] = {}
    for graph_node in session.graph.graph_nodes:
        event_node = session.find_node(graph_node.node_id)
        if event_node is not None:
            grounding = session.groundings.get(graph_node.node_id)
            entry = {
                "id": event_node.node_id,
                "kind": "event",
                "subject": event_node.subject,
                "verb": event_node.verb,
                "object": event_node.object,
                "label": event_node.label,
                "grounding": grounding.chosen_xpo_id if grounding else None,
                "provenance": event_node.provenance,
            }
        else:
            entry = {
                "id": graph_node.node_id,
                "kind": "extra",
                "subject": None,
                "verb": None,
                "object": None,
                "label": graph_node.label,
                "grounding": None,
                "provenance": graph_node.provenance,
            }
        node_provenance[entry["provenance"]] = node_provenance.get(entry["provenance"], 0) + 1
        nodes.append(entry)

    edges = []
    edge_provenance: dict[str, int] = {}
    for edge in session.graph.edges:
        edges.append(
            {"source": edge.source, "target": edge.target, "kind": edge.kind, "provenance": edge.provenance}
        )
        edge_provenance[edge.provenance] = edge_provenance.get(edge.provenance, 0) + 1

    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": session.scenario,
        "nodes": nodes,
        "edges": edges,
        "same_time": [list(pair) for pair in session.graph.same_time],
        "provenance": {"nodes": node_provenance, "edges": edge_provenance},
        "warnings": {
            "temporal_cycles": detect_temporal_cycles(session.graph),
            "multi_parent": multi_parent_nodes(session.graph),
        },
    }


def export_bytes(session: SchemaSession) -> bytes:
    """Canonical serialization of the export document (sorted keys, 2-space indent)."""
    doc = export_schema(session)
    return (json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
