"""Curation operations over a session, event-sourced.

Every mutation is a CurationEvent appended to the session log; the log is the
source of truth and `replay_log` rebuilds the exact session state from it.
Validation happens before any state or id-counter mutation so a rejected
event leaves the session untouched (otherwise replay would diverge).
"""

from __future__ import annotations

import copy
from uuid import uuid4

from .errors import EmptyScenario, MalformedPayload, UnknownEntity
from .model import (
    EDGE_KINDS,
    PROVENANCE_HUMAN_ADDED,
    PROVENANCE_HUMAN_EDITED,
    PROVENANCE_MODEL,
    STAGE_GRAPH_CONSTRUCTION,
    STAGE_GROUNDING,
    STAGE_NODE_EXTRACTION,
    STAGE_STEP_GENERATION,
    CurationEvent,
    Edge,
    EventNode,
    GraphNode,
    GroundingQuery,
    GroundingState,
    SchemaGraph,
    SchemaSession,
    Step,
    now_iso,
)

GROUNDING_METHODS = ("similarity", "inference")


def create_session(scenario: str, session_id: str | None = None, timestamp: str | None = None) -> SchemaSession:
    """New empty session at the step-generation stage, with its creation logged."""
    if not scenario or not scenario.strip():
        raise EmptyScenario("scenario must be non-empty")
    ts = timestamp or now_iso()
    session = SchemaSession(
        session_id=session_id or uuid4().hex[:12],
        scenario=scenario,
        created_at=ts,
        updated_at=ts,
    )
    event = CurationEvent(
        event_id=session.next_id("event"),
        actor="human",
        action="create-session",
        payload={"scenario": scenario},
        timestamp=ts,
    )
    session.curation_log.append(event)
    return session


def apply_curation(
    session: SchemaSession,
    action: str,
    payload: dict,
    actor: str = "human",
    timestamp: str | None = None,
) -> CurationEvent:
    """Validate, normalize (assign ids), mutate, and log one curation event.

    Returns the appended event; its payload carries any ids that were
    assigned, so replaying the log reproduces identical entities.
    """
    if action == "create-session":
        raise MalformedPayload("create-session is only legal as the first event")
    if action not in _VALIDATORS:
        raise MalformedPayload(f"unknown action {action!r}")
    if not isinstance(payload, dict):
        raise MalformedPayload("payload must be an object")
    payload = copy.deepcopy(payload)
    _VALIDATORS[action](session, payload)
    _NORMALIZERS.get(action, lambda s, p: None)(session, payload)
    event = CurationEvent(
        event_id=session.next_id("event"),
        actor=actor,
        action=action,
        payload=payload,
        timestamp=timestamp or now_iso(),
    )
    _MUTATORS[action](session, event)
    session.curation_log.append(event)
    session.updated_at = event.timestamp
    return event


def replay_log(log: list[CurationEvent], session_id: str) -> SchemaSession:
    """Rebuild a session from its event log alone."""
    if not log or log[0].action != "create-session":
        raise MalformedPayload("log must start with a create-session event")
    first = log[0]
    session = SchemaSession(
        session_id=session_id,
        scenario=first.payload["scenario"],
        created_at=first.timestamp,
        updated_at=first.timestamp,
    )
    session.note_id("event", first.event_id)
    session.curation_log.append(first)
    for event in log[1:]:
        _VALIDATORS[event.action](session, event.payload)
        session.note_id("event", event.event_id)
        _MUTATORS[event.action](session, event)
        session.curation_log.append(event)
        session.updated_at = event.timestamp
    return session


# --- validation helpers -----------------------------------------------------

def _require(payload: dict, key: str, kind: type | tuple, allow_none: bool = False):
    if key not in payload:
        raise MalformedPayload(f"payload missing {key!r}")
    value = payload[key]
    if value is None and allow_none:
        return value
    if not isinstance(value, kind):
        raise MalformedPayload(f"payload field {key!r} has wrong type")
    return value


def _require_text(payload: dict, key: str) -> str:
    value = _require(payload, key, str)
    if not value.strip():
        raise MalformedPayload(f"payload field {key!r} must be non-empty")
    return value


def _step_or_raise(session: SchemaSession, step_id: str) -> Step:
    step = session.find_step(step_id)
    if step is None:
        raise UnknownEntity(f"no step {step_id!r}")
    return step


def _node_or_raise(session: SchemaSession, node_id: str) -> EventNode:
    node = session.find_node(node_id)
    if node is None:
        raise UnknownEntity(f"no node {node_id!r}")
    return node


def _fresh_step_id(session: SchemaSession, step_id: str):
    if session.find_step(step_id) is not None:
        raise MalformedPayload(f"step id {step_id!r} already exists")


def _fresh_node_id(session: SchemaSession, node_id: str):
    if session.find_node(node_id) is not None:
        raise MalformedPayload(f"node id {node_id!r} already exists")


def _actor_provenance(actor: str) -> str:
    return "human" if actor == "human" else "model"


# --- per-action validators (no mutation; raise before anything changes) -----

def _v_generate_steps(session, payload):
    entries = _require(payload, "steps", list)
    seen_ids = set()
    for entry in entries:
        if not isinstance(entry, dict):
            raise MalformedPayload("each generated step must be an object")
        text = entry.get("text")
        if not isinstance(text, str) or not text.strip():
            raise MalformedPayload("generated step text must be non-empty")
        parent = entry.get("parent_step_id")
        if parent is not None:
            _step_or_raise(session, parent)
        step_id = entry.get("step_id")
        if step_id is not None:
            _fresh_step_id(session, step_id)
            if step_id in seen_ids:
                raise MalformedPayload(f"duplicate step id {step_id!r} in batch")
            seen_ids.add(step_id)


def _v_select_step(session, payload):
    _step_or_raise(session, _require_text(payload, "step_id"))
    _require(payload, "selected", bool)


def _v_edit_step(session, payload):
    _step_or_raise(session, _require_text(payload, "step_id"))
    _require_text(payload, "text")


def _v_add_step(session, payload):
    _require_text(payload, "text")
    parent = payload.get("parent_step_id")
    if parent is not None:
        _step_or_raise(session, parent)
    if payload.get("step_id") is not None:
        _fresh_step_id(session, payload["step_id"])


def _v_delete_step(session, payload):
    _step_or_raise(session, _require_text(payload, "step_id"))


def _v_extract_nodes(session, payload):
    entries = _require(payload, "nodes", list)
    seen_ids = set()
    for entry in entries:
        if not isinstance(entry, dict):
            raise MalformedPayload("each extracted node must be an object")
        for key in ("subject", "verb"):
            if not isinstance(entry.get(key), str) or not entry[key].strip():
                raise MalformedPayload(f"extracted node needs a non-empty {key!r}")
        obj = entry.get("object")
        if obj is not None and not isinstance(obj, str):
            raise MalformedPayload("node object must be text or null")
        source = entry.get("source_step_id")
        if source is not None:
            _step_or_raise(session, source)
        node_id = entry.get("node_id")
        if node_id is not None:
            _fresh_node_id(session, node_id)
            if node_id in seen_ids:
                raise MalformedPayload(f"duplicate node id {node_id!r} in batch")
            seen_ids.add(node_id)


def _v_select_node(session, payload):
    _node_or_raise(session, _require_text(payload, "node_id"))
    _require(payload, "selected", bool)


def _v_edit_node(session, payload):
    node = _node_or_raise(session, _require_text(payload, "node_id"))
    if not any(key in payload for key in ("subject", "verb", "object")):
        raise MalformedPayload("edit-node changes nothing")
    subject = payload.get("subject", node.subject)
    verb = payload.get("verb", node.verb)
    for name, value in (("subject", subject), ("verb", verb)):
        if not isinstance(value, str) or not value.strip():
            raise MalformedPayload(f"edit-node would leave {name!r} empty")
    obj = payload.get("object", node.object)
    if obj is not None and not isinstance(obj, str):
        raise MalformedPayload("node object must be text or null")


def _v_add_node(session, payload):
    for key in ("subject", "verb"):
        _require_text(payload, key)
    obj = payload.get("object")
    if obj is not None and not isinstance(obj, str):
        raise MalformedPayload("node object must be text or null")
    source = payload.get("source_step_id")
    if source is not None:
        _step_or_raise(session, source)
    if payload.get("node_id") is not None:
        _fresh_node_id(session, payload["node_id"])


def _v_delete_node(session, payload):
    _node_or_raise(session, _require_text(payload, "node_id"))


def _v_build_graph(session, payload):
    graph = _require(payload, "graph", dict)
    node_entries = graph.get("graph_nodes")
    edge_entries = graph.get("edges", [])
    if not isinstance(node_entries, list) or not isinstance(edge_entries, list):
        raise MalformedPayload("graph must carry graph_nodes and edges arrays")
    ids = set()
    for entry in node_entries:
        if not isinstance(entry, dict) or not isinstance(entry.get("node_id"), str):
            raise MalformedPayload("graph node entries need a node_id")
        node_id = entry["node_id"]
        if node_id in ids:
            raise MalformedPayload(f"duplicate graph node {node_id!r}")
        ids.add(node_id)
        if session.find_node(node_id) is None and not entry.get("label"):
            raise UnknownEntity(f"graph node {node_id!r} is neither an event node nor labeled")
    seen = set()
    for entry in edge_entries:
        if not isinstance(entry, dict):
            raise MalformedPayload("edge entries must be objects")
        source, target, kind = entry.get("source"), entry.get("target"), entry.get("kind")
        if kind not in EDGE_KINDS:
            raise MalformedPayload(f"unknown edge kind {kind!r}")
        if source not in ids or target not in ids:
            raise UnknownEntity(f"edge endpoint missing from graph: {source!r}->{target!r}")
        if source == target:
            raise MalformedPayload("self-loop edges are not allowed")
        if (source, target, kind) in seen:
            raise MalformedPayload(f"duplicate edge ({source}, {target}, {kind})")
        seen.add((source, target, kind))
    same_time = graph.get("same_time", [])
    if not isinstance(same_time, list):
        raise MalformedPayload("same_time must be an array of node-id pairs")
    for pair in same_time:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise MalformedPayload("same_time entries must be node-id pairs")


def _edge_key(payload) -> tuple[str, str, str]:
    source = payload.get("source")
    target = payload.get("target")
    kind = payload.get("kind")
    if not isinstance(source, str) or not isinstance(target, str):
        raise MalformedPayload("edge needs source and target ids")
    if kind not in EDGE_KINDS:
        raise MalformedPayload(f"unknown edge kind {kind!r}")
    return source, target, kind


def _v_add_edge(session, payload):
    source, target, kind = _edge_key(payload)
    if source == target:
        raise MalformedPayload("self-loop edges are not allowed")
    for endpoint in (source, target):
        if not session.graph.has_node(endpoint):
            raise UnknownEntity(f"graph has no node {endpoint!r}")
    if session.graph.find_edge(source, target, kind) is not None:
        raise MalformedPayload(f"edge ({source}, {target}, {kind}) already exists")


def _v_delete_edge(session, payload):
    source, target, kind = _edge_key(payload)
    if session.graph.find_edge(source, target, kind) is None:
        raise UnknownEntity(f"no edge ({source}, {target}, {kind})")


def _v_edit_edge(session, payload):
    source, target, kind = _edge_key(payload)
    if session.graph.find_edge(source, target, kind) is None:
        raise UnknownEntity(f"no edge ({source}, {target}, {kind})")
    if not any(key in payload for key in ("new_source", "new_target", "new_kind")):
        raise MalformedPayload("edit-edge changes nothing")
    new_source = payload.get("new_source", source)
    new_target = payload.get("new_target", target)
    new_kind = payload.get("new_kind", kind)
    if new_kind not in EDGE_KINDS:
        raise MalformedPayload(f"unknown edge kind {new_kind!r}")
    if new_source == new_target:
        raise MalformedPayload("self-loop edges are not allowed")
    for endpoint in (new_source, new_target):
        if not session.graph.has_node(endpoint):
            raise UnknownEntity(f"graph has no node {endpoint!r}")
    if (new_source, new_target, new_kind) != (source, target, kind):
        if session.graph.find_edge(new_source, new_target, new_kind) is not None:
            raise MalformedPayload(f"edge ({new_source}, {new_target}, {new_kind}) already exists")


def _v_add_graph_node(session, payload):
    node_id = payload.get("node_id")
    label = payload.get("label")
    if node_id is not None:
        if not isinstance(node_id, str):
            raise MalformedPayload("node_id must be text")
        if session.graph.has_node(node_id):
            raise MalformedPayload(f"graph already contains {node_id!r}")
        if session.find_node(node_id) is None and not label:
            raise UnknownEntity(f"graph node {node_id!r} is neither an event node nor labeled")
    else:
        if not isinstance(label, str) or not label.strip():
            raise MalformedPayload("add-graph-node needs a label or an event node id")
    if label is not None and not isinstance(label, str):
        raise MalformedPayload("label must be text")


def _v_delete_graph_node(session, payload):
    node_id = _require_text(payload, "node_id")
    if not session.graph.has_node(node_id):
        raise UnknownEntity(f"graph has no node {node_id!r}")


def _v_ground_query(session, payload):
    _node_or_raise(session, _require_text(payload, "node_id"))
    method = payload.get("method")
    if method not in GROUNDING_METHODS:
        raise MalformedPayload(f"unknown grounding method {method!r}")
    k = payload.get("k")
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise MalformedPayload("k must be an integer >= 1")
    candidates = _require(payload, "candidates", list)
    for entry in candidates:
        if not isinstance(entry, dict) or not isinstance(entry.get("xpo_id"), str):
            raise MalformedPayload("grounding candidates need an xpo_id")


def _v_choose_grounding(session, payload):
    _node_or_raise(session, _require_text(payload, "node_id"))
    xpo_id = payload.get("xpo_id")
    if xpo_id is not None and not isinstance(xpo_id, str):
        raise MalformedPayload("xpo_id must be text or null")
    relevant = payload.get("relevant_ids", [])
    if not isinstance(relevant, list) or not all(isinstance(r, str) for r in relevant):
        raise MalformedPayload("relevant_ids must be an array of ids")


# --- normalizers: assign ids so the logged payload replays exactly ----------

def _n_generate_steps(session, payload):
    for entry in payload["steps"]:
        if entry.get("step_id") is None:
            entry["step_id"] = session.next_id("step")


def _n_add_step(session, payload):
    if payload.get("step_id") is None:
        payload["step_id"] = session.next_id("step")


def _n_extract_nodes(session, payload):
    for entry in payload["nodes"]:
        if entry.get("node_id") is None:
            entry["node_id"] = session.next_id("node")


def _n_add_node(session, payload):
    if payload.get("node_id") is None:
        payload["node_id"] = session.next_id("node")


def _n_add_graph_node(session, payload):
    if payload.get("node_id") is None:
        payload["node_id"] = session.next_id("graph_node")


# --- mutators: assume validated; must not raise ------------------------------

def _m_generate_steps(session, event):
    for entry in event.payload["steps"]:
        session.note_id("step", entry["step_id"])
        session.steps.append(
            Step(
                step_id=entry["step_id"],
                text=entry["text"],
                selected=True,
                provenance=PROVENANCE_MODEL,
                parent_step_id=entry.get("parent_step_id"),
            )
        )
    session.stage_cursor = STAGE_STEP_GENERATION


def _m_select_step(session, event):
    session.find_step(event.payload["step_id"]).selected = event.payload["selected"]


def _m_edit_step(session, event):
    step = session.find_step(event.payload["step_id"])
    step.text = event.payload["text"]
    if step.provenance == PROVENANCE_MODEL:
        step.provenance = PROVENANCE_HUMAN_EDITED


def _m_add_step(session, event):
    session.note_id("step", event.payload["step_id"])
    session.steps.append(
        Step(
            step_id=event.payload["step_id"],
            text=event.payload["text"],
            selected=True,
            provenance=PROVENANCE_HUMAN_ADDED,
            parent_step_id=event.payload.get("parent_step_id"),
        )
    )


def _m_delete_step(session, event):
    step_id = event.payload["step_id"]
    session.steps = [s for s in session.steps if s.step_id != step_id]
    # Derived nodes are orphaned, never cascade-deleted; curator decides.
    for node in session.nodes:
        if node.source_step_id == step_id:
            node.source_step_id = None
            node.orphaned = True


def _m_extract_nodes(session, event):
    for entry in event.payload["nodes"]:
        session.note_id("node", entry["node_id"])
        session.nodes.append(
            EventNode(
                node_id=entry["node_id"],
                subject=entry["subject"],
                verb=entry["verb"],
                object=entry.get("object"),
                selected=True,
                provenance=PROVENANCE_MODEL,
                source_step_id=entry.get("source_step_id"),
            )
        )
    session.stage_cursor = STAGE_NODE_EXTRACTION


def _m_select_node(session, event):
    session.find_node(event.payload["node_id"]).selected = event.payload["selected"]


def _m_edit_node(session, event):
    node = session.find_node(event.payload["node_id"])
    if "subject" in event.payload:
        node.subject = event.payload["subject"]
    if "verb" in event.payload:
        node.verb = event.payload["verb"]
    if "object" in event.payload:
        node.object = event.payload["object"] or None
    node.relabel()
    if node.provenance == PROVENANCE_MODEL:
        node.provenance = PROVENANCE_HUMAN_EDITED


def _m_add_node(session, event):
    session.note_id("node", event.payload["node_id"])
    session.nodes.append(
        EventNode(
            node_id=event.payload["node_id"],
            subject=event.payload["subject"],
            verb=event.payload["verb"],
            object=event.payload.get("object"),
            selected=True,
            provenance=PROVENANCE_HUMAN_ADDED,
            source_step_id=event.payload.get("source_step_id"),
        )
    )


def _remove_graph_node(session, node_id):
    session.graph.graph_nodes = [n for n in session.graph.graph_nodes if n.node_id != node_id]
    session.graph.edges = [e for e in session.graph.edges if node_id not in (e.source, e.target)]
    session.graph.same_time = [p for p in session.graph.same_time if node_id not in p]


def _m_delete_node(session, event):
    node_id = event.payload["node_id"]
    session.nodes = [n for n in session.nodes if n.node_id != node_id]
    if session.graph.has_node(node_id):
        _remove_graph_node(session, node_id)
    session.groundings.pop(node_id, None)


def _m_build_graph(session, event):
    graph = event.payload["graph"]
    nodes = []
    for entry in graph["graph_nodes"]:
        session.note_id("graph_node", entry["node_id"])
        label = entry.get("label")
        if session.find_node(entry["node_id"]) is not None:
            label = None
        nodes.append(
            GraphNode(
                node_id=entry["node_id"],
                label=label,
                provenance=entry.get("provenance", _actor_provenance(event.actor)),
            )
        )
    edges = [
        Edge(
            source=entry["source"],
            target=entry["target"],
            kind=entry["kind"],
            provenance=entry.get("provenance", _actor_provenance(event.actor)),
        )
        for entry in graph.get("edges", [])
    ]
    same_time = [tuple(pair) for pair in graph.get("same_time", [])]
    session.graph = SchemaGraph(graph_nodes=nodes, edges=edges, same_time=same_time)
    session.stage_cursor = STAGE_GRAPH_CONSTRUCTION


def _m_add_edge(session, event):
    session.graph.edges.append(
        Edge(
            source=event.payload["source"],
            target=event.payload["target"],
            kind=event.payload["kind"],
            provenance=_actor_provenance(event.actor),
        )
    )


def _m_delete_edge(session, event):
    key = (event.payload["source"], event.payload["target"], event.payload["kind"])
    session.graph.edges = [e for e in session.graph.edges if e.identity() != key]


def _m_edit_edge(session, event):
    payload = event.payload
    old = (payload["source"], payload["target"], payload["kind"])
    new = Edge(
        source=payload.get("new_source", old[0]),
        target=payload.get("new_target", old[1]),
        kind=payload.get("new_kind", old[2]),
        provenance=_actor_provenance(event.actor),
    )
    session.graph.edges = [e for e in session.graph.edges if e.identity() != old]
    session.graph.edges.append(new)


def _m_add_graph_node(session, event):
    node_id = event.payload["node_id"]
    session.note_id("graph_node", node_id)
    label = event.payload.get("label")
    if session.find_node(node_id) is not None:
        label = None
    session.graph.graph_nodes.append(
        GraphNode(node_id=node_id, label=label, provenance=_actor_provenance(event.actor))
    )


def _m_delete_graph_node(session, event):
    _remove_graph_node(session, event.payload["node_id"])


def _m_ground_query(session, event):
    state = session.groundings.setdefault(event.payload["node_id"], GroundingState())
    state.queries.append(
        GroundingQuery(
            method=event.payload["method"],
            k=event.payload["k"],
            candidates=list(event.payload["candidates"]),
        )
    )
    session.stage_cursor = STAGE_GROUNDING


def _m_choose_grounding(session, event):
    state = session.groundings.setdefault(event.payload["node_id"], GroundingState())
    xpo_id = event.payload.get("xpo_id")
    state.chosen_xpo_id = xpo_id
    marks = set(state.relevant_ids)
    provided = event.payload.get("relevant_ids")
    if provided:
        marks.update(provided)
    elif xpo_id:
        marks.add(xpo_id)
    state.relevant_ids = sorted(marks)


_VALIDATORS = {
    "generate-steps": _v_generate_steps,
    "select-step": _v_select_step,
    "edit-step": _v_edit_step,
    "add-step": _v_add_step,
    "delete-step": _v_delete_step,
    "extract-nodes": _v_extract_nodes,
    "select-node": _v_select_node,
    "edit-node": _v_edit_node,
    "add-node": _v_add_node,
    "delete-node": _v_delete_node,
    "build-graph": _v_build_graph,
    "add-edge": _v_add_edge,
    "delete-edge": _v_delete_edge,
    "edit-edge": _v_edit_edge,
    "add-graph-node": _v_add_graph_node,
    "delete-graph-node": _v_delete_graph_node,
    "ground-query": _v_ground_query,
    "choose-grounding": _v_choose_grounding,
}

_NORMALIZERS = {
    "generate-steps": _n_generate_steps,
    "add-step": _n_add_step,
    "extract-nodes": _n_extract_nodes,
    "add-node": _n_add_node,
    "add-graph-node": _n_add_graph_node,
}

_MUTATORS = {
    "generate-steps": _m_generate_steps,
    "select-step": _m_select_step,
    "edit-step": _m_edit_step,
    "add-step": _m_add_step,
    "delete-step": _m_delete_step,
    "extract-nodes": _m_extract_nodes,
    "select-node": _m_select_node,
    "edit-node": _m_edit_node,
    "add-node": _m_add_node,
    "delete-node": _m_delete_node,
    "build-graph": _m_build_graph,
    "add-edge": _m_add_edge,
    "delete-edge": _m_delete_edge,
    "edit-edge": _m_edit_edge,
    "add-graph-node": _m_add_graph_node,
    "delete-graph-node": _m_delete_graph_node,
    "ground-query": _m_ground_query,
    "choose-grounding": _m_choose_grounding,
}
