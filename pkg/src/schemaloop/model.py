"""Session data model: steps, event nodes, schema graph, curation log.

Everything is a plain dataclass with symmetric to_dict/from_dict so the
event-sourced store can round-trip sessions byte-for-byte. Entity ids are
deterministic per session (s1.., n1.., g1.., e1..) so that edit files can
reference them and exports are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

STAGE_STEP_GENERATION = "step-generation"
STAGE_NODE_EXTRACTION = "node-extraction"
STAGE_GRAPH_CONSTRUCTION = "graph-construction"
STAGE_GROUNDING = "grounding"
PIPELINE_STAGES = (
    STAGE_STEP_GENERATION,
    STAGE_NODE_EXTRACTION,
    STAGE_GRAPH_CONSTRUCTION,
    STAGE_GROUNDING,
)

PROVENANCE_MODEL = "model"
PROVENANCE_HUMAN_EDITED = "human-edited"
PROVENANCE_HUMAN_ADDED = "human-added"

EDGE_TEMPORAL = "temporal"
EDGE_HIERARCHICAL = "hierarchical"
EDGE_KINDS = (EDGE_TEMPORAL, EDGE_HIERARCHICAL)

ACTIONS = (
    "create-session",
    "generate-steps",
    "select-step",
    "edit-step",
    "add-step",
    "delete-step",
    "extract-nodes",
    "select-node",
    "edit-node",
    "add-node",
    "delete-node",
    "build-graph",
    "add-edge",
    "delete-edge",
    "edit-edge",
    "add-graph-node",
    "delete-graph-node",
    "ground-query",
    "choose-grounding",
)


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def node_label(subject: str, verb: str, object: str | None = None) -> str:
    """Concatenated "subject verb object" with whitespace normalized; object omitted when absent."""
    parts = [subject, verb]
    if object:
        parts.append(object)
    return " ".join(" ".join(parts).split())


@dataclass
class Step:
    step_id: str
    text: str
    selected: bool = True
    provenance: str = PROVENANCE_MODEL
    parent_step_id: str | None = None

    def to_dict(self) -> dict:
        return {
            "step_id": self.step_id,
            "text": self.text,
            "selected": self.selected,
            "provenance": self.provenance,
            "parent_step_id": self.parent_step_id,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Step":
        return cls(
            step_id=raw["step_id"],
            text=raw["text"],
            selected=raw["selected"],
            provenance=raw["provenance"],
            parent_step_id=raw.get("parent_step_id"),
        )


@dataclass
class EventNode:
    node_id: str
    subject: str
    verb: str
    object: str | None = None
    label: str = ""
    selected: bool = True
    provenance: str = PROVENANCE_MODEL
    source_step_id: str | None = None
    orphaned: bool = False  # source step was deleted; node kept for curator review

    def __post_init__(self):
        if not self.label:
            self.label = node_label(self.subject, self.verb, self.object)

    def relabel(self):
        self.label = node_label(self.subject, self.verb, self.object)

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "subject": self.subject,
            "verb": self.verb,
            "object": self.object,
            "label": self.label,
            "selected": self.selected,
            "provenance": self.provenance,
            "source_step_id": self.source_step_id,
            "orphaned": self.orphaned,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "EventNode":
        return cls(
            node_id=raw["node_id"],
            subject=raw["subject"],
            verb=raw["verb"],
            object=raw.get("object"),
            label=raw.get("label", ""),
            selected=raw.get("selected", True),
            provenance=raw["provenance"],
            source_step_id=raw.get("source_step_id"),
            orphaned=raw.get("orphaned", False),
        )


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    kind: str
    provenance: str = PROVENANCE_MODEL

    def identity(self) -> tuple[str, str, str]:
        return (self.source, self.target, self.kind)

    def to_dict(self) -> dict:
        return {"source": self.source, "target": self.target, "kind": self.kind, "provenance": self.provenance}

    @classmethod
    def from_dict(cls, raw: dict) -> "Edge":
        return cls(
            source=raw["source"],
            target=raw["target"],
            kind=raw["kind"],
            provenance=raw.get("provenance", PROVENANCE_MODEL),
        )


@dataclass
class GraphNode:
    """Graph membership record: an EventNode ref (label None) or a labeled extra node (e.g. scenario root)."""

    node_id: str
    label: str | None = None
    provenance: str = PROVENANCE_MODEL

    def to_dict(self) -> dict:
        return {"node_id": self.node_id, "label": self.label, "provenance": self.provenance}

    @classmethod
    def from_dict(cls, raw: dict) -> "GraphNode":
        return cls(node_id=raw["node_id"], label=raw.get("label"), provenance=raw.get("provenance", PROVENANCE_MODEL))


@dataclass
class SchemaGraph:
    graph_nodes: list[GraphNode] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)
    # Same-time answers never become edges; kept as annotations for the curator.
    same_time: list[tuple[str, str]] = field(default_factory=list)

    def node_ids(self) -> set[str]:
        return {n.node_id for n in self.graph_nodes}

    def has_node(self, node_id: str) -> bool:
        return any(n.node_id == node_id for n in self.graph_nodes)

    def find_edge(self, source: str, target: str, kind: str) -> Edge | None:
        for edge in self.edges:
            if edge.identity() == (source, target, kind):
                return edge
        return None

    def validate(self):
        ids = self.node_ids()
        seen = set()
        for edge in self.edges:
            if edge.source == edge.target:
                raise ValueError(f"self-loop edge on {edge.source}")
            if edge.identity() in seen:
                raise ValueError(f"duplicate edge {edge.identity()}")
            seen.add(edge.identity())
            if edge.source not in ids or edge.target not in ids:
                raise ValueError(f"edge endpoint missing from graph: {edge.identity()}")

    def to_dict(self) -> dict:
        return {
            "graph_nodes": [n.to_dict() for n in self.graph_nodes],
            "edges": [e.to_dict() for e in self.edges],
            "same_time": [list(pair) for pair in self.same_time],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "SchemaGraph":
        return cls(
            graph_nodes=[GraphNode.from_dict(n) for n in raw.get("graph_nodes", [])],
            edges=[Edge.from_dict(e) for e in raw.get("edges", [])],
            same_time=[tuple(pair) for pair in raw.get("same_time", [])],
        )


@dataclass
class GroundingQuery:
    method: str  # similarity | inference
    k: int
    candidates: list[dict]  # {xpo_id, name, score, rank, method}

    def to_dict(self) -> dict:
        return {"method": self.method, "k": self.k, "candidates": self.candidates}

    @classmethod
    def from_dict(cls, raw: dict) -> "GroundingQuery":
        return cls(method=raw["method"], k=raw["k"], candidates=list(raw.get("candidates", [])))


@dataclass
class GroundingState:
    chosen_xpo_id: str | None = None
    relevant_ids: list[str] = field(default_factory=list)
    queries: list[GroundingQuery] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "chosen_xpo_id": self.chosen_xpo_id,
            "relevant_ids": self.relevant_ids,
            "queries": [q.to_dict() for q in self.queries],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "GroundingState":
        return cls(
            chosen_xpo_id=raw.get("chosen_xpo_id"),
            relevant_ids=list(raw.get("relevant_ids", [])),
            queries=[GroundingQuery.from_dict(q) for q in raw.get("queries", [])],
        )


@dataclass
class CurationEvent:
    event_id: str
    actor: str  # model | human
    action: str
    payload: dict
    timestamp: str

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ValueError(f"unknown curation action {self.action!r}")
        if self.actor not in ("model", "human"):
            raise ValueError(f"unknown actor {self.actor!r}")

    def to_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "actor": self.actor,
            "action": self.action,
            "payload": self.payload,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "CurationEvent":
        return cls(
            event_id=raw["event_id"],
            actor=raw["actor"],
            action=raw["action"],
            payload=raw["payload"],
            timestamp=raw["timestamp"],
        )


@dataclass
class SchemaSession:
    session_id: str
    scenario: str
    stage_cursor: str = STAGE_STEP_GENERATION
    steps: list[Step] = field(default_factory=list)
    nodes: list[EventNode] = field(default_factory=list)
    graph: SchemaGraph = field(default_factory=SchemaGraph)
    groundings: dict[str, GroundingState] = field(default_factory=dict)
    curation_log: list[CurationEvent] = field(default_factory=list)
    created_at: str = ""
    updated_at: str = ""
    # Monotonic id counters (last index used); never reset on delete so ids
    # are unique across the whole session history.
    counters: dict[str, int] = field(default_factory=lambda: {"step": 0, "node": 0, "graph_node": 0, "event": 0})

    # -- id assignment ------------------------------------------------------

    def next_id(self, kind: str) -> str:
        prefix = {"step": "s", "node": "n", "graph_node": "g", "event": "e"}[kind]
        self.counters[kind] += 1
        return f"{prefix}{self.counters[kind]}"

    def note_id(self, kind: str, entity_id: str):
        """Advance the counter past an externally supplied id like "s7"."""
        prefix = {"step": "s", "node": "n", "graph_node": "g", "event": "e"}[kind]
        if entity_id.startswith(prefix) and entity_id[len(prefix):].isdigit():
            self.counters[kind] = max(self.counters[kind], int(entity_id[len(prefix):]))

    # -- lookups ------------------------------------------------------------

    def find_step(self, step_id: str) -> Step | None:
        for step in self.steps:
            if step.step_id == step_id:
                return step
        return None

    def find_node(self, node_id: str) -> EventNode | None:
        for node in self.nodes:
            if node.node_id == node_id:
                return node
        return None

    def graph_label(self, node_id: str) -> str | None:
        """Display label for a graph node: the EventNode label or the extra node's own label."""
        node = self.find_node(node_id)
        if node is not None:
            return node.label
        for gn in self.graph.graph_nodes:
            if gn.node_id == node_id:
                return gn.label
        return None

    # -- serialization ------------------------------------------------------

    def state_dict(self) -> dict:
        """Snapshot of everything except the curation log."""
        return {
            "session_id": self.session_id,
            "scenario": self.scenario,
            "stage_cursor": self.stage_cursor,
            "steps": [s.to_dict() for s in self.steps],
            "nodes": [n.to_dict() for n in self.nodes],
            "graph": self.graph.to_dict(),
            "groundings": {nid: g.to_dict() for nid, g in sorted(self.groundings.items())},
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "counters": dict(self.counters),
        }

    def to_dict(self) -> dict:
        out = self.state_dict()
        out["curation_log"] = [e.to_dict() for e in self.curation_log]
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "SchemaSession":
        return cls(
            session_id=raw["session_id"],
            scenario=raw["scenario"],
            stage_cursor=raw["stage_cursor"],
            steps=[Step.from_dict(s) for s in raw.get("steps", [])],
            nodes=[EventNode.from_dict(n) for n in raw.get("nodes", [])],
            graph=SchemaGraph.from_dict(raw.get("graph", {})),
            groundings={nid: GroundingState.from_dict(g) for nid, g in raw.get("groundings", {}).items()},
            curation_log=[CurationEvent.from_dict(e) for e in raw.get("curation_log", [])],
            created_at=raw.get("created_at", ""),
            updated_at=raw.get("updated_at", ""),
            counters=dict(raw.get("counters", {"step": 0, "node": 0, "graph_node": 0, "event": 0})),
        )
