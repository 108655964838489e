"""Evaluation metrics: selection accuracy, graph edit distance, grounding success.

Ratios are kept as exact fractions (numerator/denominator) and only rendered
as decimals at the edges. Graph edit distance is id-anchored symmetric
difference — curation preserves entity ids, so counting added plus deleted
nodes/edges is exact, no search needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import EmptyRecordSet
from .model import PROVENANCE_HUMAN_ADDED, SchemaGraph, SchemaSession


@dataclass(frozen=True)
class Ratio:
    """Exact fraction; den > 0."""

    num: int
    den: int

    def __post_init__(self):
        if self.den <= 0:
            raise ZeroDivisionError("ratio denominator must be positive")
        if not 0 <= self.num <= self.den:
            raise ValueError("ratio numerator out of range")

    @property
    def value(self) -> float:
        return self.num / self.den

    def __str__(self) -> str:
        return f"{self.num}/{self.den}"

    def to_dict(self) -> dict:
        return {"num": self.num, "den": self.den}


def selection_accuracy(generated_count: int, selected_count: int) -> Ratio:
    """Human-kept over machine-generated, as an exact fraction."""
    if generated_count == 0:
        raise ZeroDivisionError("no generated items to measure against")
    if not 0 <= selected_count <= generated_count:
        raise ValueError("selected count must be between 0 and generated count")
    return Ratio(selected_count, generated_count)


def graph_edit_distance(model_graph: SchemaGraph, curated_graph: SchemaGraph) -> tuple[int, int]:
    """(nodes added + deleted, edges added + deleted) between the two graphs.

    Node identity is node_id; edge identity is (source, target, kind), so an
    edited edge counts as one deletion plus one addition.
    """
    model_nodes = model_graph.node_ids()
    curated_nodes = curated_graph.node_ids()
    node_distance = len(model_nodes ^ curated_nodes)
    model_edges = {e.identity() for e in model_graph.edges}
    curated_edges = {e.identity() for e in curated_graph.edges}
    edge_distance = len(model_edges ^ curated_edges)
    return node_distance, edge_distance


@dataclass(frozen=True)
class GroundingRecord:
    """One node's grounding outcome: ranked candidate ids plus human relevance marks."""

    node_id: str
    candidates: tuple[str, ...]
    relevant_ids: frozenset[str]


def grounding_success_rate(records: Sequence[GroundingRecord], k: int = 3) -> Ratio:
    """Fraction of nodes with at least one human-relevant candidate in the top k."""
    if not records:
        raise EmptyRecordSet("no grounding records")
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = sum(1 for record in records if set(record.candidates[:k]) & record.relevant_ids)
    return Ratio(hits, len(records))


@dataclass
class EvalReport:
    step_accuracy: Ratio | None = None
    node_accuracy: Ratio | None = None
    graph_node_edit_distance: int | None = None
    graph_edge_edit_distance: int | None = None
    grounding_success_rate: Ratio | None = None
    elapsed_s: float | None = None

    def to_dict(self) -> dict:
        return {
            "step_accuracy": self.step_accuracy.to_dict() if self.step_accuracy else None,
            "node_accuracy": self.node_accuracy.to_dict() if self.node_accuracy else None,
            "graph_node_edit_distance": self.graph_node_edit_distance,
            "graph_edge_edit_distance": self.graph_edge_edit_distance,
            "grounding_success_rate": (
                self.grounding_success_rate.to_dict() if self.grounding_success_rate else None
            ),
            "elapsed_s": self.elapsed_s,
        }


def _selection_ratio(generated: int, kept: int) -> Ratio | None:
    if generated == 0:
        return None
    return selection_accuracy(generated, kept)


def session_report(session: SchemaSession, k: int = 3, elapsed_s: float | None = None) -> EvalReport:
    """Compute the evaluation report from a session's log and current state.

    Text edits are ignored on purpose — accuracy counts selection only.
    Deleted model entities count as unselected. Metrics whose inputs never
    happened (no generation, no model graph, no grounding queries) are None.
    """
    generated_steps = sum(
        len(e.payload["steps"]) for e in session.curation_log if e.action == "generate-steps"
    )
    kept_steps = sum(
        1 for s in session.steps if s.selected and s.provenance != PROVENANCE_HUMAN_ADDED
    )
    generated_nodes = sum(
        len(e.payload["nodes"]) for e in session.curation_log if e.action == "extract-nodes"
    )
    kept_nodes = sum(
        1 for n in session.nodes if n.selected and n.provenance != PROVENANCE_HUMAN_ADDED
    )

    node_distance = edge_distance = None
    model_graph = _last_model_graph(session)
    if model_graph is not None:
        node_distance, edge_distance = graph_edit_distance(model_graph, session.graph)

    grounding = None
    queried = [(nid, state) for nid, state in sorted(session.groundings.items()) if state.queries]
    if queried:
        hits = 0
        for _, state in queried:
            relevant = set(state.relevant_ids)
            if any(
                relevant & {c["xpo_id"] for c in query.candidates[:k]}
                for query in state.queries
            ):
                hits += 1
        grounding = Ratio(hits, len(queried))

    return EvalReport(
        step_accuracy=_selection_ratio(generated_steps, kept_steps),
        node_accuracy=_selection_ratio(generated_nodes, kept_nodes),
        graph_node_edit_distance=node_distance,
        graph_edge_edit_distance=edge_distance,
        grounding_success_rate=grounding,
        elapsed_s=elapsed_s,
    )


def _last_model_graph(session: SchemaSession) -> SchemaGraph | None:
    for event in reversed(session.curation_log):
        if event.action == "build-graph":
            return SchemaGraph.from_dict(event.payload["graph"])
    return None


def session_records(session: SchemaSession, k: int = 3) -> list[GroundingRecord]:
    """Per-node grounding records (latest query's candidates) for external reporting."""
    records = []
    for node_id, state in sorted(session.groundings.items()):
        if not state.queries:
            continue
        latest = state.queries[-1]
        records.append(
            GroundingRecord(
                node_id=node_id,
                candidates=tuple(c["xpo_id"] for c in latest.candidates[:k]),
                relevant_ids=frozenset(state.relevant_ids),
            )
        )
    return records
