"""Schema graph construction from pairwise relation answers.

Every node pair is asked four multiple-choice questions (both orderings on
both axes); the answers resolve into at most one temporal and one
hierarchical edge per pair. Contradictory directional claims (After/After,
Parent/Parent, ...) resolve to no relation; a same-time answer never becomes
an edge, it is kept as an annotation.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import networkx as nx

from .errors import TooFewNodes
from .model import EDGE_HIERARCHICAL, EDGE_TEMPORAL, Edge, GraphNode, SchemaGraph
from .parsing import HIERARCHICAL, NO_RELATION, TEMPORAL, RelationAnswer

log = logging.getLogger(__name__)


class LabeledNode(Protocol):
    node_id: str
    label: str


# asker(node_a, node_b, axis) -> RelationAnswer for the ordered pair (a, b)
Asker = Callable[[LabeledNode, LabeledNode, str], RelationAnswer]


@dataclass(frozen=True)
class PairVerdict:
    """All four answers for one unordered pair, both orderings on both axes."""

    node_a: str
    node_b: str
    temporal_ab: RelationAnswer
    temporal_ba: RelationAnswer
    hierarchical_ab: RelationAnswer
    hierarchical_ba: RelationAnswer


@dataclass(frozen=True)
class PairResolution:
    temporal_edge: Edge | None
    hierarchical_edge: Edge | None
    same_time: bool = False
    conflicts: tuple[str, ...] = ()


@dataclass
class BuildResult:
    graph: SchemaGraph
    same_time: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def enumerate_pairs(nodes: Sequence) -> list[tuple]:
    """All C(n,2) unordered pairs, ordered by node insertion index."""
    if len(nodes) < 2:
        raise TooFewNodes("graph construction needs at least 2 nodes")
    return [(nodes[i], nodes[j]) for i in range(len(nodes)) for j in range(i + 1, len(nodes))]


def _direction(ordered_answer: str, forward: bool) -> str | None:
    """Collapse a directional answer to 'ab' (a first / a parent) or 'ba'.

    ``forward`` is True for the (a,b) ordering, False for (b,a).
    """
    if ordered_answer in ("Before", "Parent"):
        return "ab" if forward else "ba"
    if ordered_answer in ("After", "Child"):
        return "ba" if forward else "ab"
    return None


def _resolve_axis(a: str, b: str, answer_ab: str, answer_ba: str, kind: str) -> tuple[Edge | None, str | None]:
    """Shared resolution for one axis; returns (edge, conflict-description)."""
    dir_ab = _direction(answer_ab, forward=True)
    dir_ba = _direction(answer_ba, forward=False)
    if dir_ab and dir_ba and dir_ab != dir_ba:
        return None, f"{kind} conflict between ({a},{b})={answer_ab} and ({b},{a})={answer_ba}"
    direction = dir_ab or dir_ba
    if direction is None:
        return None, None
    source, target = (a, b) if direction == "ab" else (b, a)
    return Edge(source=source, target=target, kind=kind), None


def resolve_pair(verdict: PairVerdict) -> PairResolution:
    """Resolve one pair's four answers into edges, annotations, and conflicts.

    Temporal: consistent directional answers (or one directional answer plus
    NoRelation) yield an edge; opposite directional claims yield none.
    SameTime on either ordering dominates — no edge, a same-time annotation,
    and a conflict note when the other ordering claimed a direction.
    Hierarchical: same logic with Parent/Child. Never emits both a→b and b→a
    on one axis.
    """
    a, b = verdict.node_a, verdict.node_b
    conflicts: list[str] = []

    temporal_values = (verdict.temporal_ab.value, verdict.temporal_ba.value)
    same_time = "SameTime" in temporal_values
    temporal_edge = None
    if same_time:
        if any(value in ("Before", "After") for value in temporal_values):
            conflicts.append(f"same-time vs directional answer on ({a},{b})")
    else:
        temporal_edge, conflict = _resolve_axis(
            a, b, verdict.temporal_ab.value, verdict.temporal_ba.value, EDGE_TEMPORAL
        )
        if conflict:
            conflicts.append(conflict)

    hierarchical_edge, conflict = _resolve_axis(
        a, b, verdict.hierarchical_ab.value, verdict.hierarchical_ba.value, EDGE_HIERARCHICAL
    )
    if conflict:
        conflicts.append(conflict)

    return PairResolution(
        temporal_edge=temporal_edge,
        hierarchical_edge=hierarchical_edge,
        same_time=same_time,
        conflicts=tuple(conflicts),
    )


def _safe_ask(asker: Asker, node_a, node_b, axis: str) -> tuple[RelationAnswer, str | None]:
    try:
        return asker(node_a, node_b, axis), None
    except Exception as exc:  # degrade, never abort the whole build
        log.warning("relation question failed for (%s,%s,%s): %s", node_a.node_id, node_b.node_id, axis, exc)
        failure = f"asker failed for ({node_a.node_id},{node_b.node_id},{axis}): {exc}"
        return RelationAnswer(axis=axis, value=NO_RELATION), failure


def build_graph(nodes: Sequence[LabeledNode], asker: Asker, concurrency: int = 1) -> BuildResult:
    """Query all 4·C(n,2) relation questions and assemble the schema graph.

    Questions may run concurrently up to ``concurrency``; edges and warnings
    are committed in pair-enumeration order once all verdicts are in, so
    output is a pure function of node order and answers regardless of arrival
    order. A failed question degrades to NoRelation on that axis and is
    recorded as a warning.
    """
    pairs = enumerate_pairs(nodes)
    questions = []
    for node_a, node_b in pairs:
        questions.extend(
            [
                (node_a, node_b, TEMPORAL),
                (node_b, node_a, TEMPORAL),
                (node_a, node_b, HIERARCHICAL),
                (node_b, node_a, HIERARCHICAL),
            ]
        )

    if concurrency > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            outcomes = list(pool.map(lambda q: _safe_ask(asker, *q), questions))
    else:
        outcomes = [_safe_ask(asker, *q) for q in questions]
    answers = [answer for answer, _ in outcomes]
    warnings = [failure for _, failure in outcomes if failure]

    edges: list[Edge] = []
    same_time: list[tuple[str, str]] = []
    for index, (node_a, node_b) in enumerate(pairs):
        t_ab, t_ba, h_ab, h_ba = answers[4 * index : 4 * index + 4]
        verdict = PairVerdict(
            node_a=node_a.node_id,
            node_b=node_b.node_id,
            temporal_ab=t_ab,
            temporal_ba=t_ba,
            hierarchical_ab=h_ab,
            hierarchical_ba=h_ba,
        )
        resolution = resolve_pair(verdict)
        if resolution.temporal_edge:
            edges.append(resolution.temporal_edge)
        if resolution.hierarchical_edge:
            edges.append(resolution.hierarchical_edge)
        if resolution.same_time:
            same_time.append((node_a.node_id, node_b.node_id))
        warnings.extend(resolution.conflicts)

    graph = SchemaGraph(
        graph_nodes=[GraphNode(node_id=n.node_id) for n in nodes],
        edges=edges,
        same_time=same_time,
    )
    graph.validate()
    return BuildResult(graph=graph, same_time=same_time, warnings=warnings)


def detect_temporal_cycles(graph: SchemaGraph) -> list[list[str]]:
    """Every elementary cycle in the temporal-edge subgraph, for curator review.

    Pairwise resolution already rules out 2-cycles; longer cycles can still
    arise and are surfaced as warnings, never auto-broken.
    """
    digraph = nx.DiGraph()
    digraph.add_nodes_from(node.node_id for node in graph.graph_nodes)
    digraph.add_edges_from(
        (edge.source, edge.target) for edge in graph.edges if edge.kind == EDGE_TEMPORAL
    )
    return [list(cycle) for cycle in nx.simple_cycles(digraph)]


def multi_parent_nodes(graph: SchemaGraph) -> list[str]:
    """Nodes with more than one hierarchical parent; tree-ness is a curator choice."""
    parents: dict[str, int] = {}
    for edge in graph.edges:
        if edge.kind == EDGE_HIERARCHICAL:
            parents[edge.target] = parents.get(edge.target, 0) + 1
    return sorted(node_id for node_id, count in parents.items() if count > 1)
