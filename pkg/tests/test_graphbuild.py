from __future__ import annotations

import itertools
import threading

import pytest

from schemaloop.errors import TooFewNodes
from schemaloop.graphbuild import (
    BuildResult,
    PairVerdict,
    build_graph,
    detect_temporal_cycles,
    enumerate_pairs,
    multi_parent_nodes,
    resolve_pair,
)
from schemaloop.model import Edge, EventNode, GraphNode, SchemaGraph
from schemaloop.parsing import RelationAnswer

TEMPORAL_VALUES = ("Before", "After", "SameTime", "NoRelation")
HIERARCHICAL_VALUES = ("Parent", "Child", "NoRelation")


def _node(node_id, label=None):
    return EventNode(node_id=node_id, subject=label or node_id, verb="acts")


def _verdict(t_ab, t_ba, h_ab="NoRelation", h_ba="NoRelation"):
    return PairVerdict(
        node_a="a",
        node_b="b",
        temporal_ab=RelationAnswer("temporal", t_ab),
        temporal_ba=RelationAnswer("temporal", t_ba),
        hierarchical_ab=RelationAnswer("hierarchical", h_ab),
        hierarchical_ba=RelationAnswer("hierarchical", h_ba),
    )


class TestEnumeratePairs:
    def test_four_nodes_six_pairs(self):
        nodes = [_node(f"n{i}") for i in range(1, 5)]
        pairs = enumerate_pairs(nodes)
        assert len(pairs) == 6
        assert 4 * len(pairs) == 24  # questions per the both-orderings-both-axes rule

    def test_pairs_ordered_by_insertion_index(self):
        nodes = [_node("x"), _node("y"), _node("z")]
        pairs = [(a.node_id, b.node_id) for a, b in enumerate_pairs(nodes)]
        assert pairs == [("x", "y"), ("x", "z"), ("y", "z")]

    def test_two_nodes_one_pair(self):
        assert len(enumerate_pairs([_node("a"), _node("b")])) == 1

    def test_one_node_rejected(self):
        with pytest.raises(TooFewNodes):
            enumerate_pairs([_node("a")])


class TestResolvePair:
    def test_collect_data_example(self):
        # asking (collect data, identify...) answered After: edge identify -> collect
        verdict = PairVerdict(
            node_a="collect data",
            node_b="identify the signs and symptoms",
            temporal_ab=RelationAnswer("temporal", "After"),
            temporal_ba=RelationAnswer("temporal", "NoRelation"),
            hierarchical_ab=RelationAnswer("hierarchical", "NoRelation"),
            hierarchical_ba=RelationAnswer("hierarchical", "NoRelation"),
        )
        resolution = resolve_pair(verdict)
        assert resolution.temporal_edge == Edge(
            source="identify the signs and symptoms", target="collect data", kind="temporal"
        )
        assert resolution.hierarchical_edge is None

    def test_after_after_conflict_yields_no_edge(self):
        resolution = resolve_pair(_verdict("After", "After"))
        assert resolution.temporal_edge is None
        assert resolution.conflicts

    def test_before_before_conflict_yields_no_edge(self):
        assert resolve_pair(_verdict("Before", "Before")).temporal_edge is None

    def test_parent_parent_conflict_yields_no_edge(self):
        resolution = resolve_pair(_verdict("NoRelation", "NoRelation", "Parent", "Parent"))
        assert resolution.hierarchical_edge is None
        assert resolution.conflicts

    def test_child_child_conflict_yields_no_edge(self):
        assert resolve_pair(_verdict("NoRelation", "NoRelation", "Child", "Child")).hierarchical_edge is None

    def test_consistent_before_after_yields_edge(self):
        resolution = resolve_pair(_verdict("Before", "After"))
        assert resolution.temporal_edge == Edge(source="a", target="b", kind="temporal")

    def test_consistent_parent_child_yields_edge(self):
        resolution = resolve_pair(_verdict("NoRelation", "NoRelation", "Parent", "Child"))
        assert resolution.hierarchical_edge == Edge(source="a", target="b", kind="hierarchical")

    def test_lone_directional_answer_adopted(self):
        assert resolve_pair(_verdict("NoRelation", "Before")).temporal_edge == Edge(
            source="b", target="a", kind="temporal"
        )
        assert resolve_pair(_verdict("NoRelation", "NoRelation", "NoRelation", "Child")).hierarchical_edge == Edge(
            source="a", target="b", kind="hierarchical"
        )

    def test_same_time_yields_annotation_not_edge(self):
        resolution = resolve_pair(_verdict("SameTime", "SameTime"))
        assert resolution.temporal_edge is None
        assert resolution.same_time
        assert not resolution.conflicts

    def test_same_time_dominates_directional_with_conflict_note(self):
        resolution = resolve_pair(_verdict("SameTime", "Before"))
        assert resolution.temporal_edge is None
        assert resolution.same_time
        assert resolution.conflicts

    def test_totality_over_all_144_combinations(self):
        for t_ab, t_ba, h_ab, h_ba in itertools.product(
            TEMPORAL_VALUES, TEMPORAL_VALUES, HIERARCHICAL_VALUES, HIERARCHICAL_VALUES
        ):
            resolution = resolve_pair(_verdict(t_ab, t_ba, h_ab, h_ba))
            # never both a->b and b->a on one axis: at most one edge per axis by
            # construction, so check edge endpoints are a legal orientation
            for edge in (resolution.temporal_edge, resolution.hierarchical_edge):
                if edge is not None:
                    assert {edge.source, edge.target} == {"a", "b"}
                    assert edge.source != edge.target

    def test_edge_semantics_match_verdicts(self):
        # every temporal edge s->t implies Before for (s,t) or After for (t,s)
        for t_ab, t_ba in itertools.product(TEMPORAL_VALUES, TEMPORAL_VALUES):
            resolution = resolve_pair(_verdict(t_ab, t_ba))
            edge = resolution.temporal_edge
            if edge is None:
                continue
            if edge.source == "a":
                assert t_ab == "Before" or t_ba == "After"
            else:
                assert t_ab == "After" or t_ba == "Before"


def _scripted_asker(answers):
    """answers: {(a_id, b_id, axis): value}; anything else NoRelation."""

    def asker(node_a, node_b, axis):
        value = answers.get((node_a.node_id, node_b.node_id, axis), "NoRelation")
        return RelationAnswer(axis, value)

    return asker


def _chain_answers(ids):
    answers = {}
    for a, b in zip(ids, ids[1:]):
        answers[(a, b, "temporal")] = "Before"
        answers[(b, a, "temporal")] = "After"
    return answers


class TestBuildGraph:
    def test_case_study_linear_chain(self):
        nodes = [_node(i) for i in ("n1", "n2", "n3", "n4")]
        result = build_graph(nodes, _scripted_asker(_chain_answers(["n1", "n2", "n3", "n4"])))
        temporal = [(e.source, e.target) for e in result.graph.edges if e.kind == "temporal"]
        assert temporal == [("n1", "n2"), ("n2", "n3"), ("n3", "n4")]
        assert [e for e in result.graph.edges if e.kind == "hierarchical"] == []

    def test_all_no_relation_yields_zero_edges(self):
        nodes = [_node(i) for i in ("a", "b", "c")]
        result = build_graph(nodes, _scripted_asker({}))
        assert result.graph.edges == []

    def test_transitive_triangle_is_acyclic(self):
        answers = _chain_answers(["a", "b", "c"])
        answers[("a", "c", "temporal")] = "Before"
        answers[("c", "a", "temporal")] = "After"
        result = build_graph([_node(i) for i in ("a", "b", "c")], _scripted_asker(answers))
        assert len(result.graph.edges) == 3
        assert detect_temporal_cycles(result.graph) == []

    def test_asker_count_is_four_per_pair(self):
        calls = []

        def counting_asker(a, b, axis):
            calls.append((a.node_id, b.node_id, axis))
            return RelationAnswer(axis, "NoRelation")

        build_graph([_node(i) for i in ("a", "b", "c", "d")], counting_asker)
        assert len(calls) == 24

    def test_failed_question_degrades_to_no_relation(self):
        def flaky(a, b, axis):
            if axis == "temporal" and (a.node_id, b.node_id) == ("a", "b"):
                raise RuntimeError("provider melted")
            return RelationAnswer(axis, "NoRelation")

        result = build_graph([_node("a"), _node("b")], flaky)
        assert result.graph.edges == []
        assert any("asker failed" in w for w in result.warnings)

    def test_concurrent_build_matches_serial(self):
        nodes = [_node(f"n{i}") for i in range(1, 6)]
        answers = _chain_answers([n.node_id for n in nodes])
        answers[("n1", "n3", "hierarchical")] = "Parent"
        answers[("n3", "n1", "hierarchical")] = "Child"
        serial = build_graph(nodes, _scripted_asker(answers), concurrency=1)
        concurrent = build_graph(nodes, _scripted_asker(answers), concurrency=8)
        assert serial.graph.to_dict() == concurrent.graph.to_dict()

    def test_same_time_recorded_as_annotation(self):
        answers = {("a", "b", "temporal"): "SameTime"}
        result = build_graph([_node("a"), _node("b")], _scripted_asker(answers))
        assert result.graph.edges == []
        assert result.same_time == [("a", "b")]
        assert result.graph.same_time == [("a", "b")]

    def test_no_two_cycles_ever(self):
        # randomized flood of answers can never produce both a->b and b->a
        import random

        rng = random.Random(7)
        nodes = [_node(i) for i in ("a", "b", "c")]
        for _ in range(200):
            answers = {}
            for x, y in itertools.permutations([n.node_id for n in nodes], 2):
                answers[(x, y, "temporal")] = rng.choice(TEMPORAL_VALUES)
                answers[(x, y, "hierarchical")] = rng.choice(HIERARCHICAL_VALUES)
            result = build_graph(nodes, _scripted_asker(answers))
            identities = {e.identity() for e in result.graph.edges}
            for source, target, kind in identities:
                assert (target, source, kind) not in identities


def _dfs_cycles(edges, node_ids):
    """Independent elementary-cycle oracle: DFS from each node, keeping only
    cycles whose smallest node is the start (canonical form, no duplicates)."""
    adjacency = {n: [] for n in node_ids}
    for source, target in edges:
        adjacency[source].append(target)
    cycles = set()

    def walk(start, current, path, visiting):
        for nxt in adjacency[current]:
            if nxt == start and len(path) >= 1:
                if min(path) == start:
                    cycles.add(tuple(path))
            elif nxt not in visiting and nxt > start:
                visiting.add(nxt)
                walk(start, nxt, path + [nxt], visiting)
                visiting.discard(nxt)

    for start in node_ids:
        walk(start, start, [start], {start})
    return cycles


class TestDetectTemporalCycles:
    def test_linear_chain_has_none(self):
        graph = SchemaGraph(
            graph_nodes=[GraphNode(node_id=i) for i in "abcd"],
            edges=[Edge(source=a, target=b, kind="temporal") for a, b in [("a", "b"), ("b", "c"), ("c", "d")]],
        )
        assert detect_temporal_cycles(graph) == []

    def test_triangle(self):
        graph = SchemaGraph(
            graph_nodes=[GraphNode(node_id=i) for i in "abc"],
            edges=[Edge(source=a, target=b, kind="temporal") for a, b in [("a", "b"), ("b", "c"), ("c", "a")]],
        )
        cycles = detect_temporal_cycles(graph)
        assert len(cycles) == 1
        assert set(cycles[0]) == {"a", "b", "c"}

    def test_empty_graph(self):
        assert detect_temporal_cycles(SchemaGraph()) == []

    def test_hierarchical_edges_ignored(self):
        graph = SchemaGraph(
            graph_nodes=[GraphNode(node_id=i) for i in "ab"],
            edges=[
                Edge(source="a", target="b", kind="hierarchical"),
                Edge(source="b", target="a", kind="hierarchical"),
            ],
        )
        assert detect_temporal_cycles(graph) == []

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_dfs_oracle_on_random_graphs(self, seed):
        import random

        rng = random.Random(seed)
        node_ids = [f"n{i}" for i in range(rng.randint(2, 6))]
        edges = set()
        for _ in range(rng.randint(0, 10)):
            a, b = rng.choice(node_ids), rng.choice(node_ids)
            if a != b:
                edges.add((a, b))
        graph = SchemaGraph(
            graph_nodes=[GraphNode(node_id=i) for i in node_ids],
            edges=[Edge(source=a, target=b, kind="temporal") for a, b in sorted(edges)],
        )
        found = detect_temporal_cycles(graph)
        canonical = set()
        for cycle in found:
            smallest = cycle.index(min(cycle))
            canonical.add(tuple(cycle[smallest:] + cycle[:smallest]))
        assert canonical == _dfs_cycles(sorted(edges), node_ids)


class TestMultiParent:
    def test_single_parents_fine(self):
        graph = SchemaGraph(
            graph_nodes=[GraphNode(node_id=i) for i in "rab"],
            edges=[
                Edge(source="r", target="a", kind="hierarchical"),
                Edge(source="r", target="b", kind="hierarchical"),
            ],
        )
        assert multi_parent_nodes(graph) == []

    def test_two_parents_flagged(self):
        graph = SchemaGraph(
            graph_nodes=[GraphNode(node_id=i) for i in "rsa"],
            edges=[
                Edge(source="r", target="a", kind="hierarchical"),
                Edge(source="s", target="a", kind="hierarchical"),
            ],
        )
        assert multi_parent_nodes(graph) == ["a"]
