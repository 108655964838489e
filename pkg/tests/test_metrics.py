from __future__ import annotations

import pytest

from schemaloop.curation import apply_curation, create_session
from schemaloop.errors import EmptyRecordSet
from schemaloop.metrics import (
    GroundingRecord,
    Ratio,
    graph_edit_distance,
    grounding_success_rate,
    selection_accuracy,
    session_report,
)
from schemaloop.model import Edge, GraphNode, SchemaGraph


def _graph(node_ids, edges):
    return SchemaGraph(
        graph_nodes=[GraphNode(node_id=i) for i in node_ids],
        edges=[Edge(source=a, target=b, kind=k) for a, b, k in edges],
    )


class TestSelectionAccuracy:
    def test_evc_step_row(self):
        ratio = selection_accuracy(12, 11)
        assert (ratio.num, ratio.den) == (11, 12)
        assert ratio.value == pytest.approx(0.9167, abs=1e-4)
        assert str(ratio) == "11/12"

    def test_job_step_row_is_one(self):
        assert selection_accuracy(10, 10).value == 1.0

    def test_zero_selected(self):
        assert selection_accuracy(5, 0).value == 0.0

    def test_zero_generated_raises(self):
        with pytest.raises(ZeroDivisionError):
            selection_accuracy(0, 0)

    def test_bounds_enforced(self):
        with pytest.raises(ValueError):
            selection_accuracy(3, 4)
        with pytest.raises(ValueError):
            selection_accuracy(3, -1)

    @pytest.mark.parametrize("n", [1, 2, 7, 100])
    def test_all_selected_is_exactly_one(self, n):
        assert selection_accuracy(n, n).value == 1.0


class TestGraphEditDistance:
    def test_identical_graphs(self):
        g = _graph(["a", "b"], [("a", "b", "temporal")])
        assert graph_edit_distance(g, g) == (0, 0)

    def test_two_added_temporal_one_removed_hierarchical(self):
        model = _graph(
            ["a", "b", "c", "d"],
            [("a", "b", "temporal"), ("a", "c", "hierarchical")],
        )
        curated = _graph(
            ["a", "b", "c", "d"],
            [("a", "b", "temporal"), ("b", "c", "temporal"), ("c", "d", "temporal")],
        )
        assert graph_edit_distance(model, curated) == (0, 3)

    def test_deleted_node_with_two_incident_edges(self):
        model = _graph(
            ["a", "b", "c", "d", "e"],
            [("a", "b", "temporal"), ("b", "c", "temporal"), ("c", "d", "temporal")],
        )
        curated = _graph(
            ["a", "c", "d", "e"],
            [("c", "d", "temporal")],
        )
        assert graph_edit_distance(model, curated) == (1, 2)

    def test_edited_edge_counts_as_delete_plus_add(self):
        model = _graph(["a", "b"], [("a", "b", "temporal")])
        curated = _graph(["a", "b"], [("a", "b", "hierarchical")])
        assert graph_edit_distance(model, curated) == (0, 2)

    def test_symmetric(self):
        g1 = _graph(["a", "b"], [("a", "b", "temporal")])
        g2 = _graph(["a", "c"], [])
        assert graph_edit_distance(g1, g2) == graph_edit_distance(g2, g1) == (2, 1)


class TestGroundingSuccessRate:
    def test_evc_row(self):
        records = [
            GroundingRecord(f"n{i}", ("x1", "x2", "x3"), frozenset({"x2"} if i < 5 else {"zz"}))
            for i in range(12)
        ]
        ratio = grounding_success_rate(records, k=3)
        assert (ratio.num, ratio.den) == (5, 12)

    def test_mrg_row(self):
        records = [
            GroundingRecord(f"n{i}", ("a", "b", "c"), frozenset({"a"} if i < 9 else set()))
            for i in range(12)
        ]
        assert str(grounding_success_rate(records, k=3)) == "9/12"

    def test_all_candidate_lists_empty(self):
        records = [GroundingRecord(f"n{i}", (), frozenset({"x"})) for i in range(4)]
        assert grounding_success_rate(records, k=3).value == 0.0

    def test_relevant_outside_top_k_does_not_count(self):
        records = [GroundingRecord("n1", ("a", "b", "c", "d"), frozenset({"d"}))]
        assert grounding_success_rate(records, k=3).value == 0.0
        assert grounding_success_rate(records, k=4).value == 1.0

    def test_empty_record_set_raises(self):
        with pytest.raises(EmptyRecordSet):
            grounding_success_rate([], k=3)


class TestRatio:
    def test_bounds(self):
        with pytest.raises(ZeroDivisionError):
            Ratio(0, 0)
        with pytest.raises(ValueError):
            Ratio(5, 3)

    def test_json_shape(self):
        assert Ratio(11, 12).to_dict() == {"num": 11, "den": 12}


class TestSessionReport:
    def test_fresh_session_is_all_not_applicable(self):
        report = session_report(create_session("x", session_id="t"))
        assert report.step_accuracy is None
        assert report.node_accuracy is None
        assert report.graph_node_edit_distance is None
        assert report.grounding_success_rate is None

    def test_edits_do_not_change_accuracy(self):
        session = create_session("x", session_id="t")
        apply_curation(
            session, "generate-steps", {"steps": [{"text": "a"}, {"text": "b"}]}, actor="model"
        )
        apply_curation(session, "edit-step", {"step_id": "s1", "text": "a, rephrased"})
        report = session_report(session)
        assert str(report.step_accuracy) == "2/2"

    def test_deleted_and_deselected_steps_count_against(self):
        session = create_session("x", session_id="t")
        apply_curation(
            session,
            "generate-steps",
            {"steps": [{"text": "a"}, {"text": "b"}, {"text": "c"}]},
            actor="model",
        )
        apply_curation(session, "select-step", {"step_id": "s1", "selected": False})
        apply_curation(session, "delete-step", {"step_id": "s2"})
        assert str(session_report(session).step_accuracy) == "1/3"

    def test_human_added_steps_not_counted(self):
        session = create_session("x", session_id="t")
        apply_curation(session, "generate-steps", {"steps": [{"text": "a"}]}, actor="model")
        apply_curation(session, "add-step", {"text": "mine"})
        assert str(session_report(session).step_accuracy) == "1/1"

    def test_graph_distances_against_last_model_graph(self):
        session = create_session("x", session_id="t")
        apply_curation(
            session,
            "extract-nodes",
            {"nodes": [{"subject": "a", "verb": "b"}, {"subject": "c", "verb": "d"}], "method": "llm"},
            actor="model",
        )
        apply_curation(
            session,
            "build-graph",
            {
                "graph": {
                    "graph_nodes": [{"node_id": "n1"}, {"node_id": "n2"}],
                    "edges": [{"source": "n1", "target": "n2", "kind": "temporal"}],
                }
            },
            actor="model",
        )
        apply_curation(session, "add-graph-node", {"label": "root"})
        apply_curation(session, "add-edge", {"source": "g1", "target": "n1", "kind": "hierarchical"})
        apply_curation(session, "add-edge", {"source": "g1", "target": "n2", "kind": "hierarchical"})
        apply_curation(session, "delete-edge", {"source": "n1", "target": "n2", "kind": "temporal"})
        report = session_report(session)
        assert report.graph_node_edit_distance == 1
        assert report.graph_edge_edit_distance == 3

    def test_grounding_rate_counts_any_query_hit(self):
        session = create_session("x", session_id="t")
        apply_curation(
            session,
            "extract-nodes",
            {"nodes": [{"subject": "a", "verb": "b"}, {"subject": "c", "verb": "d"}], "method": "llm"},
            actor="model",
        )
        for node_id, xpo in (("n1", "xpo:0001"), ("n2", "xpo:0002")):
            apply_curation(
                session,
                "ground-query",
                {
                    "node_id": node_id,
                    "method": "similarity",
                    "k": 3,
                    "candidates": [
                        {"xpo_id": xpo, "name": "x", "score": 0.9, "rank": 1, "method": "similarity"}
                    ],
                },
                actor="model",
            )
        apply_curation(session, "choose-grounding", {"node_id": "n1", "xpo_id": "xpo:0001"})
        # n2 queried but nothing relevant chosen
        assert str(session_report(session, k=3).grounding_success_rate) == "1/2"
