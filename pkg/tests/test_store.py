from __future__ import annotations

import json

import pytest

import session_gen
from schemaloop.curation import apply_curation, create_session
from schemaloop.errors import CorruptRecord, EmptyGraph, NotFound, StorageFailure
from schemaloop.store import SessionStore, export_bytes, export_schema


def _curated_session():
    """Small fully-curated session: 2 event nodes, a root, grounding choice."""
    session = create_session("cyber attack", session_id="curated")
    apply_curation(
        session, "generate-steps", {"steps": [{"text": "step one"}, {"text": "step two"}]}, actor="model"
    )
    apply_curation(
        session,
        "extract-nodes",
        {
            "nodes": [
                {"subject": "cyber attacker", "verb": "access", "object": "system", "source_step_id": "s1"},
                {"subject": "attacker", "verb": "exfiltrate", "object": "data", "source_step_id": "s2"},
            ],
            "method": "llm",
        },
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
    apply_curation(session, "add-graph-node", {"label": "cyber attack"})
    apply_curation(session, "add-edge", {"source": "g1", "target": "n1", "kind": "hierarchical"})
    apply_curation(session, "add-edge", {"source": "g1", "target": "n2", "kind": "hierarchical"})
    apply_curation(
        session,
        "ground-query",
        {
            "node_id": "n1",
            "method": "similarity",
            "k": 3,
            "candidates": [{"xpo_id": "xpo:0001", "name": "access", "score": 0.9, "rank": 1, "method": "similarity"}],
        },
        actor="model",
    )
    apply_curation(session, "choose-grounding", {"node_id": "n1", "xpo_id": "xpo:0001"})
    return session


class TestSaveLoad:
    def test_round_trip_is_identity(self, tmp_path):
        store = SessionStore(tmp_path)
        session = _curated_session()
        store.save_session(session)
        loaded = store.load_session("curated")
        assert loaded.to_dict() == session.to_dict()

    def test_second_save_extends_log(self, tmp_path):
        store = SessionStore(tmp_path)
        session = _curated_session()
        store.save_session(session)
        apply_curation(session, "select-step", {"step_id": "s1", "selected": False})
        store.save_session(session)
        assert store.load_session("curated").to_dict() == session.to_dict()

    def test_diverged_log_refused(self, tmp_path):
        store = SessionStore(tmp_path)
        session = _curated_session()
        store.save_session(session)
        fork = create_session("cyber attack", session_id="curated")
        with pytest.raises(StorageFailure, match="extend"):
            store.save_session(fork)

    def test_unwritable_storage_path(self, tmp_path, monkeypatch):
        store = SessionStore(tmp_path)
        session = _curated_session()

        def refuse(*args, **kwargs):
            raise OSError(30, "Read-only file system")

        monkeypatch.setattr("schemaloop.store.tempfile.mkstemp", refuse)
        with pytest.raises(StorageFailure):
            store.save_session(session)

    def test_unknown_id(self, tmp_path):
        with pytest.raises(NotFound):
            SessionStore(tmp_path).load_session("nope")

    def test_corrupt_log(self, tmp_path):
        store = SessionStore(tmp_path)
        session = _curated_session()
        store.save_session(session)
        path = tmp_path / "curated.json"
        record = json.loads(path.read_text())
        record["log"] = "scrambled"
        path.write_text(json.dumps(record))
        with pytest.raises(CorruptRecord):
            store.load_session("curated")

    def test_tampered_snapshot_rebuilt_from_log(self, tmp_path, caplog):
        store = SessionStore(tmp_path)
        session = _curated_session()
        store.save_session(session)
        path = tmp_path / "curated.json"
        record = json.loads(path.read_text())
        record["snapshot"]["scenario"] = "tampered"
        path.write_text(json.dumps(record))
        with caplog.at_level("WARNING"):
            loaded = store.load_session("curated")
        assert loaded.scenario == "cyber attack"  # log wins
        assert any("snapshot" in r.message for r in caplog.records)

    def test_list_sessions(self, tmp_path):
        store = SessionStore(tmp_path)
        store.save_session(create_session("a", session_id="one"))
        store.save_session(create_session("b", session_id="two"))
        assert store.list_sessions() == ["one", "two"]

    @pytest.mark.parametrize("seed", [3, 17])
    def test_randomized_sessions_round_trip(self, tmp_path, seed):
        store = SessionStore(tmp_path)
        session = session_gen.random_session(seed, n_ops=20)
        store.save_session(session)
        assert store.load_session(session.session_id).to_dict() == session.to_dict()


class TestExport:
    def test_curated_document_counts(self):
        doc = export_schema(_curated_session())
        assert doc["scenario"] == "cyber attack"
        assert len(doc["nodes"]) == 3  # 2 events + root
        kinds = [e["kind"] for e in doc["edges"]]
        assert kinds.count("temporal") == 1 and kinds.count("hierarchical") == 2
        assert doc["warnings"] == {"temporal_cycles": [], "multi_parent": []}

    def test_grounded_node_carries_xpo_id(self):
        doc = export_schema(_curated_session())
        by_id = {n["id"]: n for n in doc["nodes"]}
        assert by_id["n1"]["grounding"] == "xpo:0001"
        assert by_id["n2"]["grounding"] is None
        assert by_id["g1"]["kind"] == "extra"
        assert by_id["g1"]["label"] == "cyber attack"

    def test_empty_graph_refused(self):
        with pytest.raises(EmptyGraph):
            export_schema(create_session("x", session_id="fresh"))

    def test_byte_determinism(self):
        assert export_bytes(_curated_session()) == export_bytes(_curated_session())

    def test_no_timestamps_or_session_id_in_export(self):
        doc = export_schema(_curated_session())
        text = json.dumps(doc)
        assert "created_at" not in text and "updated_at" not in text
        assert "curated" not in text  # session id never leaks

    def test_provenance_summary(self):
        doc = export_schema(_curated_session())
        assert doc["provenance"]["nodes"] == {"model": 2, "human": 1}
        assert doc["provenance"]["edges"] == {"model": 1, "human": 2}
