from __future__ import annotations

import json
import random

import httpx
import numpy as np
import pytest

from schemaloop.errors import DuplicateName, MalformedOntologyFile, ProviderError
from schemaloop.grounding import (
    EmbeddingStore,
    HttpEntailmentScorer,
    OntologyNode,
    OntologyStore,
    embed_phrase,
    infer_names,
    inference_ground,
    lexical_entailment_fallback,
    load_embeddings,
    load_ontology,
    postprocess_candidates,
    rank_by_entailment,
    similarity_ground,
)
from schemaloop.llm import ScriptedProvider
from schemaloop.templates import default_registry


class TestLoadOntology:
    def test_fixture_resolves_access(self, ontology_store):
        node = ontology_store.lookup_name("access")
        assert node is not None
        assert node.xpo_id == "xpo:0001"
        assert "entry" in node.similar_names

    def test_lookup_is_case_folded(self, ontology_store):
        assert ontology_store.lookup_name("Access") is ontology_store.lookup_name("ACCESS")

    def test_duplicate_name_rejected(self, tmp_path):
        path = tmp_path / "dup.json"
        path.write_text(
            json.dumps(
                [
                    {"id": "x1", "name": "attack", "definition": "", "similar": []},
                    {"id": "x2", "name": "Attack", "definition": "", "similar": []},
                ]
            )
        )
        with pytest.raises(DuplicateName):
            load_ontology(path)

    def test_empty_store_is_valid(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text("[]")
        store = load_ontology(path)
        assert len(store) == 0
        assert store.lookup_name("anything") is None

    def test_dangling_similar_dropped_with_warning(self, tmp_path, caplog):
        path = tmp_path / "dangling.json"
        path.write_text(
            json.dumps(
                [{"id": "x1", "name": "alpha", "definition": "", "similar": ["ghost", "beta"]},
                 {"id": "x2", "name": "beta", "definition": "", "similar": []}]
            )
        )
        with caplog.at_level("WARNING"):
            store = load_ontology(path)
        assert store.lookup_name("alpha").similar_names == ("beta",)
        assert any("ghost" in record.message for record in caplog.records)

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(MalformedOntologyFile):
            load_ontology(path)
        path.write_text('{"a": 1}')
        with pytest.raises(MalformedOntologyFile):
            load_ontology(path)


class TestEmbedPhrase:
    def _tiny_store(self):
        return EmbeddingStore(
            dimension=3,
            vectors={
                "hot": np.array([1.0, 0.0, 0.0]),
                "cold": np.array([0.0, 1.0, 0.0]),
                "warm": np.array([0.5, 0.5, 0.0]),
            },
        )

    def test_single_word_is_its_vector(self):
        store = self._tiny_store()
        assert np.array_equal(embed_phrase(store, "hot"), store.vectors["hot"])

    def test_two_word_mean(self):
        store = self._tiny_store()
        vec = embed_phrase(store, "hot cold")
        assert np.allclose(vec, np.array([0.5, 0.5, 0.0]))

    def test_out_of_vocabulary_is_none(self):
        assert embed_phrase(self._tiny_store(), "xenon argon") is None

    def test_case_folded_and_punctuation_stripped(self):
        store = self._tiny_store()
        assert np.array_equal(embed_phrase(store, '"HOT!"'), store.vectors["hot"])

    def test_mixed_vocab_averages_in_vocab_only(self):
        store = self._tiny_store()
        assert np.array_equal(embed_phrase(store, "hot xenon"), store.vectors["hot"])


class TestLoadEmbeddings:
    def test_dimension_inferred_and_enforced(self, tmp_path):
        path = tmp_path / "vectors.txt"
        path.write_text("a 1.0 0.0\nb 0.0 1.0\n")
        store = load_embeddings(path)
        assert store.dimension == 2
        path.write_text("a 1.0 0.0\nb 0.0 1.0 0.5\n")
        with pytest.raises(ValueError):
            load_embeddings(path)

    def test_tokens_case_folded(self, tmp_path):
        path = tmp_path / "vectors.txt"
        path.write_text("Apple 1.0\n")
        assert "apple" in load_embeddings(path)

    def test_fixture_loads(self, embedding_store):
        assert embedding_store.dimension == 61
        assert "access" in embedding_store


from oracles import brute_force_cosine_ranking as _oracle_rank


class TestSimilarityGround:
    def test_case_study_top3(self, ontology_store, embedding_store):
        candidates, warnings = similarity_ground(
            "cyber attacker access system", ontology_store, embedding_store, k=3
        )
        assert warnings == []
        assert {c.node.name for c in candidates} == {"access", "computer monitoring", "remote communicating"}

    def test_self_name_ranks_first_with_unit_score(self, ontology_store, embedding_store):
        candidates, _ = similarity_ground("computer monitoring", ontology_store, embedding_store, k=1)
        assert candidates[0].node.name == "computer monitoring"
        assert abs(candidates[0].score - 1.0) < 1e-9

    def test_k_larger_than_ontology_returns_all_scored(self, ontology_store, embedding_store):
        candidates, _ = similarity_ground("access", ontology_store, embedding_store, k=500)
        # one fixture name is deliberately unembeddable and is skipped
        assert len(candidates) == len(ontology_store) - 1

    def test_unembeddable_label_warns_and_returns_empty(self, ontology_store, embedding_store):
        candidates, warnings = similarity_ground("qwyjibo", ontology_store, embedding_store, k=3)
        assert candidates == []
        assert any("NoEmbedding" in w for w in warnings)

    def test_ranks_strictly_sequential_and_scores_non_increasing(self, ontology_store, embedding_store):
        candidates, _ = similarity_ground("attacker exfiltrate data", ontology_store, embedding_store, k=10)
        assert [c.rank for c in candidates] == list(range(1, len(candidates) + 1))
        for first, second in zip(candidates, candidates[1:]):
            assert first.score >= second.score

    def test_matches_brute_force_oracle(self, ontology_store, embedding_store):
        rng = random.Random(11)
        vocabulary = sorted(embedding_store.vectors)
        for _ in range(10):
            label = " ".join(rng.choice(vocabulary) for _ in range(rng.randint(1, 4)))
            expected = _oracle_rank(ontology_store, embedding_store, label)
            candidates, _ = similarity_ground(label, ontology_store, embedding_store, k=len(expected))
            assert [c.node.xpo_id for c in candidates] == [xpo for _, xpo in expected]
            for candidate, (score, _) in zip(candidates, expected):
                assert candidate.score == pytest.approx(score, abs=1e-9)

    def test_scores_within_cosine_bounds(self, ontology_store, embedding_store):
        candidates, _ = similarity_ground("theft robbery spread", ontology_store, embedding_store, k=30)
        assert all(-1.0 - 1e-12 <= c.score <= 1.0 + 1e-12 for c in candidates)


class TestInferNames:
    def test_scripted_name_completion_parsed(self):
        registry = default_registry()
        prompt = registry.render(
            "grounding-inference", {"event": "The attacker gathers information about the target"}
        )
        provider = ScriptedProvider({prompt: ["reconnaissance\n2.surveillance\n3.investigation"]})
        names = infer_names("The attacker gathers information about the target", provider)
        assert names == ["reconnaissance", "surveillance", "investigation"]

    def test_empty_completion_gives_empty_list(self):
        registry = default_registry()
        prompt = registry.render("grounding-inference", {"event": "whatever"})
        provider = ScriptedProvider({prompt: [""]})
        assert infer_names("whatever", provider) == []

    def test_provider_errors_propagate(self):
        provider = ScriptedProvider({})
        with pytest.raises(ProviderError):
            infer_names("anything", provider)


class TestPostprocess:
    def test_wrong_prediction_dropped_similar_added(self, ontology_store):
        out = postprocess_candidates(["reconnaissance", "flibbertigibbet"], ontology_store)
        assert [node.name for node in out] == ["reconnaissance", "surveillance"]

    def test_empty_input(self, ontology_store):
        assert postprocess_candidates([], ontology_store) == []

    def test_duplicates_collapsed(self, ontology_store):
        out = postprocess_candidates(["access", "access"], ontology_store)
        assert [node.name for node in out] == ["access", "entry"]
        assert len({node.xpo_id for node in out}) == len(out)

    def test_every_output_exists_in_ontology(self, ontology_store):
        out = postprocess_candidates(["theft", "infection", "nonsense"], ontology_store)
        for node in out:
            assert ontology_store.by_id[node.xpo_id] is node


class _ScriptedScorer:
    def __init__(self, table, fail_on=()):
        self.table = table
        self.fail_on = set(fail_on)

    def score(self, premise, hypothesis):
        if hypothesis in self.fail_on:
            raise RuntimeError("scorer offline")
        return self.table[hypothesis]


class TestRankByEntailment:
    def _candidates(self):
        return [
            OntologyNode(xpo_id="x1", name="A"),
            OntologyNode(xpo_id="x2", name="B"),
            OntologyNode(xpo_id="x3", name="C"),
        ]

    def test_sorts_by_score_descending(self):
        scorer = _ScriptedScorer({"A": 0.91, "B": 0.40, "C": 0.77})
        ranked, warnings = rank_by_entailment("node text", self._candidates(), scorer, k=2)
        assert [c.node.name for c in ranked] == ["A", "C"]
        assert [c.rank for c in ranked] == [1, 2]
        assert warnings == []

    def test_single_candidate_rank_one_regardless_of_score(self):
        scorer = _ScriptedScorer({"A": 0.01})
        ranked, _ = rank_by_entailment("x", [OntologyNode(xpo_id="x1", name="A")], scorer, k=3)
        assert len(ranked) == 1 and ranked[0].rank == 1

    def test_empty_candidates(self):
        ranked, warnings = rank_by_entailment("x", [], _ScriptedScorer({}), k=3)
        assert ranked == [] and warnings == []

    def test_tie_broken_by_ascending_id(self):
        scorer = _ScriptedScorer({"A": 0.5, "B": 0.5, "C": 0.5})
        ranked, _ = rank_by_entailment("x", self._candidates(), scorer, k=3)
        assert [c.node.xpo_id for c in ranked] == ["x1", "x2", "x3"]

    def test_failed_candidate_dropped_with_warning(self):
        scorer = _ScriptedScorer({"A": 0.9, "C": 0.2}, fail_on={"B"})
        ranked, warnings = rank_by_entailment("x", self._candidates(), scorer, k=3)
        assert [c.node.name for c in ranked] == ["A", "C"]
        assert len(warnings) == 1

    def test_all_failed_gives_empty_plus_error_record(self):
        scorer = _ScriptedScorer({}, fail_on={"A", "B", "C"})
        ranked, warnings = rank_by_entailment("x", self._candidates(), scorer, k=3)
        assert ranked == []
        assert any(w.startswith("error:") for w in warnings)


class TestLexicalFallback:
    def test_full_overlap_single_token(self):
        assert lexical_entailment_fallback("cyber attacker access system", "access") == 1.0

    def test_zero_overlap_two_tokens(self):
        assert lexical_entailment_fallback("cyber attacker access system", "computer monitoring") == 0.0

    def test_identical_strings(self):
        assert lexical_entailment_fallback("remote communicating", "remote communicating") == 1.0

    def test_partial_overlap(self):
        assert lexical_entailment_fallback("attacker gains system access", "system entry") == 0.5

    def test_stopword_only_hypothesis_scores_zero(self):
        assert lexical_entailment_fallback("anything at all", "of the") == 0.0

    def test_deterministic(self):
        args = ("the attacker is placed on a watch list", "watch list")
        assert lexical_entailment_fallback(*args) == lexical_entailment_fallback(*args) == 1.0

    def test_bounds(self):
        for premise in ("a b c", "x", ""):
            for hypothesis in ("a", "a b", "zz yy"):
                assert 0.0 <= lexical_entailment_fallback(premise, hypothesis) <= 1.0


class TestHttpEntailmentScorer:
    def _scorer(self, handler):
        return HttpEntailmentScorer("http://nli.test/score", transport=httpx.MockTransport(handler))

    def test_posts_pair_and_reads_score(self):
        seen = {}

        def handler(request):
            seen.update(json.loads(request.content))
            return httpx.Response(200, json={"entailment": 0.83})

        scorer = self._scorer(handler)
        assert scorer.score("premise text", "hypothesis text") == 0.83
        assert seen == {"premise": "premise text", "hypothesis": "hypothesis text"}

    def test_out_of_range_score_rejected(self):
        scorer = self._scorer(lambda request: httpx.Response(200, json={"entailment": 1.5}))
        with pytest.raises(ProviderError):
            scorer.score("p", "h")

    def test_http_error_surfaces(self):
        scorer = self._scorer(lambda request: httpx.Response(500, json={}))
        with pytest.raises(ProviderError):
            scorer.score("p", "h")


class TestInferenceGroundRoute:
    def test_empty_result_is_valid_outcome(self, ontology_store):
        registry = default_registry()
        prompt = registry.render("grounding-inference", {"event": "cyber attacker access system"})
        provider = ScriptedProvider({prompt: ["flibbertigibbet\n2.wuggles"]})
        ranked, warnings = inference_ground(
            "cyber attacker access system",
            ontology_store,
            provider,
            _ScriptedScorer({}),
            k=3,
        )
        assert ranked == []
        assert warnings == []

    def test_full_route_ranks_resolved_names(self, ontology_store):
        registry = default_registry()
        label = "The attacker gathers information about the target"
        prompt = registry.render("grounding-inference", {"event": label})
        provider = ScriptedProvider({prompt: ["reconnaissance\n2.surveillance\n3.investigation"]})
        scorer = _ScriptedScorer(
            {"reconnaissance": 0.9, "surveillance": 0.8, "investigation": 0.7, "monitoring": 0.6}
        )
        ranked, _ = inference_ground(label, ontology_store, provider, scorer, k=3)
        assert [c.node.name for c in ranked] == ["reconnaissance", "surveillance", "investigation"]
        assert all(c.method == "inference" for c in ranked)

    def test_method_independence(self, ontology_store, embedding_store, monkeypatch):
        # similarity never touches the LLM or scorer (its signature has neither);
        # inference must never read the embedding store
        import schemaloop.grounding.embeddings as embeddings_module

        def explode(*args, **kwargs):
            raise AssertionError("inference grounding must not read embeddings")

        monkeypatch.setattr(embeddings_module, "embed_phrase", explode)
        registry = default_registry()
        prompt = registry.render("grounding-inference", {"event": "x y z"})
        provider = ScriptedProvider({prompt: ["access"]})
        scorer = _ScriptedScorer({"access": 0.4, "entry": 0.2})
        ranked, _ = inference_ground("x y z", ontology_store, provider, scorer, k=3)
        assert [c.node.name for c in ranked] == ["access", "entry"]
