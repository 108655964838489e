"""Ontology grounding: name-similarity and name-inference routes.

The two routes are deliberately independent: similarity grounding only reads
the embedding store, inference grounding only uses the LLM plus an entailment
scorer. They complement each other when one comes back empty.
"""

from .embeddings import EmbeddingStore, embed_phrase, load_embeddings, similarity_ground
from .engine import (
    GroundingCandidate,
    infer_names,
    inference_ground,
    postprocess_candidates,
    rank_by_entailment,
)
from .entailment import EntailmentScorer, HttpEntailmentScorer, lexical_entailment_fallback
from .ontology import OntologyNode, OntologyStore, load_ontology

__all__ = [
    "EmbeddingStore",
    "EntailmentScorer",
    "GroundingCandidate",
    "HttpEntailmentScorer",
    "OntologyNode",
    "OntologyStore",
    "embed_phrase",
    "infer_names",
    "inference_ground",
    "lexical_entailment_fallback",
    "load_embeddings",
    "load_ontology",
    "postprocess_candidates",
    "rank_by_entailment",
    "similarity_ground",
]
