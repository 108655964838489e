"""Word-embedding store and name-similarity grounding.

Phrase vectors are the unweighted mean of in-vocabulary token vectors — the
simplest composition for multi-word node labels, and the one the ranking
oracle in the test suite reproduces independently.
"""

from __future__ import annotations

import logging
import string
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import GroundingCandidate
from .ontology import OntologyStore

log = logging.getLogger(__name__)

_STRIP = string.punctuation + string.whitespace


@dataclass
class EmbeddingStore:
    dimension: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)

    def get(self, token: str) -> np.ndarray | None:
        return self.vectors.get(token.casefold())

    def __contains__(self, token: str) -> bool:
        return token.casefold() in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


def load_embeddings(path: str | Path) -> EmbeddingStore:
    """Load GloVe-format text: one token + D reals per line, D fixed by the first line."""
    store: EmbeddingStore | None = None
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                continue
            token = parts[0].casefold()
            values = np.array([float(v) for v in parts[1:] if v], dtype=np.float64)
            if store is None:
                store = EmbeddingStore(dimension=len(values))
            elif len(values) != store.dimension:
                raise ValueError(
                    f"line {line_no}: expected {store.dimension} dims, got {len(values)}"
                )
            # First occurrence wins on duplicate tokens.
            store.vectors.setdefault(token, values)
    if store is None:
        raise ValueError(f"embedding file {path} has no vectors")
    return store


def tokenize(phrase: str) -> list[str]:
    """Case-fold, split on whitespace, strip surrounding punctuation per token."""
    tokens = []
    for raw in phrase.casefold().split():
        token = raw.strip(_STRIP)
        if token:
            tokens.append(token)
    return tokens


def embed_phrase(store: EmbeddingStore, phrase: str) -> np.ndarray | None:
    """Mean of in-vocabulary token vectors; None when nothing is in vocabulary."""
    vectors = [store.get(token) for token in tokenize(phrase)]
    vectors = [v for v in vectors if v is not None]
    if not vectors:
        return None
    return np.mean(vectors, axis=0)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    denominator = float(np.linalg.norm(u) * np.linalg.norm(v))
    if denominator == 0.0:
        return 0.0
    return float(np.dot(u, v)) / denominator


def similarity_ground(
    node_label: str,
    ontology: OntologyStore,
    embeddings: EmbeddingStore,
    k: int = 3,
) -> tuple[list[GroundingCandidate], list[str]]:
    """Top-k ontology nodes by cosine similarity of phrase embeddings.

    Ontology names with no embeddable token are skipped; a node label with no
    embeddable token yields an empty list plus a NoEmbedding warning. Ties
    break by ascending xpo_id. Returns (candidates, warnings).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    warnings: list[str] = []
    query = embed_phrase(embeddings, node_label)
    if query is None:
        warnings.append(f"NoEmbedding: no embeddable token in label {node_label!r}")
        return [], warnings

    scored = []
    for node in ontology.nodes:
        vector = embed_phrase(embeddings, node.name)
        if vector is None:
            log.debug("skipping unembeddable ontology name %r", node.name)
            continue
        scored.append((cosine(query, vector), node))
    scored.sort(key=lambda pair: (-pair[0], pair[1].xpo_id))

    candidates = [
        GroundingCandidate(node=node, score=score, method="similarity", rank=rank)
        for rank, (score, node) in enumerate(scored[:k], start=1)
    ]
    return candidates, warnings
