"""Entailment scoring contract: external service client plus offline fallback.

The scorer contract is score(premise, hypothesis) -> real in [0, 1],
deterministic for fixed inputs. The node text is the premise, the candidate
ontology name the hypothesis.
"""

from __future__ import annotations

from typing import Protocol

import httpx

from ..errors import ProviderError, TransportError
from .embeddings import tokenize

# Function words excluded from the lexical overlap; the score should hinge on
# content tokens only.
_STOPWORDS = frozenset(
    "a an the of to in on at for and or is are was were be been being with by from it its this that as".split()
)


class EntailmentScorer(Protocol):
    def score(self, premise: str, hypothesis: str) -> float:
        ...


def content_tokens(text: str) -> set[str]:
    return {token for token in tokenize(text) if token not in _STOPWORDS}


def lexical_entailment_fallback(premise: str, hypothesis: str) -> float:
    """Deterministic offline substitute for the NLI service.

    Score = |content-token overlap| / |hypothesis content tokens|; an
    all-stopword hypothesis scores 0.
    """
    hypothesis_tokens = content_tokens(hypothesis)
    if not hypothesis_tokens:
        return 0.0
    overlap = content_tokens(premise) & hypothesis_tokens
    return len(overlap) / len(hypothesis_tokens)


class LexicalScorer:
    """EntailmentScorer wrapper around the lexical fallback."""

    def score(self, premise: str, hypothesis: str) -> float:
        return lexical_entailment_fallback(premise, hypothesis)


class HttpEntailmentScorer:
    """Client for an entailment service: POST {premise, hypothesis} -> {entailment}."""

    def __init__(self, url: str, timeout_s: float = 30.0, transport: httpx.BaseTransport | None = None):
        self.url = url
        self._client = httpx.Client(timeout=timeout_s, transport=transport)

    def score(self, premise: str, hypothesis: str) -> float:
        try:
            response = self._client.post(self.url, json={"premise": premise, "hypothesis": hypothesis})
        except httpx.HTTPError as exc:
            raise TransportError(f"entailment service unreachable: {exc}") from exc
        if response.status_code >= 400:
            raise ProviderError(f"entailment service returned {response.status_code}")
        try:
            value = float(response.json()["entailment"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed entailment payload: {exc}") from exc
        if not 0.0 <= value <= 1.0:
            raise ProviderError(f"entailment score {value} outside [0, 1]")
        return value
