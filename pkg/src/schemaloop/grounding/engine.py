"""Name-inference grounding: LLM candidate names, ontology postprocessing,
entailment-score ranking."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

from ..llm import CompletionRequest, Provider
from ..parsing import parse_name_list
from ..templates import TemplateRegistry, default_registry
from .ontology import OntologyNode, OntologyStore

if TYPE_CHECKING:
    from .entailment import EntailmentScorer

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroundingCandidate:
    node: OntologyNode
    score: float
    method: str  # similarity | inference
    rank: int

    def to_dict(self) -> dict:
        return {
            "xpo_id": self.node.xpo_id,
            "name": self.node.name,
            "definition": self.node.definition,
            "score": self.score,
            "rank": self.rank,
            "method": self.method,
        }


def infer_names(
    node_label: str,
    llm: Provider,
    registry: TemplateRegistry | None = None,
    model_id: str = "",
) -> list[str]:
    """Few-shot prompt the LLM for candidate ontology names for one node."""
    registry = registry or default_registry()
    prompt = registry.render("grounding-inference", {"event": node_label})
    result = llm.complete(CompletionRequest(prompt=prompt, model_id=model_id))
    return parse_name_list(result.text)


def postprocess_candidates(names: list[str], ontology: OntologyStore) -> list[OntologyNode]:
    """Drop names that resolve to nothing; pull in each hit's similar nodes.

    One hop only, deduped by xpo_id preserving first-mention order.
    """
    out: list[OntologyNode] = []
    seen: set[str] = set()

    def _push(node: OntologyNode):
        if node.xpo_id not in seen:
            seen.add(node.xpo_id)
            out.append(node)

    for name in names:
        node = ontology.lookup_name(name)
        if node is None:
            log.debug("dropping unresolvable candidate name %r", name)
            continue
        _push(node)
        for similar_name in node.similar_names:
            similar = ontology.lookup_name(similar_name)
            if similar is not None:
                _push(similar)
    return out


def rank_by_entailment(
    node_label: str,
    candidates: list[OntologyNode],
    scorer: "EntailmentScorer",
    k: int = 3,
) -> tuple[list[GroundingCandidate], list[str]]:
    """Sort candidates by entailment score (premise = node text, hypothesis = name).

    A scorer failure drops that candidate with a warning; if every candidate
    fails, the result is empty with an error record. Ties break by ascending
    xpo_id. Returns (top-k candidates, warnings).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    warnings: list[str] = []
    scored: list[tuple[float, OntologyNode]] = []
    for node in candidates:
        try:
            scored.append((scorer.score(node_label, node.name), node))
        except Exception as exc:
            warnings.append(f"entailment scoring failed for {node.name!r}: {exc}")
            log.warning("entailment scoring failed for %r: %s", node.name, exc)
    if candidates and not scored:
        warnings.append("error: entailment scoring failed for every candidate")
        return [], warnings
    scored.sort(key=lambda pair: (-pair[0], pair[1].xpo_id))
    ranked = [
        GroundingCandidate(node=node, score=score, method="inference", rank=rank)
        for rank, (score, node) in enumerate(scored[:k], start=1)
    ]
    return ranked, warnings


def inference_ground(
    node_label: str,
    ontology: OntologyStore,
    llm: Provider,
    scorer: "EntailmentScorer",
    k: int = 3,
    registry: TemplateRegistry | None = None,
) -> tuple[list[GroundingCandidate], list[str]]:
    """Full name-inference route: infer names, postprocess, rank by entailment.

    An empty result is a legitimate outcome (the LLM's names may all miss the
    ontology), not an error.
    """
    names = infer_names(node_label, llm, registry=registry)
    candidates = postprocess_candidates(names, ontology)
    return rank_by_entailment(node_label, candidates, scorer, k=k)
