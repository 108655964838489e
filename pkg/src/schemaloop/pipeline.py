"""Stage runners that wire templates, provider, parsers, and curation events.

Both the HTTP service and the CLI drive stages through these functions, so a
pipeline run is identical no matter which surface invoked it. Every stage
records its results as model-provenance curation events on the session.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .curation import apply_curation
from .errors import MalformedPayload, NoTuplesFound, ProviderError, TransportError, UnknownEntity
from .graphbuild import build_graph, detect_temporal_cycles, multi_parent_nodes
from .grounding import (
    EmbeddingStore,
    OntologyStore,
    inference_ground,
    similarity_ground,
)
from .grounding.entailment import EntailmentScorer, LexicalScorer
from .llm import DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE, CompletionRequest, Provider
from .model import EventNode, SchemaSession
from .parsing import parse_numbered_list, parse_relation_answer, parse_tuples
from .templates import TemplateRegistry, default_registry

log = logging.getLogger(__name__)

Progress = Callable[[int, int], None]


@dataclass
class Runtime:
    """Everything a stage needs beyond the session itself."""

    provider: Provider
    registry: TemplateRegistry = field(default_factory=default_registry)
    ontology: OntologyStore | None = None
    embeddings: EmbeddingStore | None = None
    scorer: EntailmentScorer = field(default_factory=LexicalScorer)
    model_id: str = ""
    k: int = 3
    concurrency: int = 1
    # Per-stage decoding overrides, e.g. {"step-generation": {"temperature": 0.2}};
    # anything unset falls back to the gateway defaults.
    decoding: dict[str, dict] = field(default_factory=dict)


@dataclass
class StageOutcome:
    stage: str
    event_ids: list[str] = field(default_factory=list)
    created: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "event_ids": self.event_ids,
            "created": self.created,
            "warnings": self.warnings,
        }


def _complete(runtime: Runtime, prompt: str, stage: str) -> str:
    overrides = runtime.decoding.get(stage, {})
    request = CompletionRequest(
        prompt=prompt,
        model_id=overrides.get("model_id", runtime.model_id),
        max_tokens=overrides.get("max_tokens", DEFAULT_MAX_TOKENS),
        temperature=overrides.get("temperature", DEFAULT_TEMPERATURE),
        stop_sequences=tuple(overrides.get("stop", ())),
    )
    return runtime.provider.complete(request).text


def run_step_generation(
    session: SchemaSession,
    runtime: Runtime,
    template_id: str = "sub-steps",
    params: dict | None = None,
    count: int | None = None,
    parent_step_id: str | None = None,
    progress: Progress | None = None,
) -> StageOutcome:
    """Render a step template, complete it, and record the parsed steps."""
    params = dict(params or {})
    template = runtime.registry.get(template_id)
    if "scenario" in template.placeholders and "scenario" not in params:
        params["scenario"] = session.scenario
    prompt = template.render(params)
    if progress:
        progress(0, 1)
    text = _complete(runtime, prompt, "step-generation")
    items = parse_numbered_list(text, prompt_primed_with=prompt)
    if count is not None:
        items = items[:count]
    payload = {
        "steps": [
            {"text": item, "parent_step_id": parent_step_id} if parent_step_id else {"text": item}
            for item in items
        ],
        "template_id": template_id,
        "params": params,
    }
    event = apply_curation(session, "generate-steps", payload, actor="model")
    if progress:
        progress(1, 1)
    created_ids = {entry["step_id"] for entry in event.payload["steps"]}
    steps = [s.to_dict() for s in session.steps if s.step_id in created_ids]
    return StageOutcome(stage="step-generation", event_ids=[event.event_id], created={"steps": steps})


def run_node_extraction(
    session: SchemaSession,
    runtime: Runtime,
    step_ids: Sequence[str] | None = None,
    method: str = "llm",
    progress: Progress | None = None,
) -> StageOutcome:
    """Extract subject-verb-object tuples from the selected (or given) steps.

    A step whose completion yields no tuples is skipped with a warning; the
    stage still records the tuples from every other step.
    """
    if method != "llm":
        raise MalformedPayload(f"unknown extraction method {method!r} (only 'llm' is built in)")
    if step_ids is None:
        steps = [s for s in session.steps if s.selected]
    else:
        steps = []
        for step_id in step_ids:
            step = session.find_step(step_id)
            if step is None:
                raise UnknownEntity(f"no step {step_id!r}")
            steps.append(step)

    warnings: list[str] = []
    node_entries: list[dict] = []
    failures = 0
    last_error: Exception | None = None
    total = len(steps)
    for done, step in enumerate(steps):
        if progress:
            progress(done, total)
        prompt = runtime.registry.render("node-extraction", {"sentence": step.text})
        try:
            text = _complete(runtime, prompt, "node-extraction")
            tuples = parse_tuples(text)
        except (NoTuplesFound, ProviderError, TransportError) as exc:
            # per-item degradation: one bad step never sinks the others
            warnings.append(f"step {step.step_id}: {exc}")
            failures += 1
            last_error = exc
            continue
        for parsed in tuples:
            node_entries.append(
                {
                    "subject": parsed.subject,
                    "verb": parsed.verb,
                    "object": parsed.object,
                    "source_step_id": step.step_id,
                }
            )
    if steps and failures == len(steps) and last_error is not None:
        raise last_error  # total failure has nothing partial to offer
    event = apply_curation(session, "extract-nodes", {"nodes": node_entries, "method": method}, actor="model")
    if progress:
        progress(total, total)
    created_ids = {entry["node_id"] for entry in event.payload["nodes"]}
    nodes = [n.to_dict() for n in session.nodes if n.node_id in created_ids]
    return StageOutcome(
        stage="node-extraction", event_ids=[event.event_id], created={"nodes": nodes}, warnings=warnings
    )


def run_graph_construction(
    session: SchemaSession,
    runtime: Runtime,
    node_ids: Sequence[str] | None = None,
    progress: Progress | None = None,
) -> StageOutcome:
    """Ask the four relation questions per node pair and commit the resolved graph."""
    if node_ids is None:
        nodes = [n for n in session.nodes if n.selected]
    else:
        nodes = []
        for node_id in node_ids:
            node = session.find_node(node_id)
            if node is None:
                raise UnknownEntity(f"no node {node_id!r}")
            nodes.append(node)

    total_questions = 4 * (len(nodes) * (len(nodes) - 1) // 2)
    answered = [0]
    answered_lock = threading.Lock()

    def asker(node_a: EventNode, node_b: EventNode, axis: str):
        template = "relation-temporal" if axis == "temporal" else "relation-hierarchical"
        prompt = runtime.registry.render(template, {"node_a": node_a.label, "node_b": node_b.label})
        text = _complete(runtime, prompt, "graph-construction")
        with answered_lock:
            answered[0] += 1
            done = answered[0]
        if progress:
            progress(done, total_questions)
        return parse_relation_answer(text, axis)

    result = build_graph(nodes, asker, concurrency=runtime.concurrency)
    event = apply_curation(session, "build-graph", {"graph": result.graph.to_dict()}, actor="model")
    warnings = list(result.warnings)
    cycles = detect_temporal_cycles(session.graph)
    if cycles:
        warnings.append(f"temporal cycles detected: {cycles}")
    multi = multi_parent_nodes(session.graph)
    if multi:
        warnings.append(f"nodes with multiple hierarchical parents: {multi}")
    return StageOutcome(
        stage="graph-construction",
        event_ids=[event.event_id],
        created={"graph": session.graph.to_dict()},
        warnings=warnings,
    )


def run_grounding(
    session: SchemaSession,
    runtime: Runtime,
    node_ids: Sequence[str] | None = None,
    method: str = "similarity",
    k: int | None = None,
    progress: Progress | None = None,
) -> StageOutcome:
    """Retrieve top-k ontology candidates for each target node and record them.

    Defaults to every event node present in the graph, in graph order. An
    empty candidate list is a legitimate outcome, surfaced as such.
    """
    if method not in ("similarity", "inference"):
        raise MalformedPayload(f"unknown grounding method {method!r}")
    if runtime.ontology is None:
        raise MalformedPayload("no ontology configured")
    if method == "similarity" and runtime.embeddings is None:
        raise MalformedPayload("no embeddings configured")
    k = runtime.k if k is None else k
    if k < 1:
        raise MalformedPayload("k must be >= 1")

    if node_ids is None:
        targets = [gn.node_id for gn in session.graph.graph_nodes if session.find_node(gn.node_id)]
        if not targets:  # grounding without a graph falls back to selected nodes
            targets = [n.node_id for n in session.nodes if n.selected]
    else:
        targets = list(node_ids)

    outcome = StageOutcome(stage="grounding", created={"groundings": {}})
    total = len(targets)
    failures = 0
    last_error: Exception | None = None
    for done, node_id in enumerate(targets):
        if progress:
            progress(done, total)
        node = session.find_node(node_id)
        if node is None:
            raise UnknownEntity(f"no node {node_id!r}")
        try:
            if method == "similarity":
                candidates, warnings = similarity_ground(node.label, runtime.ontology, runtime.embeddings, k=k)
            else:
                candidates, warnings = inference_ground(
                    node.label, runtime.ontology, runtime.provider, runtime.scorer, k=k, registry=runtime.registry
                )
        except (ProviderError, TransportError) as exc:
            # per-item degradation: other nodes still get their candidates
            outcome.warnings.append(f"node {node_id}: {exc}")
            failures += 1
            last_error = exc
            continue
        payload = {
            "node_id": node_id,
            "method": method,
            "k": k,
            "candidates": [c.to_dict() for c in candidates],
        }
        event = apply_curation(session, "ground-query", payload, actor="model")
        outcome.event_ids.append(event.event_id)
        outcome.created["groundings"][node_id] = payload["candidates"]
        outcome.warnings.extend(warnings)
    if targets and failures == len(targets) and last_error is not None:
        raise last_error
    if progress:
        progress(total, total)
    return outcome
