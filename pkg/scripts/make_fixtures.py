#!/usr/bin/env python3
"""Regenerate the demo fixtures: ontology, embeddings, scripted completions,
case-study edit file, and the frozen golden export.

The committed fixture files are the frozen artifacts; run this only when the
formats change, then re-freeze. The script asserts the ranking constraints the
test suite depends on before writing anything.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

# --- ontology ----------------------------------------------------------------

ONTOLOGY = [
    # (name, definition, similar names)
    ("access", "gaining entry to a place or system", ["entry"]),
    ("entry", "the act of going in", []),
    ("computer monitoring", "observing activity on a computer system", []),
    ("remote communicating", "exchanging information over a distance", []),
    ("reconnaissance", "preliminary surveying of a target", ["surveillance"]),
    ("surveillance", "close observation of a person or group", ["monitoring"]),
    ("monitoring", "keeping continuous watch over something", []),
    ("investigation", "systematic inquiry into an incident", []),
    ("identification", "establishing who or what something is", []),
    ("confirmation", "establishing that something is true", []),
    ("infection", "invasion of the body by a pathogen", ["epidemic"]),
    ("epidemic", "widespread occurrence of a disease", ["pandemic"]),
    ("pandemic", "epidemic spanning countries", []),
    ("robbery", "taking property unlawfully by force", ["theft"]),
    ("burglary", "illegal entry with intent to steal", []),
    ("theft", "taking property unlawfully", ["robbery", "burglary"]),
    ("control", "bringing a situation under command", []),
    ("improvement", "a change toward a better state", []),
    ("symptoms", "signs indicating a condition", []),
    ("transmission", "passing of something from one to another", ["spread"]),
    ("spread", "extension over a wider area", []),
    ("escalation", "increase in intensity or privilege", []),
    ("exfiltration", "covert removal of data or people", ["theft"]),
    ("notification", "informing an affected party", []),
    ("arrest", "seizing a person by legal authority", []),
    ("planning", "deciding on actions in advance", []),
    ("evaluation", "judging the value or outcome of something", []),
    ("quux vortexing", "deliberately unembeddable fixture entry", []),
]

# --- embeddings ---------------------------------------------------------------
# 7 topic dimensions: computing, access, observation, communication, disease,
# crime, process. Each token also gets a private jitter dimension so no two
# names are collinear (self-similarity must be the unique maximum).

TOPICS = {
    # ontology name tokens
    "access":         [0.50, 0.90, 0.00, 0.00, 0.00, 0.00, 0.00],
    "entry":          [0.05, 0.85, 0.00, 0.00, 0.00, 0.00, 0.30],
    "computer":       [1.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00],
    "monitoring":     [0.25, 0.00, 0.90, 0.05, 0.00, 0.00, 0.00],
    "remote":         [0.50, 0.10, 0.00, 0.70, 0.00, 0.00, 0.00],
    "communicating":  [0.35, 0.00, 0.00, 0.90, 0.00, 0.00, 0.00],
    "reconnaissance": [0.05, 0.00, 0.90, 0.00, 0.00, 0.30, 0.00],
    "surveillance":   [0.10, 0.00, 1.00, 0.00, 0.00, 0.10, 0.00],
    "investigation":  [0.00, 0.00, 0.70, 0.00, 0.00, 0.40, 0.20],
    "identification": [0.00, 0.00, 0.30, 0.00, 0.00, 0.20, 0.70],
    "confirmation":   [0.00, 0.00, 0.10, 0.10, 0.00, 0.00, 0.85],
    "infection":      [0.00, 0.00, 0.00, 0.00, 1.00, 0.00, 0.00],
    "epidemic":       [0.00, 0.00, 0.00, 0.00, 0.95, 0.00, 0.15],
    "pandemic":       [0.00, 0.00, 0.00, 0.00, 0.90, 0.00, 0.25],
    "robbery":        [0.00, 0.10, 0.00, 0.00, 0.00, 0.95, 0.00],
    "burglary":       [0.00, 0.25, 0.00, 0.00, 0.00, 0.90, 0.00],
    "theft":          [0.00, 0.05, 0.00, 0.00, 0.00, 1.00, 0.05],
    "control":        [0.10, 0.00, 0.10, 0.00, 0.10, 0.00, 0.80],
    "improvement":    [0.00, 0.00, 0.00, 0.00, 0.05, 0.00, 0.90],
    "symptoms":       [0.00, 0.00, 0.20, 0.00, 0.80, 0.00, 0.10],
    "transmission":   [0.10, 0.00, 0.00, 0.30, 0.70, 0.00, 0.00],
    "spread":         [0.00, 0.00, 0.00, 0.10, 0.75, 0.00, 0.20],
    "escalation":     [0.10, 0.10, 0.00, 0.00, 0.00, 0.45, 0.60],
    "exfiltration":   [0.15, 0.00, 0.00, 0.00, 0.00, 0.55, 0.50],
    "notification":   [0.05, 0.00, 0.00, 0.60, 0.00, 0.00, 0.55],
    "arrest":         [0.00, 0.00, 0.00, 0.00, 0.00, 0.70, 0.45],
    "planning":       [0.00, 0.00, 0.10, 0.00, 0.00, 0.10, 0.85],
    "evaluation":     [0.00, 0.00, 0.20, 0.00, 0.00, 0.00, 0.85],
    # scenario / label tokens
    "cyber":          [1.00, 0.00, 0.00, 0.05, 0.00, 0.15, 0.00],
    "attacker":       [0.35, 0.00, 0.00, 0.00, 0.00, 0.60, 0.00],
    "attack":         [0.10, 0.00, 0.00, 0.00, 0.00, 1.00, 0.00],
    "system":         [0.90, 0.15, 0.00, 0.00, 0.00, 0.00, 0.00],
    "data":           [0.85, 0.00, 0.00, 0.10, 0.00, 0.00, 0.00],
    "enumerate":      [0.55, 0.10, 0.25, 0.00, 0.00, 0.00, 0.20],
    "information":    [0.70, 0.00, 0.20, 0.20, 0.00, 0.00, 0.00],
    "user":           [0.75, 0.20, 0.00, 0.00, 0.00, 0.00, 0.10],
    "account":        [0.70, 0.30, 0.00, 0.00, 0.00, 0.00, 0.10],
    "privileges":     [0.55, 0.50, 0.00, 0.00, 0.00, 0.00, 0.20],
    "escalates":      [0.15, 0.10, 0.00, 0.00, 0.00, 0.40, 0.65],
    "exfiltrate":     [0.20, 0.00, 0.00, 0.00, 0.00, 0.60, 0.45],
    "gather":         [0.10, 0.00, 0.50, 0.00, 0.00, 0.10, 0.40],
    "target":         [0.20, 0.00, 0.30, 0.00, 0.00, 0.50, 0.10],
    "plan":           [0.00, 0.00, 0.10, 0.00, 0.00, 0.15, 0.85],
    "execute":        [0.10, 0.00, 0.00, 0.00, 0.00, 0.55, 0.50],
    "cover":          [0.05, 0.00, 0.30, 0.00, 0.00, 0.50, 0.20],
    "tracks":         [0.10, 0.00, 0.40, 0.00, 0.00, 0.35, 0.10],
    "identity":       [0.10, 0.00, 0.20, 0.00, 0.00, 0.10, 0.70],
    "watch":          [0.05, 0.00, 0.85, 0.00, 0.00, 0.10, 0.00],
    "disease":        [0.00, 0.00, 0.00, 0.00, 1.00, 0.00, 0.05],
    "outbreak":       [0.00, 0.00, 0.00, 0.00, 0.90, 0.10, 0.10],
    "confirmed":      [0.00, 0.00, 0.10, 0.05, 0.00, 0.00, 0.80],
    "seized":         [0.00, 0.10, 0.00, 0.00, 0.00, 0.65, 0.30],
    "notified":       [0.00, 0.00, 0.00, 0.60, 0.00, 0.00, 0.50],
    "arrested":       [0.00, 0.00, 0.00, 0.00, 0.00, 0.70, 0.40],
}

JITTER = 0.30


def build_vectors() -> dict[str, list[float]]:
    tokens = list(TOPICS)
    dim = 7 + len(tokens)
    vectors = {}
    for index, token in enumerate(tokens):
        vec = list(TOPICS[token]) + [0.0] * len(tokens)
        vec[7 + index] = JITTER
        assert len(vec) == dim
        vectors[token] = vec
    return vectors


def mean_vector(vectors: dict[str, list[float]], phrase: str) -> list[float] | None:
    hits = [vectors[t] for t in phrase.lower().split() if t in vectors]
    if not hits:
        return None
    dim = len(hits[0])
    return [sum(v[i] for v in hits) / len(hits) for i in range(dim)]


def cos(u: list[float], v: list[float]) -> float:
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    return dot / (nu * nv) if nu and nv else 0.0


def rank(vectors, query: str) -> list[tuple[float, str]]:
    q = mean_vector(vectors, query)
    scored = []
    for name, _, _ in ONTOLOGY:
        v = mean_vector(vectors, name)
        if v is None:
            continue
        scored.append((cos(q, v), name))
    scored.sort(key=lambda p: (-p[0], p[1]))
    return scored


def verify(vectors):
    ranking = rank(vectors, "cyber attacker access system")
    top3 = [name for _, name in ranking[:3]]
    assert top3 == ["access", "computer monitoring", "remote communicating"], ranking[:6]
    margin = ranking[2][0] - ranking[3][0]
    assert margin > 1e-3, f"top-3 margin too thin: {margin}"
    # self-name queries must rank themselves first, strictly
    for name, _, _ in ONTOLOGY:
        if mean_vector(vectors, name) is None:
            continue
        self_rank = rank(vectors, name)
        assert self_rank[0][1] == name, (name, self_rank[:3])
        assert abs(self_rank[0][0] - 1.0) < 1e-12
        assert self_rank[0][0] - self_rank[1][0] > 1e-6, (name, self_rank[:3])
    print("ranking constraints hold; case-study top-3 margin =", round(margin, 4))


def write_ontology():
    nodes = []
    for index, (name, definition, similar) in enumerate(ONTOLOGY, start=1):
        nodes.append(
            {"id": f"xpo:{index:04d}", "name": name, "definition": definition, "similar": similar}
        )
    path = FIXTURES / "ontology.json"
    path.write_text(json.dumps(nodes, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print("wrote", path)


def write_embeddings(vectors):
    path = FIXTURES / "embeddings.txt"
    with open(path, "w", encoding="utf-8") as fh:
        for token, vec in vectors.items():
            fh.write(token + " " + " ".join(f"{value:.6f}" for value in vec) + "\n")
    print("wrote", path, f"({len(vectors)} tokens)")


# --- case-study scripted provider + edit file ---------------------------------

STEP_COMPLETION = (
    "A cyber attacker gains initial access to a system.\n"
    "2. The attacker enumerates system information and user accounts.\n"
    "3. The attacker escalates privileges on the system.\n"
    "4. The attacker exfiltrates data from the compromised system.\n"
    "5. The attacker covers their tracks."
)

SELECTED_STEPS = [
    "A cyber attacker access a system.",
    "The attacker enumerates system information and user accounts.",
    "The attacker escalates privileges on the system.",
    "The attacker exfiltrates data from the compromised system.",
]

TUPLE_COMPLETIONS = [
    "[verb: access, subject: cyber attacker, object: system]",
    "[verb: enumerate, subject: attacker, object: system information and user account]",
    "[verb: escalates, subject: attacker, object: privileges]",
    "[verb: exfiltrate, subject: attacker, object: data]",
]

NODE_LABELS = [
    "cyber attacker access system",
    "attacker enumerate system information and user account",
    "attacker escalates privileges",
    "attacker exfiltrate data",
]

# Adjacent pairs answer Before/After so resolution yields the linear chain;
# everything else answers no relation on both orderings and both axes.
CHAIN = {(0, 1), (1, 2), (2, 3)}

EDITS = [
    {"action": "edit-step", "payload": {"step_id": "s1", "text": "A cyber attacker access a system."}},
    {"action": "select-step", "payload": {"step_id": "s5", "selected": False}},
    {"action": "add-graph-node", "payload": {"label": "cyber attack"}},
    {"action": "add-edge", "payload": {"source": "g1", "target": "n1", "kind": "hierarchical"}},
    {"action": "add-edge", "payload": {"source": "g1", "target": "n2", "kind": "hierarchical"}},
    {"action": "add-edge", "payload": {"source": "g1", "target": "n3", "kind": "hierarchical"}},
    {"action": "add-edge", "payload": {"source": "g1", "target": "n4", "kind": "hierarchical"}},
    {"action": "choose-grounding", "payload": {"node_id": "n1", "xpo_id": "xpo:0001"}},
]

EDIT_HOOKS = {"steps": EDITS[:2], "graph": EDITS[2:7], "grounding": EDITS[7:]}


def build_script():
    from schemaloop.templates import default_registry

    registry = default_registry()
    script: dict[str, list[str]] = {}

    def add(prompt: str, completion: str):
        script.setdefault(prompt, []).append(completion)

    add(registry.render("sub-steps", {"scenario": "cyber attack"}), STEP_COMPLETION)
    for sentence, completion in zip(SELECTED_STEPS, TUPLE_COMPLETIONS):
        add(registry.render("node-extraction", {"sentence": sentence}), completion)

    for i in range(len(NODE_LABELS)):
        for j in range(i + 1, len(NODE_LABELS)):
            a, b = NODE_LABELS[i], NODE_LABELS[j]
            chained = (i, j) in CHAIN
            add(
                registry.render("relation-temporal", {"node_a": a, "node_b": b}),
                "Before" if chained else "No relation",
            )
            add(
                registry.render("relation-temporal", {"node_a": b, "node_b": a}),
                "After" if chained else "No relation",
            )
            add(registry.render("relation-hierarchical", {"node_a": a, "node_b": b}), "No relation")
            add(registry.render("relation-hierarchical", {"node_a": b, "node_b": a}), "No relation")
    return script


def write_case_study():
    script = build_script()
    path = FIXTURES / "cyberattack.json"
    path.write_text(json.dumps(script, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print("wrote", path, f"({len(script)} prompt keys)")

    provider_path = FIXTURES / "provider_scripted.json"
    # relative script paths resolve against the config file's directory
    provider_path.write_text(
        json.dumps({"kind": "scripted", "path": "cyberattack.json"}, indent=2) + "\n",
        encoding="utf-8",
    )
    print("wrote", provider_path)

    for stage, events in EDIT_HOOKS.items():
        path = FIXTURES / f"edits_cyberattack_{stage}.json"
        path.write_text(json.dumps(events, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        print("wrote", path)


def freeze_golden():
    import tempfile

    from schemaloop.cli import run_pipeline
    from schemaloop.llm import ProviderConfig

    with tempfile.TemporaryDirectory() as tmp:
        session, document = run_pipeline(
            "cyber attack",
            ProviderConfig(kind="scripted", path=str(FIXTURES / "cyberattack.json")),
            session_dir=tmp,
            edits_after={stage: str(FIXTURES / f"edits_cyberattack_{stage}.json") for stage in EDIT_HOOKS},
            ontology_path=FIXTURES / "ontology.json",
            embeddings_path=FIXTURES / "embeddings.txt",
        )
    assert document is not None
    labels = [n.label for n in session.nodes]
    assert labels == NODE_LABELS, labels
    temporal = [(e.source, e.target) for e in session.graph.edges if e.kind == "temporal"]
    assert temporal == [("n1", "n2"), ("n2", "n3"), ("n3", "n4")], temporal
    hierarchical = [(e.source, e.target) for e in session.graph.edges if e.kind == "hierarchical"]
    assert hierarchical == [("g1", n) for n in ("n1", "n2", "n3", "n4")], hierarchical
    path = FIXTURES / "golden_export.json"
    path.write_bytes(document)
    print("wrote", path)


def main():
    FIXTURES.mkdir(exist_ok=True)
    vectors = build_vectors()
    verify(vectors)
    write_ontology()
    write_embeddings(vectors)
    write_case_study()
    freeze_golden()


if __name__ == "__main__":
    sys.exit(main())
