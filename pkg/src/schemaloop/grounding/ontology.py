"""Grounding target ontology: id, name, definition, similar-name links."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DuplicateName, MalformedOntologyFile

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OntologyNode:
    xpo_id: str
    name: str
    definition: str = ""
    similar_names: tuple[str, ...] = ()


@dataclass
class OntologyStore:
    """Nodes indexed by id and by case-folded name (names are unique after folding)."""

    nodes: list[OntologyNode] = field(default_factory=list)
    by_id: dict[str, OntologyNode] = field(default_factory=dict)
    by_name: dict[str, OntologyNode] = field(default_factory=dict)

    def add(self, node: OntologyNode):
        folded = node.name.casefold()
        if folded in self.by_name:
            raise DuplicateName(f"ontology already has a node named {node.name!r}")
        self.nodes.append(node)
        self.by_id[node.xpo_id] = node
        self.by_name[folded] = node

    def lookup_name(self, name: str) -> OntologyNode | None:
        return self.by_name.get(name.casefold())

    def __len__(self) -> int:
        return len(self.nodes)


def load_ontology(source: str | Path) -> OntologyStore:
    """Load a JSON array of {id, name, definition, similar} into an indexed store.

    similar entries that do not resolve to another node are dropped with a
    warning rather than failing the load.
    """
    try:
        raw = json.loads(Path(source).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedOntologyFile(f"unreadable ontology file {source}: {exc}") from exc
    if not isinstance(raw, list):
        raise MalformedOntologyFile("ontology file must be a JSON array of nodes")

    store = OntologyStore()
    pending: list[tuple[str, list[str]]] = []
    for entry in raw:
        if not isinstance(entry, dict):
            raise MalformedOntologyFile("ontology entries must be objects")
        try:
            xpo_id = entry["id"]
            name = entry["name"]
        except KeyError as exc:
            raise MalformedOntologyFile(f"ontology entry missing {exc}") from exc
        if not isinstance(xpo_id, str) or not isinstance(name, str) or not name:
            raise MalformedOntologyFile(f"bad ontology entry: {entry!r}")
        similar = entry.get("similar", [])
        if not isinstance(similar, list):
            raise MalformedOntologyFile(f"'similar' must be a list on {name!r}")
        store.add(OntologyNode(xpo_id=xpo_id, name=name, definition=entry.get("definition", "")))
        pending.append((xpo_id, similar))

    # Resolve similar-name links once every node exists.
    for xpo_id, similar in pending:
        kept = []
        for similar_name in similar:
            if store.lookup_name(str(similar_name)) is None:
                log.warning("dropping dangling similar name %r on %s", similar_name, xpo_id)
            else:
                kept.append(str(similar_name))
        node = store.by_id[xpo_id]
        if kept:
            updated = OntologyNode(
                xpo_id=node.xpo_id,
                name=node.name,
                definition=node.definition,
                similar_names=tuple(kept),
            )
            store.by_id[xpo_id] = updated
            store.by_name[node.name.casefold()] = updated
            store.nodes[store.nodes.index(node)] = updated
    return store
