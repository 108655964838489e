"""Parsers that turn raw completion text into structured artifacts.

All parsers are total over arbitrary text (the tuple parser alone signals
NoTuplesFound); garbage degrades to empty lists or safe defaults, never
exceptions, because completions are adversarially messy.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .errors import NoTuplesFound

log = logging.getLogger(__name__)

TEMPORAL = "temporal"
HIERARCHICAL = "hierarchical"

TEMPORAL_VALUES = ("Before", "After", "SameTime", "NoRelation")
HIERARCHICAL_VALUES = ("Parent", "Child", "NoRelation")
NO_RELATION = "NoRelation"

# Fixed lettered option order used when rendering the multiple-choice
# questions; bare-letter answers map through these.
TEMPORAL_LETTER_ORDER = ("Before", "After", "SameTime", "NoRelation")
HIERARCHICAL_LETTER_ORDER = ("Parent", "Child", "NoRelation")


@dataclass(frozen=True)
class RelationAnswer:
    axis: str
    value: str

    def __post_init__(self):
        legal = TEMPORAL_VALUES if self.axis == TEMPORAL else HIERARCHICAL_VALUES
        if self.axis not in (TEMPORAL, HIERARCHICAL):
            raise ValueError(f"unknown axis {self.axis!r}")
        if self.value not in legal:
            raise ValueError(f"{self.value!r} is not legal for axis {self.axis!r}")


@dataclass(frozen=True)
class RawTuple:
    subject: str
    verb: str
    object: str | None = None

    def __post_init__(self):
        if not self.subject or not self.verb:
            raise ValueError("subject and verb must be non-empty")


_MARKER = re.compile(r"(?m)^[ \t]*\d+\.")
_PRIMED = re.compile(r"\d+\.\s*$")


def parse_numbered_list(completion: str, prompt_primed_with: str = "") -> list[str]:
    """Reconstruct an ordered list from a numbered-list completion.

    Items split on line-initial ``<int>.`` markers, with or without a
    following space (completions show both "2. The attacker…" and
    "2.epidemic"). When the prompt primed the list ("… 1."), the completion
    text before the first marker is item 1. Without priming, leading free
    text ahead of a marker is discarded as preamble; marker-free non-empty
    text comes back as a single item. Items are trimmed, empties dropped,
    order preserved.
    """
    if not completion.strip():
        return []
    primed = bool(_PRIMED.search(prompt_primed_with.rstrip()))
    head, *rest = _MARKER.split(completion)
    items = []
    head = head.strip()
    if head and (primed or not rest):
        items.append(head)
    items.extend(segment.strip() for segment in rest)
    return [item for item in items if item]


def format_as_numbered(items: list[str], start: int = 1) -> str:
    """Inverse of parse_numbered_list for single-line items."""
    return "\n".join(f"{i}. {item}" for i, item in enumerate(items, start=start))


_GROUP = re.compile(r"\[([^\[\]]*)\]")
_TUPLE_KEYS = ("verb", "subject", "object")


def parse_tuples(completion: str) -> list[RawTuple]:
    """Parse ``[verb: V, subject: S, object: O]`` groups from a completion.

    Field order inside the brackets is tolerated in any permutation; an
    object of None (case-insensitive) means no object. Groups that fail to
    yield a non-empty verb and subject are skipped and logged.

    Raises NoTuplesFound when zero groups parse.
    """
    tuples = []
    for group in _GROUP.findall(completion):
        fields: dict[str, str] = {}
        for part in group.split(","):
            if ":" not in part:
                continue
            key, _, value = part.partition(":")
            key = key.strip().lower()
            if key in _TUPLE_KEYS and key not in fields:
                fields[key] = value.strip()
        subject = fields.get("subject", "")
        verb = fields.get("verb", "")
        if not subject or not verb:
            log.warning("skipping tuple group without subject/verb: %r", group)
            continue
        obj: str | None = fields.get("object") or None
        if obj is not None and obj.lower() == "none":
            obj = None
        tuples.append(RawTuple(subject=subject, verb=verb, object=obj))
    if not tuples:
        raise NoTuplesFound(f"no well-formed tuples in completion: {completion[:120]!r}")
    return tuples


# Earliest case-insensitive occurrence of any of these decides the answer;
# multi-word phrases checked alongside single words.
_TEMPORAL_PHRASES = [
    (re.compile(r"\bbefore\b", re.I), "Before"),
    (re.compile(r"\bafter\b", re.I), "After"),
    (re.compile(r"\bsame\s*time\b", re.I), "SameTime"),
    (re.compile(r"\bno\s*relation\b", re.I), "NoRelation"),
]
_HIERARCHICAL_PHRASES = [
    (re.compile(r"\bparent\b", re.I), "Parent"),
    (re.compile(r"\bchild\b", re.I), "Child"),
    (re.compile(r"\bno\s*relation\b", re.I), "NoRelation"),
]
# Uppercase only: a lowercase standalone "a" is almost always the article.
_LETTER = re.compile(r"\b([A-D])\b")


def parse_relation_answer(completion: str, axis: str) -> RelationAnswer:
    """Map free-text multiple-choice output onto a legal relation answer.

    Earliest occurrence of a legal option word/phrase wins; bare option
    letters map through the fixed option order the rendered question used.
    Anything unrecognized defaults to NoRelation (logged).
    """
    phrases = _TEMPORAL_PHRASES if axis == TEMPORAL else _HIERARCHICAL_PHRASES
    letter_order = TEMPORAL_LETTER_ORDER if axis == TEMPORAL else HIERARCHICAL_LETTER_ORDER

    best: tuple[int, str] | None = None
    for pattern, value in phrases:
        match = pattern.search(completion)
        if match and (best is None or match.start() < best[0]):
            best = (match.start(), value)
    if best is not None:
        return RelationAnswer(axis=axis, value=best[1])

    letter = _LETTER.search(completion)
    if letter:
        index = ord(letter.group(1)) - ord("A")
        if index < len(letter_order):
            return RelationAnswer(axis=axis, value=letter_order[index])

    log.info("unrecognized relation answer %r; defaulting to NoRelation", completion[:80])
    return RelationAnswer(axis=axis, value=NO_RELATION)


def parse_name_list(completion: str) -> list[str]:
    """Numbered-list grammar, then lowercase, trim, and dedupe keeping first occurrence."""
    seen = set()
    names = []
    for item in parse_numbered_list(completion, prompt_primed_with="1."):
        name = item.strip().lower()
        if name and name not in seen:
            seen.add(name)
            names.append(name)
    return names
