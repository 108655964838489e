"""Prompt templates for the four pipeline stages.

Built-in templates ship as package data (``data/templates.json``); callers can
layer additional template files on top. Rendering is pure placeholder
substitution, nothing else.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import MissingParam, UnknownTemplate

STAGES = ("step-generation", "node-extraction", "relation-question", "grounding-inference")

_PLACEHOLDER = re.compile(r"\{(\w+)\}")


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    stage: str
    body: str
    placeholders: tuple[str, ...]

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r} for template {self.template_id!r}")
        declared = set(self.placeholders)
        used = set(_PLACEHOLDER.findall(self.body))
        if not used <= declared:
            raise ValueError(
                f"template {self.template_id!r} uses undeclared placeholders: {sorted(used - declared)}"
            )

    def render(self, params: dict[str, str]) -> str:
        out = self.body
        for name in self.placeholders:
            if name not in params:
                raise MissingParam(name)
            out = out.replace("{" + name + "}", str(params[name]))
        return out


class TemplateRegistry:
    """Lookup table of templates by id."""

    def __init__(self, templates: list[PromptTemplate]):
        self._by_id = {t.template_id: t for t in templates}

    @classmethod
    def builtin(cls) -> "TemplateRegistry":
        raw = resources.files("schemaloop.data").joinpath("templates.json").read_text(encoding="utf-8")
        return cls(_parse_template_list(json.loads(raw)))

    @classmethod
    def from_file(cls, path: str | Path) -> "TemplateRegistry":
        return cls(_parse_template_list(json.loads(Path(path).read_text(encoding="utf-8"))))

    def get(self, template_id: str) -> PromptTemplate:
        try:
            return self._by_id[template_id]
        except KeyError:
            raise UnknownTemplate(f"no template {template_id!r}") from None

    def ids(self) -> list[str]:
        return sorted(self._by_id)

    def render(self, template_id: str, params: dict[str, str]) -> str:
        return self.get(template_id).render(params)


def _parse_template_list(raw: object) -> list[PromptTemplate]:
    if not isinstance(raw, list):
        raise ValueError("template data must be a JSON array")
    out = []
    for entry in raw:
        out.append(
            PromptTemplate(
                template_id=entry["template_id"],
                stage=entry["stage"],
                body=entry["body"],
                placeholders=tuple(entry["placeholders"]),
            )
        )
    return out


_default_registry: TemplateRegistry | None = None


def default_registry() -> TemplateRegistry:
    global _default_registry
    if _default_registry is None:
        _default_registry = TemplateRegistry.builtin()
    return _default_registry


def render(template_id: str, params: dict[str, str]) -> str:
    """Render a built-in template. See TemplateRegistry for custom sets."""
    return default_registry().render(template_id, params)
