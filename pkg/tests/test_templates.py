from __future__ import annotations

import json

import pytest

from schemaloop.errors import MissingParam, UnknownTemplate
from schemaloop.templates import PromptTemplate, TemplateRegistry, default_registry, render


def test_sub_steps_renders_exactly():
    assert render("sub-steps", {"scenario": "an attack"}) == "List the sub-events involved in an attack: 1."


def test_events_before_renders_exactly():
    assert render("events-before", {"scenario": "an attack"}) == "List the events before an attack: 1."


def test_events_after_renders_exactly():
    assert render("events-after", {"scenario": "an attack"}) == "List the events after an attack: 1."


def test_step_expansion_embeds_step_text():
    out = render("step-expansion", {"step": "plan the attack"})
    assert out == "List the steps involved plan the attack in detail: 1."


def test_missing_param_names_the_placeholder():
    with pytest.raises(MissingParam) as excinfo:
        render("sub-steps", {})
    assert excinfo.value.name == "scenario"


def test_unknown_template():
    with pytest.raises(UnknownTemplate):
        render("no-such-template", {})


def test_node_extraction_appends_target_sentence():
    out = render("node-extraction", {"sentence": "Justin slept."})
    assert out.endswith("Q: Justin slept.\nA:")
    assert "Write None if there is no object." in out
    assert "[verb: sleep, subject: Justin, object: None]" in out


def test_grounding_inference_primes_numbered_list():
    out = render("grounding-inference", {"event": "The attacker gathers information about the target"})
    assert out.endswith('List event names related to the event "The attacker gathers information about the target":\n1.')
    assert "1.infection" in out  # few-shot block kept verbatim


def test_relation_questions_fix_option_order():
    temporal = render("relation-temporal", {"node_a": "collect data", "node_b": "identify the signs"})
    assert temporal.index("A. Before") < temporal.index("B. After") < temporal.index("C. Same time") < temporal.index("D. No relation")
    hierarchical = render("relation-hierarchical", {"node_a": "x", "node_b": "y"})
    assert hierarchical.index("A. Parent") < hierarchical.index("B. Child") < hierarchical.index("C. No relation")


def test_builtin_templates_leave_no_brace_residue():
    registry = default_registry()
    for template_id in registry.ids():
        template = registry.get(template_id)
        params = {name: f"value-{name}" for name in template.placeholders}
        out = template.render(params)
        assert "{" not in out and "}" not in out, template_id


def test_template_rejects_undeclared_placeholder():
    with pytest.raises(ValueError, match="undeclared"):
        PromptTemplate(template_id="bad", stage="step-generation", body="hi {oops}", placeholders=())


def test_template_rejects_unknown_stage():
    with pytest.raises(ValueError, match="stage"):
        PromptTemplate(template_id="bad", stage="nonsense", body="hi", placeholders=())


def test_registry_from_file(tmp_path):
    data = [
        {
            "template_id": "custom",
            "stage": "step-generation",
            "body": "Steps for {scenario}: 1.",
            "placeholders": ["scenario"],
        }
    ]
    path = tmp_path / "templates.json"
    path.write_text(json.dumps(data))
    registry = TemplateRegistry.from_file(path)
    assert registry.render("custom", {"scenario": "a drill"}) == "Steps for a drill: 1."
