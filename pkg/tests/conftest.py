from __future__ import annotations

from pathlib import Path

import pytest

from schemaloop.grounding import load_embeddings, load_ontology
from schemaloop.llm import ScriptedProvider

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def ontology_store():
    return load_ontology(FIXTURES / "ontology.json")


@pytest.fixture(scope="session")
def embedding_store():
    return load_embeddings(FIXTURES / "embeddings.txt")


@pytest.fixture
def scripted():
    def factory(script: dict[str, list[str]], key_mode: str = "exact-prompt") -> ScriptedProvider:
        return ScriptedProvider(script, key_mode=key_mode)

    return factory


@pytest.fixture
def case_study_provider() -> ScriptedProvider:
    return ScriptedProvider.from_file(FIXTURES / "cyberattack.json")
