"""Exception taxonomy shared across the pipeline.

Every error a caller is expected to branch on gets its own class; the API
layer maps these onto its closed error-code set.
"""


class SchemaloopError(Exception):
    """Base class for all package errors."""


# --- provider / gateway ---

class TransportError(SchemaloopError):
    """Network-level failure (connect, timeout) that survived all retries."""


class ProviderError(SchemaloopError):
    """Well-formed error response from a completion provider."""


class MissingCredential(SchemaloopError):
    """Live provider configured without an API key."""


class UnknownProviderKind(SchemaloopError):
    """Provider config names a kind we do not implement."""


class MalformedScriptFile(SchemaloopError):
    """Scripted-provider fixture file is unreadable or mis-shaped."""


# --- prompt engine ---

class UnknownTemplate(SchemaloopError):
    """render() called with a template id that is not registered."""


class MissingParam(SchemaloopError):
    """render() called without a value for a declared placeholder."""

    def __init__(self, name: str):
        super().__init__(f"missing template parameter: {name}")
        self.name = name


class NoTuplesFound(SchemaloopError):
    """Tuple parser found zero well-formed bracketed groups."""


# --- schema core / curation ---

class EmptyScenario(SchemaloopError):
    """Session creation with an empty scenario string."""


class UnknownEntity(SchemaloopError):
    """Curation event references a step/node/edge that does not exist."""


class MalformedPayload(SchemaloopError):
    """Curation event payload fails its per-action schema."""


class EmptyRecordSet(SchemaloopError):
    """Grounding success rate over zero records."""


class TooFewNodes(SchemaloopError):
    """Graph construction needs at least two nodes."""


# --- grounding ---

class MalformedOntologyFile(SchemaloopError):
    """Ontology fixture is unreadable or mis-shaped."""


class DuplicateName(SchemaloopError):
    """Two ontology nodes share a case-folded name."""


# --- store ---

class StorageFailure(SchemaloopError):
    """Session could not be persisted (unwritable path, diverged log)."""


class NotFound(SchemaloopError):
    """No stored record for the requested session id."""


class CorruptRecord(SchemaloopError):
    """Stored record exists but its event log is unreadable."""


class EmptyGraph(SchemaloopError):
    """Schema export requested for a session with no graph nodes."""
