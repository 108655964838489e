"""Uniform access to text-completion providers.

Two providers share one ``complete()`` contract: a live client for
OpenAI-compatible completion endpoints, and a scripted provider that replays
canned completions from a fixture file for tests and offline demos.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import httpx

from .errors import (
    MalformedScriptFile,
    MissingCredential,
    ProviderError,
    TransportError,
    UnknownProviderKind,
)

log = logging.getLogger(__name__)

ENV_API_KEY = "LLM_API_KEY"
ENV_BASE_URL = "LLM_BASE_URL"
ENV_MODEL_ID = "LLM_MODEL_ID"

DEFAULT_TEMPERATURE = 0.7
DEFAULT_MAX_TOKENS = 256


@dataclass(frozen=True)
class CompletionRequest:
    """Everything a provider needs; carrying it all is what makes providers swappable."""

    prompt: str
    model_id: str = ""
    max_tokens: int = DEFAULT_MAX_TOKENS
    temperature: float = DEFAULT_TEMPERATURE
    stop_sequences: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")
        # Tolerate lists from JSON configs.
        if not isinstance(self.stop_sequences, tuple):
            object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))


@dataclass(frozen=True)
class CompletionResult:
    text: str
    provider_id: str
    latency_ms: int = 0

    def __post_init__(self):
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be non-negative")


class Provider(Protocol):
    """Anything with a ``complete`` method; safe for concurrent callers."""

    provider_id: str

    def complete(self, request: CompletionRequest) -> CompletionResult:
        ...


def _apply_stop(text: str, stop_sequences: tuple[str, ...]) -> str:
    """Truncate at the earliest stop sequence; the only mutation complete() may make."""
    cut = len(text)
    for stop in stop_sequences:
        if stop:
            idx = text.find(stop)
            if idx != -1:
                cut = min(cut, idx)
    return text[:cut]


def normalize_prompt(prompt: str) -> str:
    """Whitespace-collapsed form used for digest keys."""
    return " ".join(prompt.split())


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(normalize_prompt(prompt).encode("utf-8")).hexdigest()


class ScriptedProvider:
    """Replays canned completions keyed by prompt.

    ``key_mode="exact-prompt"`` looks completions up by the exact prompt
    string; ``"prompt-digest"`` looks them up by the sha256 of the
    whitespace-collapsed prompt, for fixtures whose prompts embed user edits.
    Each key holds an ordered list consumed front to back, so re-prompting the
    same template yields successive completions. Cursor updates are locked;
    concurrent replay is race-free even though arrival order among concurrent
    callers is unspecified.
    """

    def __init__(self, script: dict[str, list[str]], key_mode: str = "exact-prompt"):
        if key_mode not in ("exact-prompt", "prompt-digest"):
            raise ValueError(f"unknown key_mode: {key_mode}")
        self.provider_id = "scripted"
        self.key_mode = key_mode
        self._script = {k: list(v) for k, v in script.items()}
        self._cursors: dict[str, int] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path, key_mode: str = "exact-prompt") -> "ScriptedProvider":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise MalformedScriptFile(f"script file not found: {path}") from exc
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedScriptFile(f"unreadable script file {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise MalformedScriptFile("script file must be a JSON object of key -> [completions]")
        script: dict[str, list[str]] = {}
        for key, completions in raw.items():
            if not isinstance(completions, list) or not all(isinstance(c, str) for c in completions):
                raise MalformedScriptFile(f"script entry {key!r} is not an array of strings")
            script[key] = completions
        return cls(script, key_mode=key_mode)

    def _key_for(self, prompt: str) -> str:
        if self.key_mode == "prompt-digest":
            return prompt_digest(prompt)
        return prompt

    def complete(self, request: CompletionRequest) -> CompletionResult:
        key = self._key_for(request.prompt)
        with self._lock:
            completions = self._script.get(key)
            if completions is None:
                raise ProviderError(f"no scripted completion for prompt key {key[:80]!r}")
            cursor = self._cursors.get(key, 0)
            if cursor >= len(completions):
                raise ProviderError(f"no scripted completion left for prompt key {key[:80]!r}")
            self._cursors[key] = cursor + 1
            text = completions[cursor]
        return CompletionResult(
            text=_apply_stop(text, request.stop_sequences),
            provider_id=self.provider_id,
            latency_ms=0,
        )


class LiveProvider:
    """OpenAI-compatible completions client.

    POSTs ``{base_url}/completions`` with prompt/model/max_tokens/temperature/
    stop. Transient transport failures retry up to ``max_retries`` total
    attempts with exponential backoff; a well-formed provider error (non-2xx
    response) surfaces immediately, never retried.
    """

    def __init__(
        self,
        base_url: str,
        api_key: str,
        model_id: str = "",
        max_retries: int = 3,
        backoff_s: float = 0.25,
        timeout_s: float = 30.0,
        transport: httpx.BaseTransport | None = None,
    ):
        if not api_key:
            raise MissingCredential(f"no API key; set {ENV_API_KEY}")
        self.provider_id = "live"
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model_id = model_id
        self.max_retries = max(1, max_retries)
        self.backoff_s = backoff_s
        self._client = httpx.Client(
            timeout=timeout_s,
            transport=transport,
            headers={"Authorization": f"Bearer {api_key}"},
        )

    def complete(self, request: CompletionRequest) -> CompletionResult:
        payload = {
            "model": request.model_id or self.model_id,
            "prompt": request.prompt,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        }
        if request.stop_sequences:
            payload["stop"] = list(request.stop_sequences)
        url = f"{self.base_url}/completions"
        started = time.monotonic()
        last_exc: Exception | None = None
        for attempt in range(self.max_retries):
            try:
                response = self._client.post(url, json=payload)
            except httpx.HTTPError as exc:
                last_exc = exc
                log.warning("transport failure (attempt %d/%d): %s", attempt + 1, self.max_retries, exc)
                if attempt + 1 < self.max_retries:
                    time.sleep(self.backoff_s * (2 ** attempt))
                continue
            if response.status_code >= 400:
                raise ProviderError(f"provider returned {response.status_code}: {_error_message(response)}")
            text = _extract_text(response)
            latency_ms = int((time.monotonic() - started) * 1000)
            return CompletionResult(
                text=_apply_stop(text, request.stop_sequences),
                provider_id=self.provider_id,
                latency_ms=latency_ms,
            )
        raise TransportError(f"transport failed after {self.max_retries} attempts: {last_exc}")


def _error_message(response: httpx.Response) -> str:
    try:
        body = response.json()
    except (json.JSONDecodeError, ValueError):
        return response.text[:200]
    if isinstance(body, dict):
        err = body.get("error")
        if isinstance(err, dict) and "message" in err:
            return str(err["message"])
        if isinstance(err, str):
            return err
    return str(body)[:200]


def _extract_text(response: httpx.Response) -> str:
    try:
        body = response.json()
        choices = body["choices"]
        return choices[0]["text"]
    except (json.JSONDecodeError, ValueError, KeyError, IndexError, TypeError) as exc:
        raise ProviderError(f"malformed completion payload: {exc}") from exc


@dataclass
class ProviderConfig:
    """Parsed provider config; ``kind`` selects the implementation."""

    kind: str
    path: str | None = None          # scripted: fixture file
    key_mode: str = "exact-prompt"   # scripted
    base_url: str | None = None      # live; falls back to LLM_BASE_URL
    model_id: str | None = None      # live; falls back to LLM_MODEL_ID
    max_retries: int = 3
    backoff_s: float = 0.25
    timeout_s: float = 30.0
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "ProviderConfig":
        if "kind" not in raw:
            raise UnknownProviderKind("provider config has no 'kind'")
        known = {f for f in cls.__dataclass_fields__ if f != "extra"}
        kwargs = {k: v for k, v in raw.items() if k in known}
        extra = {k: v for k, v in raw.items() if k not in known}
        return cls(extra=extra, **kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "ProviderConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise UnknownProviderKind("provider config must be a JSON object")
        config = cls.from_dict(raw)
        # A relative script path is relative to the config file, not the CWD.
        if config.path and not Path(config.path).is_absolute():
            config.path = str(Path(path).resolve().parent / config.path)
        return config


def resolve_provider(config: ProviderConfig) -> Provider:
    """Build a provider handle from config; scripted handles come from a fixture file."""
    if config.kind == "scripted":
        if not config.path:
            raise MalformedScriptFile("scripted provider config needs a 'path'")
        return ScriptedProvider.from_file(config.path, key_mode=config.key_mode)
    if config.kind == "live":
        api_key = os.environ.get(ENV_API_KEY, "")
        base_url = config.base_url or os.environ.get(ENV_BASE_URL, "")
        model_id = config.model_id or os.environ.get(ENV_MODEL_ID, "")
        if not base_url:
            raise UnknownProviderKind(f"live provider needs a base URL (config or {ENV_BASE_URL})")
        return LiveProvider(
            base_url=base_url,
            api_key=api_key,
            model_id=model_id,
            max_retries=config.max_retries,
            backoff_s=config.backoff_s,
            timeout_s=config.timeout_s,
        )
    raise UnknownProviderKind(f"unknown provider kind: {config.kind!r}")
