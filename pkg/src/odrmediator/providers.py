"""Chat-completion providers.

Two implementations behind one ``complete(bundle)`` surface: a remote
HTTP provider speaking the de-facto chat-completion JSON contract, and
a scripted provider that maps known prompts to canned responses for
tests and offline demos.

The API secret is read from an environment variable at call time and is
never stored on any object, so reprs and logs cannot leak it.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence

import httpx

from .prompting import PromptBundle, TurnRole

logger = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "LLM_API_KEY"

# First retry delay; doubles on each subsequent attempt.
INITIAL_BACKOFF_SECONDS = 1.0

# How much of a rejection body to keep in the error message.
BODY_EXCERPT_CHARS = 200


class ProviderError(Exception):
    """Base class for completion failures."""


class MissingApiKey(ProviderError):
    """The configured environment variable holds no API key."""


class ProviderTimeout(ProviderError):
    """The request timed out, including all retries."""


class RateLimited(ProviderError):
    """The provider kept returning 429 through all retries."""


class EmptyCompletion(ProviderError):
    """The provider answered with an empty completion."""


class ProviderRejected(ProviderError):
    """The provider refused the request (or a scripted lookup missed)."""

    def __init__(self, status: int, body_excerpt: str = ""):
        self.status = status
        self.body_excerpt = body_excerpt[:BODY_EXCERPT_CHARS]
        super().__init__(f"provider rejected request (status {status}): {self.body_excerpt}")


class ScriptParseError(ProviderError):
    """A provider script file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ProviderTag(str, Enum):
    REMOTE = "remote"
    SCRIPTED = "scripted"


@dataclass(frozen=True)
class ProviderConfig:
    endpoint_url: str
    model_id: str
    api_key_env: str = DEFAULT_API_KEY_ENV
    max_context_tokens: int = 8192
    max_completion_tokens: int = 1024
    temperature: float = 0.7
    request_timeout: float = 30.0
    max_retries: int = 2

    def __post_init__(self) -> None:
        if self.max_context_tokens < 1:
            raise ValueError("max_context_tokens must be positive")
        if not 0 < self.max_completion_tokens < self.max_context_tokens:
            raise ValueError("max_completion_tokens must be positive and below max_context_tokens")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    latency: float
    provider_tag: ProviderTag

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("completion text must be non-empty")


class CompletionProvider(Protocol):
    def complete(self, bundle: PromptBundle) -> CompletionResult: ...


@dataclass(frozen=True)
class ScriptEntry:
    match: Optional[str]  # None marks the default response
    response: str


class ScriptedProvider:
    """Deterministic provider backed by canned (match, response) pairs.

    Lookup order: exact match on the bundle's mediator instructions when
    present, then exact match on the final user turn's content, then the
    default entry. A miss with no default raises ProviderRejected.
    """

    # Budget hint for prompt trimming; scripted responses have none.
    max_context_tokens: Optional[int] = None

    def __init__(self, entries: Sequence[ScriptEntry]):
        self._responses: dict[str, str] = {}
        self._default: Optional[str] = None
        for entry in entries:
            if entry.match is None:
                if self._default is None:
                    self._default = entry.response
            else:
                self._responses.setdefault(entry.match, entry.response)

    def complete(self, bundle: PromptBundle) -> CompletionResult:
        started = time.monotonic()
        response: Optional[str] = None
        if bundle.instructions is not None:
            response = self._responses.get(bundle.instructions)
        if response is None:
            final_user = bundle.final_user_turn()
            if final_user is not None:
                response = self._responses.get(final_user.content)
        if response is None:
            response = self._default
        if response is None:
            raise ProviderRejected(404, "no scripted response matches this prompt")
        text = response.strip()
        if not text:
            raise EmptyCompletion("scripted response is empty")
        return CompletionResult(text, time.monotonic() - started, ProviderTag.SCRIPTED)


def load_script(path: str | Path) -> ScriptedProvider:
    """Load a scripted provider from a JSON file.

    Format: a UTF-8 JSON array of {"match": text | null, "response": text};
    a null match marks the default response. Matching is bit-exact.
    """
    raw = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ScriptParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(data, list):
        raise ScriptParseError("script must be a JSON array")
    entries = []
    for index, item in enumerate(data):
        if not isinstance(item, dict) or "response" not in item:
            raise ScriptParseError(f"entry {index} must be an object with a 'response' key")
        match = item.get("match")
        response = item["response"]
        if match is not None and not isinstance(match, str):
            raise ScriptParseError(f"entry {index}: 'match' must be a string or null")
        if not isinstance(response, str):
            raise ScriptParseError(f"entry {index}: 'response' must be a string")
        entries.append(ScriptEntry(match, response))
    return ScriptedProvider(entries)


_WIRE_ROLES = {
    TurnRole.SYSTEM: "system",
    TurnRole.USER: "user",
    TurnRole.ASSISTANT: "assistant",
}


class RemoteProvider:
    """HTTP chat-completion client with bounded retries.

    Issues at most ``1 + max_retries`` requests per call, backing off
    exponentially from one second on timeouts, 429s and 5xx responses.
    Other 4xx responses fail immediately.
    """

    def __init__(
        self,
        config: ProviderConfig,
        *,
        transport: Optional[httpx.BaseTransport] = None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self._sleeper = sleeper
        self._client = httpx.Client(timeout=config.request_timeout, transport=transport)

    @property
    def max_context_tokens(self) -> int:
        return self.config.max_context_tokens

    def close(self) -> None:
        self._client.close()

    def _api_key(self) -> str:
        key = os.environ.get(self.config.api_key_env, "")
        if not key:
            raise MissingApiKey(
                f"environment variable {self.config.api_key_env} is unset or empty"
            )
        return key

    def _payload(self, bundle: PromptBundle) -> dict:
        return {
            "model": self.config.model_id,
            "messages": [
                {"role": _WIRE_ROLES[turn.role], "content": turn.content}
                for turn in bundle.turns
            ],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_completion_tokens,
        }

    def complete(self, bundle: PromptBundle) -> CompletionResult:
        key = self._api_key()  # fail before any network traffic
        payload = self._payload(bundle)
        headers = {"Authorization": f"Bearer {key}"}
        started = time.monotonic()
        attempts = 1 + self.config.max_retries
        backoff = INITIAL_BACKOFF_SECONDS
        last_error: ProviderError = ProviderRejected(0, "no request issued")

        for attempt in range(attempts):
            try:
                response = self._client.post(
                    self.config.endpoint_url, json=payload, headers=headers
                )
            except httpx.TimeoutException as exc:
                last_error = ProviderTimeout(f"request timed out after {attempt + 1} attempt(s)")
                last_error.__cause__ = exc
            except httpx.HTTPError as exc:
                last_error = ProviderRejected(0, f"transport failure: {exc}")
            else:
                if response.status_code == 200:
                    return self._parse_success(response, started)
                excerpt = response.text[:BODY_EXCERPT_CHARS]
                if response.status_code == 429:
                    last_error = RateLimited(f"rate limited: {excerpt}")
                elif response.status_code >= 500:
                    last_error = ProviderRejected(response.status_code, excerpt)
                else:
                    # Client errors other than 429 are final.
                    raise ProviderRejected(response.status_code, excerpt)
            if attempt + 1 < attempts:
                self._sleeper(backoff)
                backoff *= 2
        raise last_error

    def _parse_success(self, response: httpx.Response, started: float) -> CompletionResult:
        try:
            body = response.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise ProviderRejected(200, f"malformed completion body: {exc}") from exc
        text = (text or "").strip()
        if not text:
            raise EmptyCompletion("provider returned an empty completion")
        return CompletionResult(text, time.monotonic() - started, ProviderTag.REMOTE)
