"""Chat-completion client with retries plus a fully offline mock transport.

The wire shape is the common JSON one: POST {model, messages, temperature}
and read choices[0].message.content back. The transport is injectable so
every caller (aggregation, traversal agent, response generation) runs
against either a live HTTP endpoint or the in-memory mock; nothing else in
the package knows which.

The mock is deterministic. It answers from an explicit fixture table keyed
by a digest of the request messages, and falls back to a small heuristic
that understands this package's own prompt layouts, so end-to-end runs work
offline without canned transcripts.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import requests

from .errors import ConfigurationError, InvalidParameterError, ProtocolError, RemoteUnavailableError
from .metrics import tokenize

ENV_ENDPOINT = "HATMEM_ENDPOINT"
ENV_API_KEY = "HATMEM_API_KEY"
ENV_MODEL = "HATMEM_MODEL"

_ROLES = ("system", "user", "assistant")


@dataclass
class ChatRequest:
    model: str
    messages: list[dict]
    temperature: float = 0.0
    max_tokens: Optional[int] = None

    def validate(self) -> None:
        if not self.messages:
            raise InvalidParameterError("request needs at least one message")
        for message in self.messages:
            if message.get("role") not in _ROLES:
                raise InvalidParameterError(f"bad message role {message.get('role')!r}")
            if not isinstance(message.get("content"), str):
                raise InvalidParameterError("message content must be a string")
        if self.temperature < 0:
            raise InvalidParameterError("temperature must be >= 0")

    def payload(self) -> dict:
        body = {
            "model": self.model,
            "messages": [{"role": m["role"], "content": m["content"]} for m in self.messages],
            "temperature": self.temperature,
        }
        if self.max_tokens is not None:
            body["max_tokens"] = self.max_tokens
        return body


@dataclass
class ChatReply:
    content: str
    usage: dict = field(default_factory=dict)
    attempts: int = 1


def request_digest(messages: list[dict]) -> str:
    """Stable digest of a message list; the mock fixture table keys on this."""
    canonical = json.dumps(messages, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class HttpTransport:
    """Live JSON-over-HTTP backend."""

    def __init__(self, endpoint: str, api_key: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout

    def send(self, payload: dict):
        response = requests.post(
            self.endpoint,
            json=payload,
            headers={"Authorization": f"Bearer {self.api_key}"},
            timeout=self.timeout,
        )
        try:
            body = response.json()
        except ValueError:
            body = response.text
        return response.status_code, body


class MockTransport:
    """Offline backend; see `heuristic_reply` for the fallback behavior."""

    def __init__(self, fixtures: Optional[dict] = None):
        self.fixtures = dict(fixtures or {})
        self.calls = 0

    def send(self, payload: dict):
        self.calls += 1
        messages = payload.get("messages") or []
        content = self.fixtures.get(request_digest(messages))
        if content is None:
            content = heuristic_reply(messages)
        prompt_tokens = sum(len(tokenize(m.get("content", ""))) for m in messages)
        body = {
            "choices": [{"message": {"role": "assistant", "content": content}}],
            "usage": {
                "prompt_tokens": prompt_tokens,
                "completion_tokens": len(tokenize(content)),
            },
        }
        return 200, body


class LlmClient:
    """Retrying chat-completion client over an injectable transport.

    Retries transport failures, 5xx, and 429 with exponential backoff
    (1s base, doubling, 3 attempts total); other statuses and malformed
    bodies fail immediately as protocol errors. Instances are shareable
    across threads; retries are independent per request.
    """

    def __init__(self, transport, model: str, max_attempts: int = 3,
                 backoff_base: float = 1.0, backoff_factor: float = 2.0,
                 sleep: Callable[[float], None] = time.sleep):
        if max_attempts < 1:
            raise InvalidParameterError("max_attempts must be >= 1")
        self.transport = transport
        self.model = model
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_factor = backoff_factor
        self._sleep = sleep

    def complete(self, request: ChatRequest) -> ChatReply:
        request.validate()
        payload = request.payload()
        failure = "no attempt made"
        for attempt in range(1, self.max_attempts + 1):
            if attempt > 1:
                self._sleep(self.backoff_base * self.backoff_factor ** (attempt - 2))
            try:
                status, body = self.transport.send(payload)
            except requests.RequestException as exc:
                failure = f"transport failure: {exc}"
                continue
            if status == 429 or status >= 500:
                failure = f"HTTP {status}"
                continue
            if status != 200:
                raise ProtocolError(f"request rejected with HTTP {status}")
            if not isinstance(body, dict):
                raise ProtocolError("response body is not JSON")
            try:
                content = body["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError):
                raise ProtocolError("response body missing choices[0].message.content") from None
            if not isinstance(content, str):
                raise ProtocolError("reply content is not a string")
            usage = body.get("usage") if isinstance(body.get("usage"), dict) else {}
            return ChatReply(content=content, usage=usage, attempts=attempt)
        raise RemoteUnavailableError(f"gave up after {self.max_attempts} attempts ({failure})")


def live_client(endpoint: Optional[str] = None, api_key: Optional[str] = None,
                model: Optional[str] = None, timeout: float = 30.0,
                env=os.environ) -> LlmClient:
    """Client against a real endpoint; unset values fall back to env vars."""
    endpoint = endpoint or env.get(ENV_ENDPOINT)
    api_key = api_key or env.get(ENV_API_KEY)
    model = model or env.get(ENV_MODEL)
    if not endpoint:
        raise ConfigurationError(f"no endpoint configured (flag, config file, or {ENV_ENDPOINT})")
    if not api_key:
        raise ConfigurationError(f"no API key configured (flag, config file, or {ENV_API_KEY})")
    if not model:
        raise ConfigurationError(f"no model configured (flag, config file, or {ENV_MODEL})")
    return LlmClient(HttpTransport(endpoint, api_key, timeout), model=model)


def mock_client(fixtures: Optional[dict] = None, model: str = "mock-chat") -> LlmClient:
    return LlmClient(MockTransport(fixtures), model=model, sleep=lambda _s: None)


# --------------------------------------------------------------- mock replies

# Function words ignored when checking whether a passage covers a question.
_STOPWORDS = frozenset("""
a an the this that these those some any each
i you he she it we they me him her us them
my your his its our their mine yours
am is are was were be been being do does did doing have has had having
will would can could shall should may might must
what which who whom whose where when how why whether
and or but nor so yet if then else because while since as than
of on in at to for with about into over under from by up down out off
no not never ever always really just also too only quite
tell say says said ask asks asked please thanks
""".split())


def informative_tokens(text: str) -> list[str]:
    return [token for token in tokenize(text) if token not in _STOPWORDS]


def _covers(passage: str, query: str) -> bool:
    wanted = informative_tokens(query)
    if not wanted:
        return True
    have = set(tokenize(passage))
    return all(token in have for token in wanted)


def _section(text: str, start_marker: str, end_markers: list[str]) -> str:
    start = text.find(start_marker)
    if start < 0:
        return ""
    start += len(start_marker)
    end = len(text)
    for marker in end_markers:
        pos = text.find(marker, start)
        if 0 <= pos < end:
            end = pos
    return text[start:end].strip()


def heuristic_reply(messages: list[dict]) -> str:
    """Deterministic stand-in replies for this package's own prompt layouts.

    Sufficiency prompts get YES when every informative question token occurs
    in the passage; traversal prompts get ACCEPT under the same test and DOWN
    otherwise; persona prompts echo the merged passages; response prompts
    quote the best-matching memory line. Anything else gets a fixed string.
    """
    text = "\n".join(m.get("content", "") for m in messages)

    if "Reply with exactly one action token." in text:
        query = _section(text, "QUESTION:", ["\nCURRENT NODE:"])
        node_text = _section(text, "CURRENT NODE:", ["\nMOVES SO FAR:"])
        return "ACCEPT" if _covers(node_text, query) else "DOWN"

    if "Reply YES or NO." in text:
        query = _section(text, "QUESTION:", ["\nPASSAGE:"])
        passage = _section(text, "PASSAGE:", ["\nDoes the passage contain"])
        return "YES" if _covers(passage, query) else "NO"

    if "Passages to merge:" in text:
        block = _section(text, "Passages to merge:", [])
        merged = re.sub(r"(?m)^\d+\.\s", "", block)
        return " ".join(merged.split())

    if "USER MESSAGE:" in text:
        query = _section(text, "USER MESSAGE:", [])
        memory = _section(text, "MEMORY:", ["\nUSER MESSAGE:"])
        wanted = set(informative_tokens(query))
        best_line = ""
        best_overlap = 0
        for line in memory.splitlines():
            overlap = len(wanted & set(tokenize(line)))
            if overlap > best_overlap:
                best_line = line
                best_overlap = overlap
        if best_overlap > 0:
            return re.sub(r"^(user|assistant):\s*", "", best_line.strip())
        return "I do not have that in my notes."

    return "OK."
