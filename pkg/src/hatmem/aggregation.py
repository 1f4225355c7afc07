"""Aggregate functions that fold ordered child texts into one parent text.

Three kinds: `concat` (separator join), `truncate` (join then keep the first
B tokens), and `llm_persona` (persona-note summarization through the chat
client). Deterministic kinds are pure functions of the input list; the
persona kind is pure given a fixed mock transcript. Inputs always arrive
oldest to newest.
"""

from __future__ import annotations

from typing import Optional

from .errors import (
    AggregationUnavailableError,
    ContractViolationError,
    InvalidParameterError,
    RemoteUnavailableError,
)
from .llm import ChatRequest
from .metrics import tokenize
from .prompts import render_messages

DEFAULT_TRUNCATE_BUDGET = 256


def persona_prompt(children_texts: list[str], template: str = "persona_v1") -> list[dict]:
    """Two-message persona-merge conversation with numbered child blocks."""
    if not children_texts:
        raise ContractViolationError("persona_prompt needs at least one text")
    block = "\n".join(f"{i}. {text}" for i, text in enumerate(children_texts, start=1))
    return render_messages(template, children_block=block)


class Aggregator:
    """Interface: subclasses define `kind`, `params()`, and `aggregate()`."""

    kind = ""

    def params(self) -> dict:
        raise NotImplementedError

    def spec(self) -> dict:
        """JSON-able identity of this aggregator, stored in tree documents."""
        return {"kind": self.kind, "params": self.params()}

    @property
    def ref(self) -> str:
        return self.kind

    def aggregate(self, children_texts: list[str]) -> str:
        raise NotImplementedError

    def _check(self, children_texts: list[str]) -> None:
        if not children_texts:
            raise ContractViolationError("aggregate called with no children texts")


class ConcatAggregator(Aggregator):
    kind = "concat"

    def __init__(self, separator: str = "\n"):
        self.separator = separator

    def params(self) -> dict:
        return {"separator": self.separator}

    def aggregate(self, children_texts: list[str]) -> str:
        self._check(children_texts)
        return self.separator.join(children_texts)


class TruncateAggregator(Aggregator):
    kind = "truncate"

    def __init__(self, budget: int = DEFAULT_TRUNCATE_BUDGET):
        if not isinstance(budget, int) or isinstance(budget, bool) or budget < 1:
            raise InvalidParameterError(f"truncate budget must be a positive integer, got {budget!r}")
        self.budget = budget

    def params(self) -> dict:
        return {"budget": self.budget}

    def aggregate(self, children_texts: list[str]) -> str:
        self._check(children_texts)
        tokens = tokenize(" ".join(children_texts))
        return " ".join(tokens[: self.budget])


class LlmPersonaAggregator(Aggregator):
    """Summarizes children into persona notes via the chat client.

    A client is optional so that serialized trees can be loaded for
    inspection without one; aggregation then fails until a client is bound.
    """

    kind = "llm_persona"

    def __init__(self, client=None, template: str = "persona_v1", temperature: float = 0.0,
                 max_tokens: Optional[int] = None):
        self.client = client
        self.template = template
        self.temperature = temperature
        self.max_tokens = max_tokens

    def params(self) -> dict:
        return {"template": self.template, "temperature": self.temperature}

    def aggregate(self, children_texts: list[str]) -> str:
        self._check(children_texts)
        if self.client is None:
            raise AggregationUnavailableError("llm_persona aggregator has no chat client bound")
        request = ChatRequest(
            model=self.client.model,
            messages=persona_prompt(children_texts, self.template),
            temperature=self.temperature,
            max_tokens=self.max_tokens,
        )
        try:
            reply = self.client.complete(request)
        except RemoteUnavailableError as exc:
            raise AggregationUnavailableError(f"persona aggregation failed: {exc}") from exc
        return reply.content.strip()


def aggregator_from_spec(kind: str, params: Optional[dict] = None, client=None) -> Aggregator:
    """Build an aggregator from its serialized (kind, params) identity."""
    params = dict(params or {})
    if kind == "concat":
        agg: Aggregator = ConcatAggregator(separator=params.pop("separator", "\n"))
    elif kind == "truncate":
        agg = TruncateAggregator(budget=params.pop("budget", DEFAULT_TRUNCATE_BUDGET))
    elif kind == "llm_persona":
        agg = LlmPersonaAggregator(
            client=client,
            template=params.pop("template", "persona_v1"),
            temperature=params.pop("temperature", 0.0),
        )
    else:
        raise InvalidParameterError(f"unknown aggregator kind {kind!r}")
    if params:
        raise InvalidParameterError(f"unknown {kind} aggregator params: {sorted(params)}")
    return agg
