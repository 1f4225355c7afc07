"""Shared test doubles and tree builders."""

from __future__ import annotations

import random

import pytest

from hatmem import ChatReply, ConcatAggregator, HatTree
from hatmem.errors import AggregationUnavailableError


def build_tree(n: int, memory_length: int = 2, separator: str = " | ",
               texts=None) -> HatTree:
    tree = HatTree(memory_length, ConcatAggregator(separator))
    for i in range(n):
        tree.insert_leaf(texts[i] if texts else f"t{i}")
    return tree


class FailingAggregator(ConcatAggregator):
    """Concat that starts failing after a set number of successful calls."""

    def __init__(self, separator: str = " | ", fail_after: int = 0):
        super().__init__(separator)
        self.fail_after = fail_after
        self.calls = 0
        self.armed = True

    def aggregate(self, children_texts):
        if self.armed:
            self.calls += 1
            if self.calls > self.fail_after:
                raise AggregationUnavailableError("injected aggregation failure")
        return super().aggregate(children_texts)


class TextSetOracle:
    """Sufficient exactly when the node text is in a fixed set."""

    def __init__(self, texts):
        self.texts = set(texts)
        self.calls = 0

    def sufficient(self, node_text, query):
        self.calls += 1
        return node_text in self.texts


class ConstOracle:
    def __init__(self, value: bool):
        self.value = value
        self.calls = 0

    def sufficient(self, node_text, query):
        self.calls += 1
        return self.value


class ScriptedClient:
    """Duck-typed chat client replying with a fixed list of contents."""

    def __init__(self, replies, model: str = "scripted"):
        self.replies = list(replies)
        self.model = model
        self.requests = []

    def complete(self, request):
        self.requests.append(request)
        if not self.replies:
            raise AssertionError("ScriptedClient ran out of replies")
        return ChatReply(content=self.replies.pop(0))


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)
