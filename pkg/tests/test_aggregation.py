"""Aggregator behaviors: concat, truncate, persona via the chat client."""

from __future__ import annotations

import pytest

from conftest import ScriptedClient

from hatmem import (
    ConcatAggregator,
    HatTree,
    LlmPersonaAggregator,
    TruncateAggregator,
    aggregator_from_spec,
    mock_client,
    persona_prompt,
    request_digest,
)
from hatmem.errors import (
    AggregationUnavailableError,
    ContractViolationError,
    InvalidParameterError,
)
from hatmem.metrics import tokenize
from hatmem.prompts import load_template, split_messages


class TestConcat:
    def test_join(self):
        assert ConcatAggregator(" | ").aggregate(["a", "b"]) == "a | b"

    def test_single_child_identity(self):
        assert ConcatAggregator(" | ").aggregate(["only"]) == "only"

    def test_empty_list_rejected(self):
        with pytest.raises(ContractViolationError):
            ConcatAggregator().aggregate([])

    def test_flat_join_equivalence_over_tree(self, rng):
        # Root text under concat equals one flat join of all leaves.
        for M in (2, 3, 5):
            leaves = [f"v{i}" for i in range(rng.randint(1, 40))]
            tree = HatTree(M, ConcatAggregator("; "))
            for text in leaves:
                tree.insert_leaf(text)
            assert tree.root_text() == "; ".join(leaves)


class TestTruncate:
    def test_keeps_first_budget_tokens(self):
        assert TruncateAggregator(budget=3).aggregate(["x y", "z w"]) == "x y z"

    def test_output_never_exceeds_budget(self, rng):
        agg = TruncateAggregator(budget=7)
        for _ in range(25):
            texts = [" ".join(f"w{rng.randint(0, 9)}" for _ in range(rng.randint(1, 6)))
                     for _ in range(rng.randint(1, 5))]
            assert len(tokenize(agg.aggregate(texts))) <= 7

    def test_default_budget(self):
        assert TruncateAggregator().budget == 256

    def test_rejects_bad_budget(self):
        for bad in (0, -1, 1.5, True):
            with pytest.raises(InvalidParameterError):
                TruncateAggregator(budget=bad)

    def test_empty_list_rejected(self):
        with pytest.raises(ContractViolationError):
            TruncateAggregator().aggregate([])


class TestPersonaPrompt:
    def test_single_child_single_block(self):
        messages = persona_prompt(["she likes tea"])
        assert len(messages) == 2
        assert messages[0]["role"] == "system"
        assert "1. she likes tea" in messages[1]["content"]
        assert "2." not in messages[1]["content"]

    def test_three_children_numbered_in_order(self):
        messages = persona_prompt(["one", "two", "three"])
        body = messages[1]["content"]
        assert body.index("1. one") < body.index("2. two") < body.index("3. three")

    def test_template_loads_unchanged(self):
        raw = load_template("persona_v1")
        assert raw == load_template("persona_v1")
        roles = [m["role"] for m in split_messages(raw)]
        assert roles == ["system", "user"]

    def test_empty_rejected(self):
        with pytest.raises(ContractViolationError):
            persona_prompt([])


class TestLlmPersona:
    def test_mock_fixture_keyed_by_digest(self):
        messages = persona_prompt(["fact one", "fact two"])
        fixtures = {request_digest(messages): "  merged persona  "}
        agg = LlmPersonaAggregator(mock_client(fixtures))
        assert agg.aggregate(["fact one", "fact two"]) == "merged persona"

    def test_mock_heuristic_preserves_text(self):
        agg = LlmPersonaAggregator(mock_client())
        merged = agg.aggregate(["he plays chess", "she grows roses"])
        assert "chess" in merged and "roses" in merged

    def test_remote_failure_aborts_insert_atomically(self):
        client = ScriptedClient([])

        def failing_complete(request):
            from hatmem.errors import RemoteUnavailableError
            raise RemoteUnavailableError("endpoint down")

        client.complete = failing_complete
        tree = HatTree(2, LlmPersonaAggregator(client))
        with pytest.raises(AggregationUnavailableError):
            tree.insert_leaf("first turn")
        assert tree.leaf_count == 0
        assert tree.layers == []

    def test_no_client_bound(self):
        with pytest.raises(AggregationUnavailableError):
            LlmPersonaAggregator().aggregate(["text"])


class TestAggregatorSpecs:
    def test_roundtrip_all_kinds(self):
        for agg in (ConcatAggregator("##"), TruncateAggregator(9),
                    LlmPersonaAggregator(mock_client())):
            spec = agg.spec()
            rebuilt = aggregator_from_spec(spec["kind"], spec["params"], client=mock_client())
            assert rebuilt.spec() == spec

    def test_unknown_kind_rejected(self):
        with pytest.raises(InvalidParameterError):
            aggregator_from_spec("magic", {})

    def test_unknown_params_rejected(self):
        with pytest.raises(InvalidParameterError):
            aggregator_from_spec("concat", {"budget": 3})
