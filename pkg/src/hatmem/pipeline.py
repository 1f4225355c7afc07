"""From dialogue turns to query-conditioned context and a generated reply.

Each conversation owns one MemoryState: the tree plus per-session root-text
snapshots. Turns are ingested one leaf per utterance as "<speaker>: <text>";
the snapshot taken at a session's end is that session's memory record, and
it covers everything up to and including the session because the root
aggregates all prior leaves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .episodes import DialogueTurn, Episode, SPEAKERS
from .errors import (
    ConfigurationError,
    GenerationUnavailableError,
    InvalidParameterError,
    NotFoundError,
    RemoteUnavailableError,
)
from .llm import ChatRequest
from .prompts import render_messages
from .traversal import (
    Outcome,
    TraversalConfig,
    bfs_search,
    dfs_search,
    fallback_context,
    traverse,
)
from .tree import HatTree

STRATEGIES = ("all_context", "part_context", "gold_memory", "hat_bfs", "hat_dfs", "hat_agent")


@dataclass
class MemoryState:
    tree: HatTree
    session_snapshots: dict[int, str] = field(default_factory=dict)


def new_memory(memory_length: int, aggregator) -> MemoryState:
    return MemoryState(tree=HatTree(memory_length, aggregator))


def ingest_turn(state: MemoryState, turn: DialogueTurn) -> int:
    if turn.speaker not in SPEAKERS:
        raise InvalidParameterError(f"speaker must be one of {SPEAKERS}, got {turn.speaker!r}")
    if not turn.text:
        raise InvalidParameterError("turn text must be nonempty")
    meta = {"speaker": turn.speaker, "session": turn.session, "turn_index": turn.turn_index}
    return state.tree.insert_leaf(f"{turn.speaker}: {turn.text}", meta=meta)


def _sessions_ingested(state: MemoryState) -> set[int]:
    return {leaf.meta["session"] for leaf in state.tree.leaves() if leaf.meta}


def end_session(state: MemoryState, session: int) -> str:
    """Snapshot the root text as the memory record for a finished session."""
    if session not in _sessions_ingested(state):
        raise NotFoundError(f"no turns ingested for session {session}")
    snapshot = state.tree.root_text()
    state.session_snapshots[session] = snapshot
    return snapshot


def ingest_episode(episode: Episode, memory_length: int, aggregator) -> MemoryState:
    """Ingest every turn of every session, snapshotting at each session end."""
    state = new_memory(memory_length, aggregator)
    for session in episode.sessions:
        for turn in session.turns:
            ingest_turn(state, turn)
        end_session(state, session.number)
    return state


def build_context(state: MemoryState, query: str, strategy: str, *,
                  gold: Optional[list[str]] = None,
                  oracle=None, agent=None,
                  config: Optional[TraversalConfig] = None) -> str:
    """Context string for one query under the named strategy.

    gold_memory needs the dataset's reference summaries; hat_bfs/hat_dfs need
    a sufficiency oracle; hat_agent needs a traversal agent. Tree walks that
    end without a sufficient node fall back to root text plus newest leaf.
    """
    tree = state.tree
    if not tree.layers:
        raise InvalidParameterError("no turns ingested yet")
    if strategy == "all_context":
        return "\n".join(leaf.text for leaf in tree.leaves())
    if strategy == "part_context":
        current = max(_sessions_ingested(state))
        return "\n".join(leaf.text for leaf in tree.leaves()
                         if leaf.meta and leaf.meta["session"] == current)
    if strategy == "gold_memory":
        if not gold:
            raise ConfigurationError("gold_memory strategy requested but no gold memory provided")
        return "\n".join(gold)
    if strategy == "hat_bfs" or strategy == "hat_dfs":
        if oracle is None:
            raise ConfigurationError(f"{strategy} strategy needs a sufficiency oracle")
        search = bfs_search if strategy == "hat_bfs" else dfs_search
        result = search(tree, oracle, query, config)
    elif strategy == "hat_agent":
        if agent is None:
            raise ConfigurationError("hat_agent strategy needs a traversal agent")
        result = traverse(tree, agent, query, config)
    else:
        raise InvalidParameterError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    if result.outcome is Outcome.SUFFICIENT:
        return result.text
    return fallback_context(tree)


def generate_response(context: str, query: str, client, template: str = "response_v1",
                      temperature: float = 0.0) -> str:
    """One assistant reply for the query, grounded in the context when present."""
    memory_block = f"MEMORY:\n{context}\n\n" if context else ""
    messages = render_messages(template, memory_block=memory_block, query=query)
    request = ChatRequest(model=client.model, messages=messages, temperature=temperature)
    try:
        reply = client.complete(request)
    except RemoteUnavailableError as exc:
        raise GenerationUnavailableError(f"response generation failed: {exc}") from exc
    return reply.content.strip()
