"""Multi-session chat records and their line-delimited JSON serialization.

One episode per line: {"episode_id": str, "sessions": [{"turns":
[{"speaker": "user"|"assistant", "text": str}], "gold_memory": [str]}]}.
Session numbers are positional, counted from 1; gold_memory is optional and
holds dataset-provided reference summaries for that session.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .errors import DocumentParseError

SPEAKERS = ("user", "assistant")


@dataclass
class DialogueTurn:
    speaker: str
    text: str
    session: int
    turn_index: int


@dataclass
class Session:
    number: int
    turns: list[DialogueTurn] = field(default_factory=list)
    gold_memory: list[str] = field(default_factory=list)


@dataclass
class Episode:
    episode_id: str
    sessions: list[Session] = field(default_factory=list)


def _fail(line_no: Optional[int], message: str):
    prefix = f"line {line_no}: " if line_no is not None else ""
    raise DocumentParseError(prefix + message)


def parse_episode(obj: dict, line_no: Optional[int] = None) -> Episode:
    if not isinstance(obj, dict):
        _fail(line_no, "episode record must be a JSON object")
    episode_id = obj.get("episode_id")
    if not isinstance(episode_id, str) or not episode_id:
        _fail(line_no, "episode_id must be a nonempty string")
    sessions_raw = obj.get("sessions")
    if not isinstance(sessions_raw, list) or not sessions_raw:
        _fail(line_no, f"episode {episode_id!r}: sessions must be a nonempty list")
    sessions = []
    for s_pos, session_raw in enumerate(sessions_raw, start=1):
        if not isinstance(session_raw, dict):
            _fail(line_no, f"episode {episode_id!r}: session {s_pos} must be an object")
        turns_raw = session_raw.get("turns")
        if not isinstance(turns_raw, list) or not turns_raw:
            _fail(line_no, f"episode {episode_id!r}: session {s_pos} needs a nonempty turns list")
        gold = session_raw.get("gold_memory", [])
        if not isinstance(gold, list) or not all(isinstance(g, str) for g in gold):
            _fail(line_no, f"episode {episode_id!r}: session {s_pos} gold_memory must be a list of strings")
        turns = []
        for t_pos, turn_raw in enumerate(turns_raw):
            if not isinstance(turn_raw, dict):
                _fail(line_no, f"episode {episode_id!r}: session {s_pos} turn {t_pos} must be an object")
            speaker = turn_raw.get("speaker")
            text = turn_raw.get("text")
            if speaker not in SPEAKERS:
                _fail(line_no, f"episode {episode_id!r}: session {s_pos} turn {t_pos} "
                               f"speaker must be one of {SPEAKERS}, got {speaker!r}")
            if not isinstance(text, str) or not text:
                _fail(line_no, f"episode {episode_id!r}: session {s_pos} turn {t_pos} "
                               "text must be a nonempty string")
            turns.append(DialogueTurn(speaker=speaker, text=text, session=s_pos, turn_index=t_pos))
        sessions.append(Session(number=s_pos, turns=turns, gold_memory=list(gold)))
    return Episode(episode_id=episode_id, sessions=sessions)


def episode_to_dict(episode: Episode) -> dict:
    return {
        "episode_id": episode.episode_id,
        "sessions": [
            {
                "turns": [{"speaker": t.speaker, "text": t.text} for t in s.turns],
                "gold_memory": list(s.gold_memory),
            }
            for s in episode.sessions
        ],
    }


def load_episodes(path, require_session: Optional[int] = None) -> list[Episode]:
    """Parse an episodes file; errors carry 1-based line numbers.

    require_session keeps only episodes that reach that session number.
    """
    episodes = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except ValueError as exc:
                _fail(line_no, f"not valid JSON: {exc}")
            episodes.append(parse_episode(obj, line_no))
    if require_session is not None:
        episodes = [e for e in episodes if len(e.sessions) >= require_session]
    return episodes


def save_episodes(path, episodes: list[Episode]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for episode in episodes:
            handle.write(json.dumps(episode_to_dict(episode), sort_keys=True) + "\n")


def final_exchange(episode: Episode) -> tuple[DialogueTurn, DialogueTurn, list[DialogueTurn]]:
    """Evaluation split: (query, reference, history).

    The query is the last user turn of the final session that is directly
    followed by an assistant turn; that assistant turn is the reference.
    History is every turn before the query, across all sessions.
    """
    last = episode.sessions[-1]
    pair_at = None
    for i in range(len(last.turns) - 2, -1, -1):
        if last.turns[i].speaker == "user" and last.turns[i + 1].speaker == "assistant":
            pair_at = i
            break
    if pair_at is None:
        raise DocumentParseError(
            f"episode {episode.episode_id!r}: final session has no user/assistant exchange")
    query = last.turns[pair_at]
    reference = last.turns[pair_at + 1]
    history = [t for s in episode.sessions for t in s.turns
               if (t.session, t.turn_index) < (query.session, query.turn_index)]
    return query, reference, history


def convert_msc_record(obj: dict, episode_id: Optional[str] = None) -> Episode:
    """Best-effort converter for the public multi-session chat release format.

    Expects {"previous_dialogs": [{"dialog": [...], "personas"?}],
    "dialog": [...], "personas"?, "metadata"?: {"initial_data_id"?}} where a
    dialog entry is {"id"?: "Speaker 1"|"Speaker 2", "text": str}. Speakers
    map Speaker 1 -> user and Speaker 2 -> assistant; entries without an id
    alternate starting with user. Per-session personas become gold_memory.
    """
    if not isinstance(obj, dict):
        raise DocumentParseError("record must be a JSON object")
    if episode_id is None:
        episode_id = str((obj.get("metadata") or {}).get("initial_data_id") or "episode")

    def convert_session(number: int, dialog, personas) -> dict:
        turns = []
        for pos, entry in enumerate(dialog or []):
            text = (entry or {}).get("text")
            if not isinstance(text, str) or not text:
                raise DocumentParseError(
                    f"episode {episode_id!r}: session {number} turn {pos} has no text")
            speaker_id = str(entry.get("id", ""))
            if speaker_id.endswith("1"):
                speaker = "user"
            elif speaker_id.endswith("2"):
                speaker = "assistant"
            else:
                speaker = SPEAKERS[pos % 2]
            turns.append({"speaker": speaker, "text": text})
        gold = []
        for group in personas or []:
            if isinstance(group, str):
                gold.append(group)
            elif isinstance(group, list):
                gold.extend(str(item) for item in group)
        return {"turns": turns, "gold_memory": gold}

    sessions = []
    for k, prev in enumerate(obj.get("previous_dialogs") or [], start=1):
        prev = prev or {}
        sessions.append(convert_session(k, prev.get("dialog"), prev.get("personas")))
    sessions.append(convert_session(len(sessions) + 1, obj.get("dialog"), obj.get("personas")))
    return parse_episode({"episode_id": episode_id, "sessions": sessions})
