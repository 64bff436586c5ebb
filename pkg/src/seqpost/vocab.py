"""Vocabularies, actions and action sequences shared by every module.

Class ids are dense array indices: id i is the i-th name in the vocabulary,
so ids line up with logit-array columns with no remapping.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator


@dataclass(frozen=True)
class Vocabulary:
    """Dense id <-> name map for one class axis (verb or noun)."""

    kind: str  # "verb" | "noun"
    names: tuple[str, ...]

    def __post_init__(self):
        if self.kind not in ("verb", "noun"):
            raise ValueError(f"vocabulary kind must be 'verb' or 'noun', got {self.kind!r}")
        if len(self.names) < 1:
            raise ValueError("vocabulary must contain at least one name")
        if len(set(self.names)) != len(self.names):
            raise ValueError("vocabulary names must be unique")
        object.__setattr__(self, "names", tuple(self.names))

    def __len__(self) -> int:
        return len(self.names)

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "names": list(self.names)})

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        obj = json.loads(text)
        return cls(kind=obj["kind"], names=tuple(obj["names"]))


@dataclass(frozen=True)
class Action:
    verb_id: int
    noun_id: int


@dataclass(frozen=True)
class ActionSequence:
    episode_id: str
    actions: tuple[Action, ...]

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))

    def __len__(self) -> int:
        return len(self.actions)

    def to_json(self) -> str:
        return json.dumps(
            {
                "episode_id": self.episode_id,
                "actions": [[a.verb_id, a.noun_id] for a in self.actions],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ActionSequence":
        obj = json.loads(text)
        return cls(
            episode_id=obj["episode_id"],
            actions=tuple(Action(int(v), int(n)) for v, n in obj["actions"]),
        )


@dataclass(frozen=True)
class Violation:
    position: int  # -1 for sequence-level problems
    axis: str  # "verb" | "noun" | "sequence"
    message: str


def validate_sequence(
    seq: ActionSequence, verb_vocab: Vocabulary, noun_vocab: Vocabulary
) -> list[Violation]:
    """Check every action id against its vocabulary.

    Returns an empty list when the sequence is valid; violations are data,
    not exceptions.
    """
    violations: list[Violation] = []
    if len(seq.actions) == 0:
        violations.append(Violation(-1, "sequence", "empty sequence"))
        return violations
    for pos, action in enumerate(seq.actions):
        if not (0 <= action.verb_id < len(verb_vocab)):
            violations.append(
                Violation(pos, "verb", f"verb_id {action.verb_id} out of range [0, {len(verb_vocab)})")
            )
        if not (0 <= action.noun_id < len(noun_vocab)):
            violations.append(
                Violation(pos, "noun", f"noun_id {action.noun_id} out of range [0, {len(noun_vocab)})")
            )
    return violations


def load_corpus(path: str) -> list[ActionSequence]:
    """Read a JSON Lines corpus file, one ActionSequence per line."""
    corpus = []
    with open(path) as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.strip()
            if not line:
                continue
            try:
                corpus.append(ActionSequence.from_json(line))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad sequence record: {exc}") from exc
    return corpus


def dump_corpus(corpus: Iterable[ActionSequence], path: str) -> None:
    with open(path, "w") as handle:
        for seq in corpus:
            handle.write(seq.to_json() + "\n")


def iter_jsonl(path: str) -> Iterator[tuple[int, dict]]:
    """Yield (lineno, parsed object) for each non-empty line of a JSONL file."""
    with open(path) as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
