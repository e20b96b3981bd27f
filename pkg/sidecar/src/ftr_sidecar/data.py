"""Readers for the two input files every job starts from.

The dataset format is the consumer pipeline's JSONL: one sentence per line
with ``sentence_id``, ``tokens`` and a list of flat annotation objects.
Only the fields the proposers need are checked here; deep validation stays
on the consumer side, which re-validates everything it ingests anyway.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BadRecord

TASKS = ("NER", "RE", "ED", "EAE")


@dataclass(frozen=True)
class Sentence:
    sentence_id: str
    tokens: tuple[str, ...]
    annotations: tuple[dict, ...] = field(default_factory=tuple)

    def text(self) -> str:
        return " ".join(self.tokens)


def load_sentences(path: str | Path) -> list[Sentence]:
    out: list[Sentence] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BadRecord(line_no, f"invalid JSON: {exc.msg}") from None
            sid = obj.get("sentence_id")
            tokens = obj.get("tokens")
            anns = obj.get("annotations", [])
            if not isinstance(sid, str) or not sid:
                raise BadRecord(line_no, "sentence_id must be a non-empty string")
            if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
                raise BadRecord(line_no, "tokens must be a list of strings")
            if not isinstance(anns, list) or not all(isinstance(a, dict) for a in anns):
                raise BadRecord(line_no, "annotations must be a list of objects")
            if sid in seen:
                raise BadRecord(line_no, f"duplicate sentence_id {sid!r}")
            seen.add(sid)
            out.append(Sentence(sentence_id=sid, tokens=tuple(tokens),
                                annotations=tuple(anns)))
    return out


def load_schema(path: str | Path) -> tuple[str, tuple[str, ...]]:
    """Task name and label list from the consumer's schema JSON."""
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BadRecord(1, f"invalid JSON: {exc.msg}") from None
    task = obj.get("task")
    labels = obj.get("labels")
    if task not in TASKS:
        raise BadRecord(1, f"task must be one of {TASKS}, got {task!r}")
    if (not isinstance(labels, list) or not labels
            or not all(isinstance(l, str) and l for l in labels)):
        raise BadRecord(1, "labels must be a non-empty list of strings")
    if len(set(labels)) != len(labels):
        raise BadRecord(1, "labels must be unique")
    return task, tuple(labels)
