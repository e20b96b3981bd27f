"""Candidate units to score, per task.

Which spans a filter model scores is a property of the model family, not of
the wire format. The families shipped here use exhaustive enumeration:

- NER: every contiguous span up to ``max_span_len`` tokens.
- ED: every single token as a trigger candidate.
- RE: the annotated subject/object pair of each sentence (pair classification
  datasets carry the pair; there is nothing to enumerate).
- EAE: every span up to ``max_span_len``, paired with each annotated
  (trigger, event) of the sentence.

A real fine-tuned model replacing these would bring its own proposer; the
output file format does not change.
"""

from __future__ import annotations

from .data import Sentence
from .errors import BadRecord


def _spans(n_tokens: int, max_len: int):
    for start in range(n_tokens):
        for end in range(start + 1, min(start + max_len, n_tokens) + 1):
            yield start, end


def propose_units(sent: Sentence, task: str, max_span_len: int = 3) -> list[dict]:
    """Ordered unit objects in the consumer's flat JSON form."""
    n = len(sent.tokens)
    if task == "NER":
        return [{"kind": "entity", "start": s, "end": e} for s, e in _spans(n, max_span_len)]
    if task == "ED":
        return [{"kind": "trigger", "start": i, "end": i + 1} for i in range(n)]
    if task == "RE":
        units = []
        for ann in sent.annotations:
            if ann.get("kind") != "relation":
                continue
            try:
                units.append({
                    "kind": "relation",
                    "subj_start": ann["subj_start"], "subj_end": ann["subj_end"],
                    "obj_start": ann["obj_start"], "obj_end": ann["obj_end"],
                })
            except KeyError as exc:
                raise BadRecord(0, f"relation annotation in {sent.sentence_id!r} "
                                   f"is missing {exc}") from None
        return units
    if task == "EAE":
        triggers = []
        for ann in sent.annotations:
            if ann.get("kind") != "argument":
                continue
            try:
                key = (ann["trigger_start"], ann["trigger_end"], ann["event_label"])
            except KeyError as exc:
                raise BadRecord(0, f"argument annotation in {sent.sentence_id!r} "
                                   f"is missing {exc}") from None
            if key not in triggers:
                triggers.append(key)
        return [
            {"kind": "argument", "trigger_start": ts, "trigger_end": te,
             "event_label": ev, "start": s, "end": e}
            for ts, te, ev in triggers
            for s, e in _spans(n, max_span_len)
        ]
    raise BadRecord(0, f"unknown task {task!r}")


def unit_key(unit: dict) -> str:
    """Stable string identity of a unit, used to seed per-unit scores."""
    kind = unit["kind"]
    if kind in ("entity", "trigger"):
        return f"{kind}:{unit['start']}:{unit['end']}"
    if kind == "relation":
        return (f"relation:{unit['subj_start']}:{unit['subj_end']}"
                f":{unit['obj_start']}:{unit['obj_end']}")
    return (f"argument:{unit['trigger_start']}:{unit['trigger_end']}"
            f":{unit['event_label']}:{unit['start']}:{unit['end']}")
