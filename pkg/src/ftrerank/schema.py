"""Core data types: tasks, label schemas, spans, target units and datasets."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Iterable

from .errors import DataError, MalformedRecord, SpanOutOfBounds, UnknownLabel

NONE_LABEL = "None"


class Task(str, enum.Enum):
    NER = "NER"
    RE = "RE"
    ED = "ED"
    EAE = "EAE"


class Split(str, enum.Enum):
    FULL = "full"
    TRAIN = "train"
    VALID = "valid"
    TEST = "test"


#: annotation kind expected for each task
TASK_KIND = {
    Task.NER: "entity",
    Task.RE: "relation",
    Task.ED: "trigger",
    Task.EAE: "argument",
}


@dataclass(frozen=True)
class LabelSchema:
    """Ordered label inventory for one task.

    The reserved ``None`` label is never part of ``labels``; it stands for
    "no unit here" and is appended implicitly wherever candidates are built.
    """

    task: Task
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.labels:
            raise DataError("label schema must define at least one label")
        if len(set(self.labels)) != len(self.labels):
            raise DataError("label schema contains duplicate labels")
        if NONE_LABEL in self.labels:
            raise DataError(f"{NONE_LABEL!r} is reserved and cannot be a schema label")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "_index", {l: i for i, l in enumerate(self.labels)})

    def __contains__(self, label: str) -> bool:
        return label in self._index  # type: ignore[attr-defined]

    def order_key(self, label: str) -> int:
        """Position used for deterministic tie-breaks; ``None`` sorts last."""
        if label == NONE_LABEL:
            return len(self.labels)
        try:
            return self._index[label]  # type: ignore[attr-defined]
        except KeyError:
            raise UnknownLabel(label) from None


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end <= self.start:
            raise DataError(f"bad span [{self.start}, {self.end})")

    def surface(self, tokens: list[str] | tuple[str, ...]) -> str:
        return " ".join(tokens[self.start:self.end])

    def head(self, rule: str = "last_token") -> int:
        if rule == "last_token":
            return self.end - 1
        if rule == "first_token":
            return self.start
        raise DataError(f"unknown head rule {rule!r}")


@dataclass(frozen=True)
class Unit:
    """A labelable target inside a sentence, minus the label itself.

    ``kind`` decides which fields are set:
      entity / trigger  -> span
      relation          -> subj, obj
      argument          -> trigger, event_label, span (the argument span)
    """

    kind: str
    span: Span | None = None
    subj: Span | None = None
    obj: Span | None = None
    trigger: Span | None = None
    event_label: str | None = None

    @staticmethod
    def entity(start: int, end: int) -> "Unit":
        return Unit(kind="entity", span=Span(start, end))

    @staticmethod
    def trigger_word(start: int, end: int) -> "Unit":
        return Unit(kind="trigger", span=Span(start, end))

    @staticmethod
    def relation(subj: Span, obj: Span) -> "Unit":
        return Unit(kind="relation", subj=subj, obj=obj)

    @staticmethod
    def argument(trigger: Span, event_label: str, start: int, end: int) -> "Unit":
        return Unit(kind="argument", trigger=trigger, event_label=event_label,
                    span=Span(start, end))

    def spans(self) -> tuple[Span, ...]:
        if self.kind in ("entity", "trigger"):
            return (self.span,)  # type: ignore[return-value]
        if self.kind == "relation":
            return (self.subj, self.obj)  # type: ignore[return-value]
        if self.kind == "argument":
            return (self.trigger, self.span)  # type: ignore[return-value]
        raise DataError(f"unknown unit kind {self.kind!r}")

    def to_json(self) -> dict[str, Any]:
        if self.kind in ("entity", "trigger"):
            return {"kind": self.kind, "start": self.span.start, "end": self.span.end}
        if self.kind == "relation":
            return {
                "kind": "relation",
                "subj_start": self.subj.start, "subj_end": self.subj.end,
                "obj_start": self.obj.start, "obj_end": self.obj.end,
            }
        if self.kind == "argument":
            return {
                "kind": "argument",
                "trigger_start": self.trigger.start, "trigger_end": self.trigger.end,
                "event_label": self.event_label,
                "start": self.span.start, "end": self.span.end,
            }
        raise DataError(f"unknown unit kind {self.kind!r}")

    @staticmethod
    def from_json(obj: dict[str, Any]) -> "Unit":
        try:
            kind = obj["kind"]
            if kind in ("entity", "trigger"):
                return Unit(kind=kind, span=Span(obj["start"], obj["end"]))
            if kind == "relation":
                return Unit.relation(Span(obj["subj_start"], obj["subj_end"]),
                                     Span(obj["obj_start"], obj["obj_end"]))
            if kind == "argument":
                return Unit.argument(Span(obj["trigger_start"], obj["trigger_end"]),
                                     obj["event_label"], obj["start"], obj["end"])
        except KeyError as exc:
            raise DataError(f"unit record missing field {exc}") from None
        raise DataError(f"unknown unit kind {kind!r}")


@dataclass(frozen=True)
class GoldAnnotation:
    unit: Unit
    label: str

    def to_json(self) -> dict[str, Any]:
        d = self.unit.to_json()
        d["label"] = self.label
        return d

    @staticmethod
    def from_json(obj: dict[str, Any]) -> "GoldAnnotation":
        label = obj.get("label")
        if not isinstance(label, str) or not label:
            raise DataError("annotation is missing a label")
        return GoldAnnotation(unit=Unit.from_json(obj), label=label)


@dataclass
class SentenceRecord:
    sentence_id: str
    tokens: list[str]
    annotations: list[GoldAnnotation] = field(default_factory=list)

    def labels(self) -> list[str]:
        return [a.label for a in self.annotations]

    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass
class Dataset:
    schema: LabelSchema
    sentences: list[SentenceRecord]
    split_tag: Split = Split.FULL

    def __len__(self) -> int:
        return len(self.sentences)

    def by_id(self) -> dict[str, SentenceRecord]:
        return {s.sentence_id: s for s in self.sentences}

    def gold_triples(self) -> set[tuple[str, Unit, str]]:
        """Deduplicated (sentence_id, unit, label) triples."""
        out: set[tuple[str, Unit, str]] = set()
        for s in self.sentences:
            for a in s.annotations:
                out.add((s.sentence_id, a.unit, a.label))
        return out


@dataclass(frozen=True)
class SamplerConfig:
    k: int
    seed: int
    negative_ratio: float = 1.0
    valid_fraction: float = 0.10
    valid_min_sentences: int = 300

    def __post_init__(self) -> None:
        if self.k < 1:
            raise DataError(f"shot count must be >= 1, got {self.k}")
        if self.negative_ratio < 0:
            raise DataError("negative_ratio must be non-negative")
        if not (0.0 <= self.valid_fraction <= 1.0):
            raise DataError("valid_fraction must lie in [0, 1]")


def validate_record(rec: SentenceRecord, schema: LabelSchema, line_no: int = 0) -> None:
    """Check one sentence against the schema; raises on the first problem."""
    if not rec.sentence_id:
        raise MalformedRecord(line_no, "empty sentence_id")
    if not rec.tokens:
        raise MalformedRecord(line_no, "empty token list")
    expected_kind = TASK_KIND[schema.task]
    n = len(rec.tokens)
    for ann in rec.annotations:
        if ann.unit.kind != expected_kind:
            raise MalformedRecord(
                line_no,
                f"annotation kind {ann.unit.kind!r} does not fit task {schema.task.value}",
            )
        if ann.label not in schema:
            raise UnknownLabel(ann.label, where=f"line {line_no}")
        for span in ann.unit.spans():
            if span.end > n:
                raise SpanOutOfBounds(rec.sentence_id, span.start, span.end, n)


def iter_annotations(sentences: Iterable[SentenceRecord]):
    for s in sentences:
        for a in s.annotations:
            yield s, a
