"""Micro-F1 scoring, head-word matching for arguments, and confidence buckets."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import BadEdges, DataError, UnknownLabel, UnknownSentence, WrongTask
from .schema import Dataset, NONE_LABEL, Task, Unit

DEFAULT_EDGES = (0.0, 0.6, 0.9, 1.0)


@dataclass(frozen=True)
class Prediction:
    sample_id: str
    sentence_id: str
    unit: Unit
    label: str
    confidence: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.confidence <= 1.0):
            raise DataError(
                f"sample {self.sample_id!r}: confidence {self.confidence} outside [0, 1]"
            )


@dataclass
class BucketRow:
    """Scores for one confidence slice, bucketed by pre-rerank confidence."""

    lo: float
    hi: float
    n: int
    pos: int
    neg: int
    tp_before: int
    fp_before: int
    fn_before: int
    tp_after: int
    fp_after: int
    fn_after: int

    @property
    def neg_pos_ratio(self) -> float | None:
        return (self.neg / self.pos) if self.pos else None

    @property
    def f1_before(self) -> float:
        return _f1(self.tp_before, self.fp_before, self.fn_before)[2]

    @property
    def f1_after(self) -> float:
        return _f1(self.tp_after, self.fp_after, self.fn_after)[2]

    def to_json(self) -> dict:
        return {
            "bounds": [self.lo, self.hi],
            "n": self.n,
            "pos": self.pos,
            "neg": self.neg,
            "neg_pos_ratio": self.neg_pos_ratio,
            "f1_before": self.f1_before,
            "f1_after": self.f1_after,
            "counts_before": [self.tp_before, self.fp_before, self.fn_before],
            "counts_after": [self.tp_after, self.fp_after, self.fn_after],
        }


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    bucket_rows: list[BucketRow] = field(default_factory=list)
    rerank_rows: dict | None = None

    def to_json(self) -> dict:
        out = {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }
        if self.bucket_rows:
            out["buckets"] = [b.to_json() for b in self.bucket_rows]
        if self.rerank_rows is not None:
            out["rerank"] = self.rerank_rows
        return out

    def to_tsv(self) -> str:
        """Flat name<TAB>value lines, one metric per line."""
        lines = []
        for name in ("precision", "recall", "f1"):
            lines.append(f"{name}\t{getattr(self, name):.6f}")
        for name in ("tp", "fp", "fn"):
            lines.append(f"{name}\t{getattr(self, name)}")
        for b in self.bucket_rows:
            tag = f"bucket[{b.lo:g},{b.hi:g}]"
            lines.append(f"{tag}.n\t{b.n}")
            ratio = "n/a" if b.neg_pos_ratio is None else f"{b.neg_pos_ratio:.2f}"
            lines.append(f"{tag}.neg_pos_ratio\t{ratio}")
            lines.append(f"{tag}.f1_before\t{b.f1_before:.6f}")
            lines.append(f"{tag}.f1_after\t{b.f1_after:.6f}")
        if self.rerank_rows:
            for key, value in self.rerank_rows.items():
                if isinstance(value, float):
                    lines.append(f"{key}\t{value:.6f}")
                else:
                    lines.append(f"{key}\t{value}")
        return "\n".join(lines) + "\n"


def _f1(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    # integer-count form, not 2pr/(p+r): keeps f1 bit-equal to a recount
    f = 2 * tp / (2 * tp + fp + fn) if tp + fp + fn else 0.0
    return p, r, f


def _match_counts(preds: Iterable[Prediction],
                  gold_keys: set[tuple],
                  key_fn) -> tuple[int, int, int]:
    """1:1 matching of predictions against deduplicated gold keys.

    The first prediction hitting a gold key is the match; any further
    prediction with the same key counts as a false positive.
    """
    matched: set[tuple] = set()
    fp = 0
    for pred in preds:
        if pred.label == NONE_LABEL:
            continue
        key = key_fn(pred)
        if key in gold_keys and key not in matched:
            matched.add(key)
        else:
            fp += 1
    tp = len(matched)
    fn = len(gold_keys) - tp
    return tp, fp, fn


def _validate_preds(preds: Sequence[Prediction], gold: Dataset) -> None:
    known = {s.sentence_id for s in gold.sentences}
    for pred in preds:
        if pred.sentence_id not in known:
            raise UnknownSentence(pred.sentence_id)
        if pred.label != NONE_LABEL and pred.label not in gold.schema:
            raise UnknownLabel(pred.label, where=f"prediction {pred.sample_id}")


def micro_f1(preds: Sequence[Prediction], gold: Dataset) -> EvalReport:
    """Span-exact micro-F1 over (sentence, unit, label) triples.

    Predictions labeled ``None`` are abstentions and never count as false
    positives; unmatched gold triples count as false negatives.
    """
    _validate_preds(preds, gold)
    gold_keys = {(sid, unit, label) for sid, unit, label in gold.gold_triples()}
    tp, fp, fn = _match_counts(
        preds, gold_keys, lambda p: (p.sentence_id, p.unit, p.label)
    )
    p, r, f = _f1(tp, fp, fn)
    return EvalReport(precision=p, recall=r, f1=f, tp=tp, fp=fp, fn=fn)


def unit_subset_f1(preds: Sequence[Prediction], gold: Dataset,
                   units: set[tuple[str, Unit]]) -> EvalReport:
    """micro_f1 restricted to the given (sentence_id, unit) keys: only
    predictions and gold triples on those units participate."""
    _validate_preds(preds, gold)
    gold_keys = {
        (sid, unit, label)
        for sid, unit, label in gold.gold_triples()
        if (sid, unit) in units
    }
    kept = [p for p in preds if (p.sentence_id, p.unit) in units]
    tp, fp, fn = _match_counts(
        kept, gold_keys, lambda p: (p.sentence_id, p.unit, p.label)
    )
    p, r, f = _f1(tp, fp, fn)
    return EvalReport(precision=p, recall=r, f1=f, tp=tp, fp=fp, fn=fn)


def _head_key(sentence_id: str, unit: Unit, label: str, head_rule: str) -> tuple:
    if unit.kind != "argument":
        raise WrongTask("head matching is defined for argument units only")
    return (sentence_id, unit.event_label, label, unit.span.head(head_rule))


def head_f1(preds: Sequence[Prediction], gold: Dataset,
            head_rule: str = "last_token") -> EvalReport:
    """Argument micro-F1 relaxed to head-token matching.

    A prediction matches gold when event label, role label and the head token
    of the argument span all agree; full span boundaries are ignored.
    """
    if gold.schema.task != Task.EAE:
        raise WrongTask(f"head_f1 needs an argument task, got {gold.schema.task.value}")
    _validate_preds(preds, gold)
    gold_keys = {
        _head_key(sid, unit, label, head_rule)
        for sid, unit, label in gold.gold_triples()
    }
    tp, fp, fn = _match_counts(
        preds, gold_keys, lambda p: _head_key(p.sentence_id, p.unit, p.label, head_rule)
    )
    p, r, f = _f1(tp, fp, fn)
    return EvalReport(precision=p, recall=r, f1=f, tp=tp, fp=fp, fn=fn)


def _bucket_index(conf: float, edges: Sequence[float]) -> int:
    for i in range(len(edges) - 2):
        if conf < edges[i + 1]:
            return i
    return len(edges) - 2


def confidence_buckets(preds_before: Sequence[Prediction],
                       preds_after: Sequence[Prediction],
                       gold: Dataset,
                       edges: Sequence[float] = DEFAULT_EDGES) -> list[BucketRow]:
    """Per-slice scores where slice membership comes from *before* confidence.

    Gold units that never received a prediction are charged to the lowest
    bucket, so the bucket counts always recompose the overall tallies.
    """
    edges = tuple(edges)
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise BadEdges(f"edges must be strictly increasing, got {edges}")
    if edges[0] != 0.0 or edges[-1] != 1.0:
        raise BadEdges("edges must start at 0.0 and end at 1.0")
    _validate_preds(preds_before, gold)
    _validate_preds(preds_after, gold)

    n_buckets = len(edges) - 1
    sample_bucket: dict[str, int] = {}
    unit_bucket: dict[tuple, int] = {}
    before_by_bucket: list[list[Prediction]] = [[] for _ in range(n_buckets)]
    for pred in preds_before:
        b = _bucket_index(pred.confidence, edges)
        sample_bucket[pred.sample_id] = b
        unit_bucket.setdefault((pred.sentence_id, pred.unit), b)
        before_by_bucket[b].append(pred)

    after_by_bucket: list[list[Prediction]] = [[] for _ in range(n_buckets)]
    for pred in preds_after:
        b = sample_bucket.get(pred.sample_id)
        if b is None:
            b = _bucket_index(pred.confidence, edges)
        after_by_bucket[b].append(pred)

    gold_by_bucket: list[set[tuple]] = [set() for _ in range(n_buckets)]
    gold_label_of: dict[tuple, str] = {}
    for sid, unit, label in gold.gold_triples():
        b = unit_bucket.get((sid, unit), 0)
        gold_by_bucket[b].add((sid, unit, label))
        gold_label_of[(sid, unit)] = label

    rows: list[BucketRow] = []
    for b in range(n_buckets):
        before = before_by_bucket[b]
        pos = sum(1 for p in before if (p.sentence_id, p.unit) in gold_label_of)
        neg = len(before) - pos
        key_fn = lambda p: (p.sentence_id, p.unit, p.label)
        tp_b, fp_b, fn_b = _match_counts(before, gold_by_bucket[b], key_fn)
        tp_a, fp_a, fn_a = _match_counts(after_by_bucket[b], gold_by_bucket[b], key_fn)
        rows.append(BucketRow(
            lo=edges[b], hi=edges[b + 1], n=len(before), pos=pos, neg=neg,
            tp_before=tp_b, fp_before=fp_b, fn_before=fn_b,
            tp_after=tp_a, fp_after=fp_a, fn_after=fn_a,
        ))
    return rows


def report_to_json_text(report: EvalReport) -> str:
    return json.dumps(report.to_json(), ensure_ascii=False, indent=2) + "\n"
