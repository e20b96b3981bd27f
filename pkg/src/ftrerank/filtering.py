"""Score ingestion, easy/hard routing, candidate pruning and threshold tuning.

Scores travel as UTF-8 JSON lines, one candidate unit per line:

    {"sample_id": "s1#0", "sentence_id": "s1", "unit": {...},
     "probs": {"PER": 0.7, "ORG": 0.2, "None": 0.1}}

Any probability source that follows this format can act as the filter.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .errors import (
    BadDistribution,
    DataError,
    DuplicateSample,
    EmptyValidation,
    MalformedRecord,
    MissingSample,
    SampleMismatch,
    SchemaMismatch,
    UnknownLabel,
)
from .metrics import Prediction, micro_f1
from .schema import Dataset, LabelSchema, NONE_LABEL, Unit

SUM_TOLERANCE = 1e-3


def default_grid() -> tuple[float, ...]:
    return tuple(round(0.05 * i, 2) for i in range(1, 20))


class Difficulty(str, enum.Enum):
    EASY = "easy"
    HARD = "hard"


@dataclass
class ScoreRecord:
    sample_id: str
    sentence_id: str
    unit: Unit
    probs: dict[str, float]


@dataclass
class ScoreTable:
    schema: LabelSchema
    records: dict[str, ScoreRecord] = field(default_factory=dict)
    provenance: str = ""

    def __len__(self) -> int:
        return len(self.records)

    def add(self, rec: ScoreRecord) -> None:
        if rec.sample_id in self.records:
            raise DuplicateSample(rec.sample_id)
        _validate_probs(rec, self.schema)
        self.records[rec.sample_id] = rec


@dataclass(frozen=True)
class RouterConfig:
    tau: float = 0.5
    top_n: int = 3
    inject_none: bool = True
    grid: tuple[float, ...] = field(default_factory=default_grid)

    def __post_init__(self) -> None:
        if not (0.0 <= self.tau <= 1.0):
            raise DataError(f"tau must lie in [0, 1], got {self.tau}")
        if self.top_n < 1:
            raise DataError("top_n must be >= 1")
        grid = tuple(self.grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise DataError("grid must be non-empty and strictly increasing")
        if grid[0] < 0.0 or grid[-1] > 1.0:
            raise DataError("grid values must lie in [0, 1]")
        object.__setattr__(self, "grid", grid)


@dataclass(frozen=True)
class CandidateSet:
    sample_id: str
    candidates: tuple[str, ...]
    source_confidence: float


def _validate_probs(rec: ScoreRecord, schema: LabelSchema) -> None:
    if not rec.probs:
        raise BadDistribution(rec.sample_id, "empty probability map")
    total = 0.0
    for label, prob in rec.probs.items():
        if label != NONE_LABEL and label not in schema:
            raise UnknownLabel(label, where=f"sample {rec.sample_id}")
        if not isinstance(prob, (int, float)) or math.isnan(prob) or prob < 0:
            raise BadDistribution(rec.sample_id, f"bad probability {prob!r} for {label!r}")
        total += prob
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise BadDistribution(rec.sample_id, f"probabilities sum to {total:.6f}")


def ingest_scores(path: str | Path, schema: LabelSchema,
                  provenance: str = "") -> ScoreTable:
    """Read and validate a score file; rejects duplicates and bad distributions."""
    table = ScoreTable(schema=schema, provenance=provenance or str(path))
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from None
            try:
                rec = ScoreRecord(
                    sample_id=obj["sample_id"],
                    sentence_id=obj["sentence_id"],
                    unit=Unit.from_json(obj["unit"]),
                    probs=dict(obj["probs"]),
                )
            except (KeyError, TypeError) as exc:
                raise MalformedRecord(line_no, f"bad score record: {exc}") from None
            if not isinstance(rec.sample_id, str) or not isinstance(rec.sentence_id, str):
                raise MalformedRecord(line_no, "sample_id and sentence_id must be strings")
            table.add(rec)
    return table


def _ordered_probs(rec: ScoreRecord, schema: LabelSchema) -> dict[str, float]:
    return {
        label: rec.probs[label]
        for label in sorted(rec.probs, key=schema.order_key)
    }


def score_record_to_json(rec: ScoreRecord, schema: LabelSchema) -> str:
    obj = {
        "sample_id": rec.sample_id,
        "sentence_id": rec.sentence_id,
        "unit": rec.unit.to_json(),
        "probs": _ordered_probs(rec, schema),
    }
    return json.dumps(obj, ensure_ascii=False)


def save_scores(table: ScoreTable, path: str | Path) -> None:
    """Write the canonical form: schema-ordered prob keys, shortest float repr."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in table.records.values():
            fh.write(score_record_to_json(rec, table.schema) + "\n")


def confidence(rec: ScoreRecord) -> float:
    """Peak probability over all labels, the abstain label included."""
    return max(rec.probs.values())


def classify_difficulty(rec: ScoreRecord, cfg: RouterConfig) -> Difficulty:
    """Easy strictly above tau; a sample sitting exactly at tau is hard."""
    return Difficulty.EASY if confidence(rec) > cfg.tau else Difficulty.HARD


def top_candidates(rec: ScoreRecord, cfg: RouterConfig,
                   schema: LabelSchema) -> CandidateSet:
    """Highest-probability labels first; ties follow schema order, abstain last.

    The abstain label is appended when absent from the top picks, so the set
    holds at most top_n + 1 entries.
    """
    ranked = sorted(rec.probs, key=lambda l: (-rec.probs[l], schema.order_key(l)))
    picks = ranked[:cfg.top_n]
    if cfg.inject_none and NONE_LABEL not in picks:
        picks.append(NONE_LABEL)
    return CandidateSet(
        sample_id=rec.sample_id,
        candidates=tuple(picks),
        source_confidence=confidence(rec),
    )


def filter_argmax(rec: ScoreRecord, schema: LabelSchema) -> str:
    """The filter's own answer: head of the probability ranking."""
    return min(rec.probs, key=lambda l: (-rec.probs[l], schema.order_key(l)))


def ensemble(tables: Sequence[ScoreTable]) -> ScoreTable:
    """Average the probability vectors of several tables and renormalize."""
    if len(tables) < 2:
        raise DataError("ensemble needs at least two score tables")
    first = tables[0]
    for other in tables[1:]:
        if other.schema != first.schema:
            raise SchemaMismatch("score tables disagree on the label schema")
        if set(other.records) != set(first.records):
            raise SampleMismatch("score tables cover different sample_ids")
    out = ScoreTable(
        schema=first.schema,
        provenance="+".join(t.provenance for t in tables),
    )
    for sample_id, base in first.records.items():
        keys: list[str] = []
        for t in tables:
            rec = t.records[sample_id]
            if rec.sentence_id != base.sentence_id or rec.unit != base.unit:
                raise SampleMismatch(
                    f"sample {sample_id!r} points at different units across tables"
                )
            for label in rec.probs:
                if label not in keys:
                    keys.append(label)
        mean = {
            label: sum(t.records[sample_id].probs.get(label, 0.0) for t in tables)
                   / len(tables)
            for label in keys
        }
        total = sum(mean.values())
        probs = {label: value / total for label, value in mean.items()}
        out.add(ScoreRecord(sample_id=sample_id, sentence_id=base.sentence_id,
                            unit=base.unit, probs=probs))
    return out


def slm_rerank(cands: CandidateSet, other: ScoreTable) -> str:
    """Re-answer with a second score table restricted to the candidate labels.

    Ties keep the earlier candidate, so the filter's preference survives
    when the second table cannot separate the options.
    """
    rec = other.records.get(cands.sample_id)
    if rec is None:
        raise MissingSample(cands.sample_id)
    best = cands.candidates[0]
    best_prob = rec.probs.get(best, 0.0)
    for label in cands.candidates[1:]:
        prob = rec.probs.get(label, 0.0)
        if prob > best_prob:
            best, best_prob = label, prob
    return best


def simulate_routing(table: ScoreTable, tau: float, cfg: RouterConfig,
                     rerank: Callable[[CandidateSet], Prediction],
                     cache: dict[str, Prediction] | None = None) -> list[Prediction]:
    """Predictions produced by routing at ``tau``: filter answer when easy,
    ``rerank`` answer when hard. ``cache`` memoizes rerank calls by sample."""
    preds: list[Prediction] = []
    for rec in table.records.values():
        conf = confidence(rec)
        if conf > tau:
            label = filter_argmax(rec, table.schema)
        else:
            if cache is not None and rec.sample_id in cache:
                label = cache[rec.sample_id].label
            else:
                result = rerank(top_candidates(rec, cfg, table.schema))
                if cache is not None:
                    cache[rec.sample_id] = result
                label = result.label
        preds.append(Prediction(
            sample_id=rec.sample_id, sentence_id=rec.sentence_id,
            unit=rec.unit, label=label, confidence=conf,
        ))
    return preds


def tune_threshold(valid_scores: ScoreTable, valid_gold: Dataset,
                   rerank: Callable[[CandidateSet], Prediction],
                   cfg: RouterConfig) -> float:
    """Pick the grid threshold with the best simulated validation F1.

    Each sample's rerank answer is computed once and reused across the whole
    grid. Ties resolve to the smallest winning threshold, which routes the
    fewest samples to the reranker.
    """
    if not valid_scores.records or not valid_gold.sentences:
        raise EmptyValidation("threshold tuning needs a non-empty validation set")
    cache: dict[str, Prediction] = {}
    best_tau = None
    best_f1 = -1.0
    for tau in cfg.grid:
        preds = simulate_routing(valid_scores, tau, cfg, rerank, cache)
        f1 = micro_f1(preds, valid_gold).f1
        if f1 > best_f1:
            best_tau, best_f1 = tau, f1
    return best_tau


def gold_label_map(table: ScoreTable, gold: Dataset) -> dict[str, str]:
    """sample_id -> gold label, the abstain label where gold has no unit."""
    by_key = {}
    for sid, unit, label in gold.gold_triples():
        by_key[(sid, unit)] = label
    return {
        sample_id: by_key.get((rec.sentence_id, rec.unit), NONE_LABEL)
        for sample_id, rec in table.records.items()
    }


def hard_count(table: ScoreTable, tau: float) -> int:
    return sum(1 for rec in table.records.values() if confidence(rec) <= tau)
