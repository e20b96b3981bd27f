"""End-to-end runs: baselines, confidence-routed reranking, ablations, reports.

Every run function takes loaded objects and returns (decisions or
predictions, EvalReport, CostLedger). File handling lives in the report
writer and in cli.py, which feeds configs into these functions.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

from .errors import DataError, EndpointError, UnknownSentence, WrongTask
from .filtering import (
    CandidateSet,
    Difficulty,
    RouterConfig,
    ScoreRecord,
    ScoreTable,
    classify_difficulty,
    confidence,
    filter_argmax,
    slm_rerank,
    top_candidates,
    tune_threshold,
)
from .llm import CostLedger, GenRequest, LLMClient
from .metrics import (
    EvalReport,
    Prediction,
    confidence_buckets,
    head_f1,
    micro_f1,
    unit_subset_f1,
)
from .prompting import (
    DemoExample,
    ParseStatus,
    PromptBundle,
    TemplateSet,
    parse_icl_answer,
    parse_mcq_answer,
    render_icl,
    render_mcq,
)
from .retrieval import EmbeddingTable, select_by_embedding, select_random
from .schema import NONE_LABEL, Dataset, LabelSchema, Task, Unit

MAX_OUTPUT_TOKENS = 96
MAX_OUTPUT_TOKENS_RE = 32


class Mode(str, enum.Enum):
    ICL_BASELINE = "icl_baseline"
    FILTER_ONLY = "filter_only"
    FILTER_THEN_RERANK = "filter_then_rerank"
    SLM_RERANK_BASELINE = "slm_rerank_baseline"


@dataclass(frozen=True)
class Ablations:
    cot: bool = True
    demo: bool = True
    label_filter: bool = True
    adaptive: bool = True

    @property
    def effective_cot(self) -> bool:
        # no demos means nowhere to put the analyses
        return self.cot and self.demo

    def to_json(self) -> dict:
        return {"cot": self.cot, "demo": self.demo, "label_filter": self.label_filter, "adaptive": self.adaptive}


@dataclass(frozen=True)
class RunConfig:
    mode: Mode = Mode.FILTER_THEN_RERANK
    router: RouterConfig = field(default_factory=RouterConfig)
    ablations: Ablations = field(default_factory=Ablations)
    demo_count: int = 4
    demo_strategy: str = "random"
    seed: int = 0
    model_id: str = "mock"
    variant_id: str = "I1"
    head_rule: str = "last_token"
    max_output_tokens: int | None = None

    def __post_init__(self) -> None:
        if self.demo_count < 0:
            raise DataError(f"demo_count must be >= 0, got {self.demo_count}")
        if self.demo_strategy not in ("random", "embedding"):
            raise DataError(f"unknown demo strategy {self.demo_strategy!r}")

    def output_budget(self, task: Task) -> int:
        if self.max_output_tokens is not None:
            return self.max_output_tokens
        return MAX_OUTPUT_TOKENS_RE if task is Task.RE else MAX_OUTPUT_TOKENS


@dataclass(frozen=True)
class RerankDecision:
    sample_id: str
    routed: str  # "Easy" | "Hard"
    before_label: str
    after_label: str
    parse_status: ParseStatus | None
    confidence: float
    llm_latency_ms: int | None = None
    llm_tokens: int | None = None

    def __post_init__(self) -> None:
        if self.routed == "Easy":
            if self.after_label != self.before_label:
                raise DataError(f"easy sample {self.sample_id} changed label")
            if self.llm_latency_ms is not None or self.llm_tokens is not None:
                raise DataError(f"easy sample {self.sample_id} carries llm fields")

    def to_json(self) -> dict:
        out = {
            "sample_id": self.sample_id,
            "routed": self.routed,
            "before_label": self.before_label,
            "after_label": self.after_label,
            "parse_status": self.parse_status.value if self.parse_status else None,
            "confidence": self.confidence,
        }
        if self.llm_latency_ms is not None:
            out["llm_latency_ms"] = self.llm_latency_ms
        if self.llm_tokens is not None:
            out["llm_tokens"] = self.llm_tokens
        return out


def all_label_candidates(rec: ScoreRecord, schema: LabelSchema) -> CandidateSet:
    """Candidate set over the whole label space (label filtering switched
    off). Same ordering rule as the filtered set, so the first candidate is
    still the filter's argmax."""
    pool = list(schema.labels)
    if NONE_LABEL in rec.probs:
        pool.append(NONE_LABEL)
    ranked = sorted(pool, key=lambda lab: (-rec.probs.get(lab, 0.0), schema.order_key(lab)))
    if NONE_LABEL not in ranked:
        ranked.append(NONE_LABEL)
    return CandidateSet(
        sample_id=rec.sample_id,
        candidates=tuple(ranked),
        source_confidence=confidence(rec),
    )


def _check_coverage(scores: ScoreTable, gold: Dataset) -> None:
    by_id = gold.by_id()
    for rec in scores.records.values():
        if rec.sentence_id not in by_id:
            raise UnknownSentence(rec.sentence_id)


def _mcq_task_guard(task: Task) -> None:
    if task is Task.EAE:
        raise WrongTask("argument units have no choice-prompt rendering; rerank covers entity, relation and trigger tasks")


def rerank_one(
    rec: ScoreRecord,
    tokens: Sequence[str],
    cands: CandidateSet,
    demos: Sequence[DemoExample],
    tset: TemplateSet,
    client: LLMClient,
    cfg: RunConfig,
) -> tuple[str, ParseStatus, int | None, int | None]:
    """One LLM round trip: render, generate, parse. An endpoint failure is
    absorbed: the filter's pick comes back with Failed status."""
    bundle = render_mcq(rec, tokens, cands, demos, tset, cfg.ablations.effective_cot)
    req = GenRequest(
        prompt=bundle.text(),
        max_output_tokens=cfg.output_budget(tset.schema.task),
        model_id=cfg.model_id,
    )
    try:
        result = client.generate(req, bundle)
    except EndpointError:
        return bundle.fallback_label, ParseStatus.FAILED, None, None
    label, status = parse_mcq_answer(result.text, bundle)
    return label, status, result.latency_ms, result.prompt_tokens + result.completion_tokens


def run_filter_only(scores: ScoreTable, gold: Dataset, cfg: RunConfig) -> tuple[list[Prediction], EvalReport, CostLedger]:
    _check_coverage(scores, gold)
    schema = scores.schema
    preds = [
        Prediction(
            sample_id=rec.sample_id,
            sentence_id=rec.sentence_id,
            unit=rec.unit,
            label=filter_argmax(rec, schema),
            confidence=confidence(rec),
        )
        for _, rec in sorted(scores.records.items())
    ]
    if schema.task is Task.EAE:
        base = head_f1(preds, gold, head_rule=cfg.head_rule)
    else:
        base = micro_f1(preds, gold)
    buckets = confidence_buckets(preds, preds, gold)
    report = EvalReport(
        precision=base.precision, recall=base.recall, f1=base.f1,
        tp=base.tp, fp=base.fp, fn=base.fn, bucket_rows=buckets,
        rerank_rows={"rerank.n": 0, "rerank.ratio": 0.0,
                     "rerank.f1_before": 0.0, "rerank.f1_after": 0.0,
                     "rerank.delta_f1": 0.0},
    )
    return preds, report, CostLedger()


def _assemble_report(
    before: list[Prediction],
    after: list[Prediction],
    gold: Dataset,
    hard_units: set[tuple[str, Unit]],
    n_samples: int,
) -> EvalReport:
    overall = micro_f1(after, gold)
    buckets = confidence_buckets(before, after, gold)
    sub_before = unit_subset_f1(before, gold, hard_units)
    sub_after = unit_subset_f1(after, gold, hard_units)
    n_hard = len({p.sample_id for p in before if (p.sentence_id, p.unit) in hard_units})
    ratio = n_hard / n_samples if n_samples else 0.0
    return EvalReport(
        precision=overall.precision, recall=overall.recall, f1=overall.f1,
        tp=overall.tp, fp=overall.fp, fn=overall.fn, bucket_rows=buckets,
        rerank_rows={
            "rerank.n": n_hard,
            "rerank.ratio": ratio,
            "rerank.f1_before": sub_before.f1,
            "rerank.f1_after": sub_after.f1,
            "rerank.delta_f1": sub_after.f1 - sub_before.f1,
        },
    )


def run_filter_then_rerank(
    scores: ScoreTable,
    gold: Dataset,
    tset: TemplateSet,
    demos: Sequence[DemoExample],
    client: LLMClient,
    cfg: RunConfig,
) -> tuple[list[RerankDecision], EvalReport, CostLedger]:
    schema = scores.schema
    _mcq_task_guard(schema.task)
    _check_coverage(scores, gold)
    by_id = gold.by_id()
    demos_used = tuple(demos[: cfg.demo_count]) if cfg.ablations.demo else ()
    decisions: list[RerankDecision] = []
    before_preds: list[Prediction] = []
    after_preds: list[Prediction] = []
    hard_units: set[tuple[str, Unit]] = set()
    for sample_id in sorted(scores.records):
        rec = scores.records[sample_id]
        conf = confidence(rec)
        before = filter_argmax(rec, schema)
        easy = cfg.ablations.adaptive and classify_difficulty(rec, cfg.router) is Difficulty.EASY
        if easy:
            after = before
            decisions.append(RerankDecision(
                sample_id=sample_id, routed="Easy", before_label=before,
                after_label=after, parse_status=None, confidence=conf,
            ))
        else:
            if cfg.ablations.label_filter:
                cands = top_candidates(rec, cfg.router, schema)
            else:
                cands = all_label_candidates(rec, schema)
            tokens = by_id[rec.sentence_id].tokens
            after, status, latency, tokens_used = rerank_one(
                rec, tokens, cands, demos_used, tset, client, cfg
            )
            hard_units.add((rec.sentence_id, rec.unit))
            decisions.append(RerankDecision(
                sample_id=sample_id, routed="Hard", before_label=before,
                after_label=after, parse_status=status, confidence=conf,
                llm_latency_ms=latency, llm_tokens=tokens_used,
            ))
        before_preds.append(Prediction(
            sample_id=sample_id, sentence_id=rec.sentence_id, unit=rec.unit,
            label=before, confidence=conf,
        ))
        after_preds.append(Prediction(
            sample_id=sample_id, sentence_id=rec.sentence_id, unit=rec.unit,
            label=after, confidence=conf,
        ))
    report = _assemble_report(before_preds, after_preds, gold, hard_units, len(decisions))
    return decisions, report, client.ledger


def run_slm_rerank_baseline(
    scores: ScoreTable,
    reranker_scores: ScoreTable,
    gold: Dataset,
    cfg: RunConfig,
) -> tuple[list[RerankDecision], EvalReport, CostLedger]:
    """Same routing, but a second score table reranks instead of an LLM."""
    schema = scores.schema
    _check_coverage(scores, gold)
    decisions: list[RerankDecision] = []
    before_preds: list[Prediction] = []
    after_preds: list[Prediction] = []
    hard_units: set[tuple[str, Unit]] = set()
    for sample_id in sorted(scores.records):
        rec = scores.records[sample_id]
        conf = confidence(rec)
        before = filter_argmax(rec, schema)
        easy = cfg.ablations.adaptive and classify_difficulty(rec, cfg.router) is Difficulty.EASY
        if easy:
            after = before
            decisions.append(RerankDecision(
                sample_id=sample_id, routed="Easy", before_label=before,
                after_label=after, parse_status=None, confidence=conf,
            ))
        else:
            if cfg.ablations.label_filter:
                cands = top_candidates(rec, cfg.router, schema)
            else:
                cands = all_label_candidates(rec, schema)
            after = slm_rerank(cands, reranker_scores)
            hard_units.add((rec.sentence_id, rec.unit))
            decisions.append(RerankDecision(
                sample_id=sample_id, routed="Hard", before_label=before,
                after_label=after, parse_status=None, confidence=conf,
            ))
        before_preds.append(Prediction(
            sample_id=sample_id, sentence_id=rec.sentence_id, unit=rec.unit,
            label=before, confidence=conf,
        ))
        after_preds.append(Prediction(
            sample_id=sample_id, sentence_id=rec.sentence_id, unit=rec.unit,
            label=after, confidence=conf,
        ))
    report = _assemble_report(before_preds, after_preds, gold, hard_units, len(decisions))
    return decisions, report, CostLedger()


def _per_sentence_seed(seed: int, sentence_id: str) -> int:
    digest = hashlib.sha256(f"{seed}:{sentence_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _demo_sentences(
    pool: Dataset,
    test_id: str,
    cfg: RunConfig,
    emb: EmbeddingTable | None,
) -> list[str]:
    if cfg.demo_count == 0:
        return []
    if cfg.demo_strategy == "embedding":
        if emb is None:
            raise DataError("embedding demo strategy needs an embedding table")
        ranked = select_by_embedding(pool, test_id, emb, cfg.demo_count)
        # most similar demo sits nearest the question
        return list(reversed(ranked))
    others = Dataset(
        schema=pool.schema,
        sentences=[s for s in pool.sentences if s.sentence_id != test_id],
        split_tag=pool.split_tag,
    )
    return select_random(others, cfg.demo_count, _per_sentence_seed(cfg.seed, test_id))


def run_icl_baseline(
    test: Dataset,
    pool: Dataset,
    tset: TemplateSet,
    client: LLMClient,
    cfg: RunConfig,
    emb: EmbeddingTable | None = None,
) -> tuple[list[Prediction], EvalReport, CostLedger]:
    """Plain prompt-and-parse extraction over the test split.

    Entity and trigger tasks run one prompt per sentence; relation tasks run
    one prompt per annotated pair. A failed call or unusable reply simply
    contributes no predictions for that sentence.
    """
    schema = test.schema
    if schema.task is Task.EAE:
        raise WrongTask("argument extraction has no plain-prompt format here")
    by_id = pool.by_id()
    preds: list[Prediction] = []
    for sent in test.sentences:
        demo_ids = _demo_sentences(pool, sent.sentence_id, cfg, emb)
        demo_pairs = [(by_id[d].tokens, by_id[d].annotations) for d in demo_ids]
        if schema.task is Task.RE:
            for i, ann in enumerate(sent.annotations):
                if ann.unit.kind != "relation":
                    continue
                bundle = render_icl(sent.tokens, demo_pairs, tset, cfg.variant_id, unit=ann.unit)
                text = _generate_text(bundle, client, cfg, schema.task)
                if text is None:
                    continue
                parsed = parse_icl_answer(text, schema)
                if parsed.items:
                    label = parsed.items[0][1]
                    preds.append(Prediction(
                        sample_id=f"{sent.sentence_id}#{i}",
                        sentence_id=sent.sentence_id,
                        unit=ann.unit, label=label, confidence=1.0,
                    ))
        else:
            bundle = render_icl(sent.tokens, demo_pairs, tset, cfg.variant_id)
            text = _generate_text(bundle, client, cfg, schema.task)
            if text is None:
                continue
            parsed = parse_icl_answer(text, schema, tokens=sent.tokens)
            for unit, label in parsed.units:
                preds.append(Prediction(
                    sample_id=sent.sentence_id, sentence_id=sent.sentence_id,
                    unit=unit, label=label, confidence=1.0,
                ))
    report = micro_f1(preds, test)
    return preds, report, client.ledger


def _generate_text(bundle: PromptBundle, client: LLMClient, cfg: RunConfig, task: Task) -> str | None:
    req = GenRequest(
        prompt=bundle.text(),
        max_output_tokens=cfg.output_budget(task),
        model_id=cfg.model_id,
    )
    try:
        return client.generate(req, bundle).text
    except EndpointError:
        return None


def make_llm_rerank_fn(
    scores: ScoreTable,
    gold: Dataset,
    tset: TemplateSet,
    demos: Sequence[DemoExample],
    client: LLMClient,
    cfg: RunConfig,
) -> Callable[[CandidateSet], Prediction]:
    """Adapter giving threshold tuning the same reranker the run uses."""
    by_id = gold.by_id()
    demos_used = tuple(demos[: cfg.demo_count]) if cfg.ablations.demo else ()

    def rerank(cands: CandidateSet) -> Prediction:
        rec = scores.records[cands.sample_id]
        tokens = by_id[rec.sentence_id].tokens
        label, _status, _lat, _tok = rerank_one(rec, tokens, cands, demos_used, tset, client, cfg)
        return Prediction(
            sample_id=rec.sample_id, sentence_id=rec.sentence_id,
            unit=rec.unit, label=label, confidence=confidence(rec),
        )

    return rerank


def tune_on_validation(
    valid_scores: ScoreTable,
    valid_gold: Dataset,
    tset: TemplateSet,
    demos: Sequence[DemoExample],
    client: LLMClient,
    cfg: RunConfig,
) -> float:
    _mcq_task_guard(valid_scores.schema.task)
    rerank = make_llm_rerank_fn(valid_scores, valid_gold, tset, demos, client, cfg)
    return tune_threshold(valid_scores, valid_gold, rerank, cfg.router)


# -- report files ------------------------------------------------------------

DECISIONS_FILE = "decisions.jsonl"
PREDICTIONS_FILE = "predictions.jsonl"
REPORT_JSON = "report.json"
REPORT_TXT = "report.txt"
METRICS_TSV = "metrics.tsv"
LEDGER_JSON = "ledger.json"


def _pct(x: float) -> str:
    return f"{x * 100:.1f}%"


def render_report_text(report: EvalReport, ledger: CostLedger, config_echo: dict) -> str:
    """Human summary. Deliberately free of wall-clock numbers so reruns
    compare byte for byte."""
    lines = []
    lines.append("confidence-routed rerank report")
    lines.append("=" * 31)
    lines.append("")
    for key in sorted(config_echo):
        lines.append(f"{key}: {config_echo[key]}")
    lines.append("")
    lines.append(f"overall micro-F1: {report.f1:.4f} (precision {report.precision:.4f}, recall {report.recall:.4f})")
    lines.append(f"counts: tp {report.tp}, fp {report.fp}, fn {report.fn}")
    lines.append("")
    rr = report.rerank_rows or {}
    n = rr.get("rerank.n", 0)
    lines.append(f"reranked subset: {n} samples ({_pct(rr.get('rerank.ratio', 0.0))} of samples)")
    lines.append(f"  F1 before rerank: {rr.get('rerank.f1_before', 0.0):.4f}")
    lines.append(f"  F1 after rerank:  {rr.get('rerank.f1_after', 0.0):.4f}")
    lines.append(f"  delta:            {rr.get('rerank.delta_f1', 0.0):+.4f}")
    lines.append("")
    if report.bucket_rows:
        lines.append("confidence buckets (grouped by pre-rerank confidence):")
        lines.append("  bucket          n     neg/pos   F1 before   F1 after")
        for b in report.bucket_rows:
            close = "]" if b.hi >= 1.0 else ")"
            tag = f"[{b.lo:.2f},{b.hi:.2f}{close}"
            ratio = "n/a" if b.neg_pos_ratio is None else f"{b.neg_pos_ratio:.2f}"
            lines.append(f"  {tag:<13} {b.n:>4} {ratio:>9} {b.f1_before:>11.4f} {b.f1_after:>10.4f}")
        lines.append("")
    lines.append(
        f"llm usage: {ledger.total_calls} calls ({ledger.cached_hits} cached), "
        f"{ledger.total_prompt_tokens} prompt tokens, {ledger.total_completion_tokens} completion tokens"
    )
    return "\n".join(lines) + "\n"


def write_report(
    out_dir: str | Path,
    report: EvalReport,
    ledger: CostLedger,
    config_echo: dict,
    decisions: Sequence[RerankDecision] | None = None,
    predictions: Sequence[Prediction] | None = None,
) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if decisions is not None:
        with open(out / DECISIONS_FILE, "w", encoding="utf-8") as fh:
            for d in sorted(decisions, key=lambda d: d.sample_id):
                fh.write(json.dumps(d.to_json(), ensure_ascii=False) + "\n")
    if predictions is not None:
        with open(out / PREDICTIONS_FILE, "w", encoding="utf-8") as fh:
            for p in sorted(predictions, key=lambda p: p.sample_id):
                rec = {
                    "sample_id": p.sample_id,
                    "sentence_id": p.sentence_id,
                    "unit": p.unit.to_json(),
                    "label": p.label,
                    "confidence": p.confidence,
                }
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    payload = {
        "config": config_echo,
        "eval": report.to_json(),
        "ledger": ledger.to_json(),
    }
    with open(out / REPORT_JSON, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / METRICS_TSV, "w", encoding="utf-8") as fh:
        fh.write(report.to_tsv())
    with open(out / LEDGER_JSON, "w", encoding="utf-8") as fh:
        json.dump(ledger.to_json(), fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / REPORT_TXT, "w", encoding="utf-8") as fh:
        fh.write(render_report_text(report, ledger, config_echo))


def rebuild_reports(out_dir: str | Path, scores: ScoreTable, gold: Dataset) -> EvalReport:
    """Recompute the report files from saved decisions. Replaying the same
    decision log yields byte-identical report.txt and metrics.tsv."""
    out = Path(out_dir)
    decisions_path = out / DECISIONS_FILE
    if not decisions_path.exists():
        raise DataError(f"no {DECISIONS_FILE} under {out}")
    before_preds: list[Prediction] = []
    after_preds: list[Prediction] = []
    hard_units: set[tuple[str, Unit]] = set()
    n = 0
    with open(decisions_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            rec = scores.records.get(d["sample_id"])
            if rec is None:
                raise DataError(f"decision for unknown sample {d['sample_id']!r}")
            n += 1
            if d["routed"] == "Hard":
                hard_units.add((rec.sentence_id, rec.unit))
            before_preds.append(Prediction(
                sample_id=d["sample_id"], sentence_id=rec.sentence_id,
                unit=rec.unit, label=d["before_label"], confidence=d["confidence"],
            ))
            after_preds.append(Prediction(
                sample_id=d["sample_id"], sentence_id=rec.sentence_id,
                unit=rec.unit, label=d["after_label"], confidence=d["confidence"],
            ))
    report = _assemble_report(before_preds, after_preds, gold, hard_units, n)
    ledger = CostLedger()
    ledger_path = out / LEDGER_JSON
    if ledger_path.exists():
        with open(ledger_path, encoding="utf-8") as fh:
            saved = json.load(fh)
        ledger.total_calls = saved.get("total_calls", 0)
        ledger.cached_hits = saved.get("cached_hits", 0)
        ledger.total_prompt_tokens = saved.get("total_prompt_tokens", 0)
        ledger.total_completion_tokens = saved.get("total_completion_tokens", 0)
        ledger.wall_ms = saved.get("wall_ms", 0)
    config_echo = {}
    report_path = out / REPORT_JSON
    if report_path.exists():
        with open(report_path, encoding="utf-8") as fh:
            config_echo = json.load(fh).get("config", {})
    with open(out / METRICS_TSV, "w", encoding="utf-8") as fh:
        fh.write(report.to_tsv())
    with open(out / REPORT_TXT, "w", encoding="utf-8") as fh:
        fh.write(render_report_text(report, ledger, config_echo))
    payload = {"config": config_echo, "eval": report.to_json(), "ledger": ledger.to_json()}
    with open(out / REPORT_JSON, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    return report


ABLATION_ROWS = (
    ("full", Ablations()),
    ("no_cot", Ablations(cot=False)),
    ("no_cot_no_demo", Ablations(cot=False, demo=False)),
    ("no_label_filter", Ablations(label_filter=False)),
    ("no_adaptive", Ablations(adaptive=False)),
)


def run_ablations(
    scores: ScoreTable,
    gold: Dataset,
    tset: TemplateSet,
    demos: Sequence[DemoExample],
    make_client: Callable[[], LLMClient],
    cfg: RunConfig,
) -> list[dict]:
    """One row per ablation switch, fresh client each so ledgers don't mix."""
    rows = []
    for name, flags in ABLATION_ROWS:
        client = make_client()
        row_cfg = replace(cfg, ablations=flags)
        _, report, ledger = run_filter_then_rerank(scores, gold, tset, demos, client, row_cfg)
        rows.append({
            "name": name,
            "ablations": flags.to_json(),
            "f1": report.f1,
            "rerank_ratio": (report.rerank_rows or {}).get("rerank.ratio", 0.0),
            "llm_calls": ledger.total_calls,
            "prompt_tokens": ledger.total_prompt_tokens,
        })
    return rows
