"""Synthetic routing fixtures shared by the pipeline and acceptance tests."""

from __future__ import annotations

import random

from ftrerank.filtering import ScoreRecord, ScoreTable
from ftrerank.schema import (
    Dataset,
    GoldAnnotation,
    LabelSchema,
    NONE_LABEL,
    SentenceRecord,
    Split,
    Unit,
)


def make_routing_fixture(
    schema: LabelSchema,
    n_easy: int,
    n_wrong: int,
    seed: int = 0,
    easy_conf: float = 0.95,
    wrong_confs: tuple[float, ...] = (0.48, 0.52, 0.58, 0.60),
) -> tuple[ScoreTable, Dataset, dict[str, str]]:
    """Two strata of entity samples.

    Easy: the filter is confident and right. Wrong: the filter's argmax is a
    different label, its confidence comes from ``wrong_confs`` (all at or
    below 0.6), and the gold label sits in second place, inside any top-3.
    """
    rng = random.Random(seed)
    labels = schema.labels
    table = ScoreTable(schema=schema)
    sentences = []
    gold_map: dict[str, str] = {}
    for i in range(n_easy + n_wrong):
        sid = f"s{i:04d}"
        gold_label = labels[rng.randrange(len(labels))]
        tokens = ("The", f"thing{i}", "happened", ".")
        unit = Unit.entity(1, 2)
        sentences.append(SentenceRecord(
            sentence_id=sid, tokens=tokens,
            annotations=[GoldAnnotation(unit=unit, label=gold_label)],
        ))
        sample_id = f"{sid}#0"
        gold_map[sample_id] = gold_label
        if i < n_easy:
            rest = (1.0 - easy_conf) / (len(labels) - 1)
            probs = {lab: (easy_conf if lab == gold_label else rest) for lab in labels}
        else:
            wrong_label = labels[(labels.index(gold_label) + 1) % len(labels)]
            top = wrong_confs[i % len(wrong_confs)]
            second = (1.0 - top) * 0.7  # gold in clear second place
            rest = (1.0 - top - second) / (len(labels) - 2)
            probs = {}
            for lab in labels:
                if lab == wrong_label:
                    probs[lab] = top
                elif lab == gold_label:
                    probs[lab] = second
                else:
                    probs[lab] = rest
        table.add(ScoreRecord(sample_id=sample_id, sentence_id=sid, unit=unit, probs=probs))
    gold = Dataset(schema=schema, sentences=sentences, split_tag=Split.TEST)
    return table, gold, gold_map


def exhaustive_after_labels(
    table: ScoreTable,
    gold_map: dict[str, str],
    tau: float,
    top_n: int,
) -> dict[str, str]:
    """What an ideal reranker run must produce, computed by plain rules with
    no routing machinery: easy keeps the argmax, hard takes the gold label
    when it appears among the top-n+None candidates, otherwise None."""
    out: dict[str, str] = {}
    schema_order = {lab: i for i, lab in enumerate(table.schema.labels)}
    schema_order[NONE_LABEL] = len(schema_order)
    for sample_id, rec in table.records.items():
        ranked = sorted(rec.probs, key=lambda l: (-rec.probs[l], schema_order.get(l, 1 << 30)))
        conf = max(rec.probs.values())
        if conf > tau:
            out[sample_id] = ranked[0]
            continue
        cands = ranked[:top_n]
        if NONE_LABEL not in cands:
            cands.append(NONE_LABEL)
        gold_label = gold_map[sample_id]
        out[sample_id] = gold_label if gold_label in cands else NONE_LABEL
    return out
