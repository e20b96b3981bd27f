"""Dataset loading, k-shot sampling, negative balancing and test downsampling.

Datasets travel as UTF-8 JSON lines, one sentence per line:

    {"sentence_id": "s1", "tokens": ["Bob", "works"], "annotations": [...]}

Sampling routines are pure functions of (input, seed); re-running them with
the same arguments reproduces the same output sentence for sentence.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from pathlib import Path

from .errors import (
    DataError,
    InsufficientNegatives,
    InsufficientSupport,
    MalformedRecord,
    TargetTooSmall,
)
from .schema import (
    Dataset,
    GoldAnnotation,
    LabelSchema,
    SamplerConfig,
    SentenceRecord,
    Split,
    Task,
    validate_record,
)


def load_dataset(path: str | Path, schema: LabelSchema,
                 split_tag: Split = Split.FULL) -> Dataset:
    """Read a JSONL dataset file, validating every record against the schema."""
    sentences: list[SentenceRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise MalformedRecord(line_no, "record is not an object")
            sid = obj.get("sentence_id")
            tokens = obj.get("tokens")
            anns = obj.get("annotations", [])
            if not isinstance(sid, str):
                raise MalformedRecord(line_no, "sentence_id must be a string")
            if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
                raise MalformedRecord(line_no, "tokens must be a list of strings")
            if not isinstance(anns, list):
                raise MalformedRecord(line_no, "annotations must be a list")
            if sid in seen:
                raise MalformedRecord(line_no, f"duplicate sentence_id {sid!r}")
            seen.add(sid)
            try:
                parsed = [GoldAnnotation.from_json(a) for a in anns]
            except DataError as exc:
                raise MalformedRecord(line_no, str(exc)) from None
            rec = SentenceRecord(sentence_id=sid, tokens=list(tokens), annotations=parsed)
            validate_record(rec, schema, line_no)
            sentences.append(rec)
    return Dataset(schema=schema, sentences=sentences, split_tag=split_tag)


def record_to_json(rec: SentenceRecord) -> str:
    obj = {
        "sentence_id": rec.sentence_id,
        "tokens": rec.tokens,
        "annotations": [a.to_json() for a in rec.annotations],
    }
    return json.dumps(obj, ensure_ascii=False)


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write the canonical JSONL form; load -> save -> load is the identity."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in dataset.sentences:
            fh.write(record_to_json(rec) + "\n")


def label_counts(dataset: Dataset) -> Counter[str]:
    """Mention counts per label over the whole dataset."""
    counts: Counter[str] = Counter({label: 0 for label in dataset.schema.labels})
    for s in dataset.sentences:
        counts.update(s.labels())
    return counts


def _sentence_label_counts(rec: SentenceRecord) -> Counter[str]:
    return Counter(rec.labels())


def greedy_kshot_sample(full: Dataset, cfg: SamplerConfig) -> Dataset:
    """Pick a k-shot subset: every schema label ends up with >= k mentions.

    Labels are processed in ascending frequency order (ties alphabetical).
    For each label, sentences containing it are drawn uniformly at random
    until its counter reaches k; every draw credits all labels the sentence
    mentions. A final prune pass walks the draws in insertion order and
    drops any sentence whose removal keeps every counter at k or above.

    Relation datasets skip the greedy loop: each sentence carries a single
    relation, so exactly k sentences are drawn per label.
    """
    schema = full.schema
    counts = label_counts(full)
    order = sorted(schema.labels, key=lambda l: (counts[l], l))
    rng = random.Random(cfg.seed)

    if schema.task == Task.RE:
        per_label: dict[str, list[int]] = {l: [] for l in schema.labels}
        for i, s in enumerate(full.sentences):
            for label in set(s.labels()):
                per_label[label].append(i)
        for label in order:
            if len(per_label[label]) < cfg.k:
                raise InsufficientSupport(label, len(per_label[label]))
        chosen: set[int] = set()
        selected: list[int] = []
        for label in order:
            pool = [i for i in per_label[label] if i not in chosen]
            if len(pool) < cfg.k:
                raise InsufficientSupport(label, len(pool))
            for _ in range(cfg.k):
                i = pool.pop(rng.randrange(len(pool)))
                chosen.add(i)
                selected.append(i)
        picked = [full.sentences[i] for i in selected]
        return Dataset(schema=schema, sentences=picked, split_tag=Split.TRAIN)

    for label in order:
        if counts[label] < cfg.k:
            raise InsufficientSupport(label, counts[label])

    counter: Counter[str] = Counter({l: 0 for l in schema.labels})
    chosen = set()
    selected = []
    for label in order:
        while counter[label] < cfg.k:
            pool = [
                i for i, s in enumerate(full.sentences)
                if i not in chosen and any(a.label == label for a in s.annotations)
            ]
            if not pool:
                raise InsufficientSupport(label, counter[label])
            i = pool[rng.randrange(len(pool))]
            chosen.add(i)
            selected.append(i)
            counter.update(full.sentences[i].labels())

    selected = prune_pass([full.sentences[i] for i in selected], counter, cfg.k)
    return Dataset(schema=schema, sentences=selected, split_tag=Split.TRAIN)


def prune_pass(selected: list[SentenceRecord], counter: Counter[str],
               k: int) -> list[SentenceRecord]:
    """Drop sentences, in insertion order, whose removal keeps all counters >= k.

    ``counter`` is mutated to reflect the pruned selection. Running the pass a
    second time on its own output removes nothing.
    """
    kept: list[SentenceRecord] = []
    for rec in selected:
        local = _sentence_label_counts(rec)
        if all(counter[label] - n >= k for label, n in local.items()):
            counter.subtract(local)
        else:
            kept.append(rec)
    return kept


def balance_negatives(sampled: Dataset, full: Dataset, cfg: SamplerConfig) -> Dataset:
    """Append annotation-free sentences until negatives/positives hits the ratio.

    The target count is floor(positives * ratio); existing positives are
    passed through untouched. With zero positives nothing is appended.
    """
    positives = [s for s in sampled.sentences if s.annotations]
    existing_neg = len(sampled.sentences) - len(positives)
    target = int(len(positives) * cfg.negative_ratio)
    need = target - existing_neg
    if need <= 0:
        return Dataset(schema=sampled.schema, sentences=list(sampled.sentences),
                       split_tag=sampled.split_tag)
    have = {s.sentence_id for s in sampled.sentences}
    pool = [s for s in full.sentences
            if not s.annotations and s.sentence_id not in have]
    if len(pool) < need:
        raise InsufficientNegatives(need, len(pool))
    rng = random.Random(cfg.seed)
    drawn = []
    indices = list(range(len(pool)))
    for _ in range(need):
        drawn.append(pool[indices.pop(rng.randrange(len(indices)))])
    return Dataset(schema=sampled.schema,
                   sentences=list(sampled.sentences) + drawn,
                   split_tag=sampled.split_tag)


def split_train_valid(sampled: Dataset, cfg: SamplerConfig) -> tuple[Dataset, Dataset]:
    """Hold out floor(valid_fraction * n) sentences once n exceeds the minimum.

    Small samples keep everything in train and return an empty valid split.
    Both splits preserve the input sentence order.
    """
    n = len(sampled.sentences)
    schema = sampled.schema
    if n <= cfg.valid_min_sentences:
        return (
            Dataset(schema=schema, sentences=list(sampled.sentences), split_tag=Split.TRAIN),
            Dataset(schema=schema, sentences=[], split_tag=Split.VALID),
        )
    n_valid = int(cfg.valid_fraction * n)
    rng = random.Random(cfg.seed)
    valid_idx = set(rng.sample(range(n), n_valid))
    train = [s for i, s in enumerate(sampled.sentences) if i not in valid_idx]
    valid = [s for i, s in enumerate(sampled.sentences) if i in valid_idx]
    return (
        Dataset(schema=schema, sentences=train, split_tag=Split.TRAIN),
        Dataset(schema=schema, sentences=valid, split_tag=Split.VALID),
    )


def downsample_test(full_test: Dataset, target: int, seed: int) -> Dataset:
    """Shrink a test set to ``target`` sentences without losing label coverage.

    A first pass picks one covering sentence per still-uncovered label,
    rarest label first (ties alphabetical); random fill completes the budget.
    Output keeps the original sentence order.
    """
    n = len(full_test.sentences)
    if not (1 <= target <= n):
        raise DataError(f"target must lie in [1, {n}], got {target}")
    containing: dict[str, list[int]] = {}
    for i, s in enumerate(full_test.sentences):
        for label in set(s.labels()):
            containing.setdefault(label, []).append(i)
    rng = random.Random(seed)
    selected: set[int] = set()
    for label in sorted(containing, key=lambda l: (len(containing[l]), l)):
        if any(i in selected for i in containing[label]):
            continue
        pool = containing[label]
        selected.add(pool[rng.randrange(len(pool))])
    if len(selected) > target:
        raise TargetTooSmall(len(selected), target)
    rest = [i for i in range(n) if i not in selected]
    selected.update(rng.sample(rest, target - len(selected)))
    picked = [full_test.sentences[i] for i in sorted(selected)]
    return Dataset(schema=full_test.schema, sentences=picked, split_tag=Split.TEST)
