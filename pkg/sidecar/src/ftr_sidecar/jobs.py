"""Batch jobs: a dataset in, one wire-format file out.

Score files are JSONL, one line per candidate unit, probabilities keyed by
label with the abstain label last. Embedding files start with a ``dim=<d>``
header, then one ``sentence_id<TAB>components`` row per sentence. Both
formats are defined by the consumer pipeline's ingest functions; nothing
else reads these files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .data import TASKS, Sentence, load_sentences
from .embed import embed_text
from .errors import BadRecord
from .model import Scorer, check_device, load_model
from .propose import propose_units, unit_key


@dataclass(frozen=True)
class SidecarJob:
    task: str
    data_path: str
    model_id: str
    out_path: str
    batch_size: int = 32
    device: str = "cpu"

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise BadRecord(0, f"task must be one of {TASKS}, got {self.task!r}")
        if self.batch_size < 1:
            raise BadRecord(0, f"batch_size must be >= 1, got {self.batch_size}")


def _batches(items: list, size: int):
    for i in range(0, len(items), size):
        yield items[i:i + size]


def _score_sentence(sent: Sentence, task: str, scorer: Scorer,
                    labels: tuple[str, ...], max_span_len: int) -> list[dict]:
    rows = []
    for idx, unit in enumerate(propose_units(sent, task, max_span_len)):
        probs = scorer.probs(sent.sentence_id, unit_key(unit), labels)
        rows.append({
            "sample_id": f"{sent.sentence_id}#{idx}",
            "sentence_id": sent.sentence_id,
            "unit": unit,
            "probs": probs,
        })
    return rows


def score_dataset(job: SidecarJob, labels: tuple[str, ...],
                  max_span_len: int = 3) -> int:
    """Write one probability line per candidate unit; returns the line count.

    Units whose top label is the abstain label are written like any other:
    dropping them is a routing decision that belongs to the consumer.
    """
    check_device(job.device)
    scorer = load_model(job.model_id, job.device)
    sentences = load_sentences(job.data_path)
    n = 0
    with open(job.out_path, "w", encoding="utf-8") as fh:
        for batch in _batches(sentences, job.batch_size):
            for sent in batch:
                for row in _score_sentence(sent, job.task, scorer, labels, max_span_len):
                    fh.write(json.dumps(row, ensure_ascii=False) + "\n")
                    n += 1
    return n


def embed_dataset(job: SidecarJob, dim: int = 64) -> int:
    """Write one embedding row per sentence; returns the row count."""
    check_device(job.device)
    sentences = load_sentences(job.data_path)
    with open(job.out_path, "w", encoding="utf-8") as fh:
        fh.write(f"dim={dim}\n")
        for batch in _batches(sentences, job.batch_size):
            for sent in batch:
                vec = embed_text(sent.text(), dim)
                comps = " ".join(repr(float(x)) for x in vec)
                fh.write(f"{sent.sentence_id}\t{comps}\n")
    return len(sentences)


def write_fixture_dataset(path: str | Path, sentences: list[dict]) -> None:
    """Tiny helper for tests and demos: dump sentence dicts as JSONL."""
    with open(path, "w", encoding="utf-8") as fh:
        for obj in sentences:
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
