"""Demo selection: seeded random draw or nearest-neighbour by sentence embedding.

Embeddings come from outside over a flat text format; nothing here computes
them. Cosine ranking is exact and deterministic, no seed involved.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import DataError, MalformedRecord, MissingEmbedding, PoolTooSmall
from .schema import Dataset


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    vectors: Mapping[str, np.ndarray]

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise DataError(f"embedding dim must be positive, got {self.dim}")
        for sid, vec in self.vectors.items():
            if vec.shape != (self.dim,):
                raise DataError(f"vector for {sid!r} has shape {vec.shape}, expected ({self.dim},)")
            if not np.any(vec):
                raise DataError(f"zero vector for {sid!r}")

    def __contains__(self, sentence_id: str) -> bool:
        return sentence_id in self.vectors

    def vector(self, sentence_id: str) -> np.ndarray:
        try:
            return self.vectors[sentence_id]
        except KeyError:
            raise MissingEmbedding(sentence_id) from None


def load_embeddings(path: str | Path) -> EmbeddingTable:
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if dim is None:
                if not line.startswith("dim="):
                    raise MalformedRecord(line_no, "expected dim=<d> header")
                try:
                    dim = int(line[4:])
                except ValueError:
                    raise MalformedRecord(line_no, f"bad dimension {line[4:]!r}") from None
                continue
            if "\t" not in line:
                raise MalformedRecord(line_no, "expected id<TAB>floats")
            sid, rest = line.split("\t", 1)
            try:
                vec = np.array([float(x) for x in rest.split()], dtype=np.float64)
            except ValueError:
                raise MalformedRecord(line_no, "non-numeric component") from None
            if vec.shape != (dim,):
                raise MalformedRecord(line_no, f"expected {dim} components, got {vec.shape[0]}")
            if sid in vectors:
                raise MalformedRecord(line_no, f"duplicate id {sid!r}")
            vectors[sid] = vec
    if dim is None:
        raise DataError(f"empty embedding file {path}")
    return EmbeddingTable(dim=dim, vectors=vectors)


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"dim={table.dim}\n")
        for sid in table.vectors:
            comps = " ".join(repr(float(x)) for x in table.vectors[sid])
            fh.write(f"{sid}\t{comps}\n")


def select_random(pool: Dataset, k: int, seed: int) -> list[str]:
    if k < 0:
        raise DataError(f"negative demo count {k}")
    ids = [s.sentence_id for s in pool.sentences]
    if k > len(ids):
        raise PoolTooSmall(k, len(ids))
    rng = random.Random(seed)
    return rng.sample(ids, k)


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def select_by_embedding(pool: Dataset, test_id: str, emb: EmbeddingTable, k: int) -> list[str]:
    """Top-k pool ids by cosine similarity to the test sentence, most similar
    first; ties fall back to id order. The test sentence never selects itself."""
    if k < 0:
        raise DataError(f"negative demo count {k}")
    test_vec = emb.vector(test_id)
    candidates = [s.sentence_id for s in pool.sentences if s.sentence_id != test_id]
    if k > len(candidates):
        raise PoolTooSmall(k, len(candidates))
    scored = [(-_cosine(emb.vector(sid), test_vec), sid) for sid in candidates]
    scored.sort()
    return [sid for _, sid in scored[:k]]
