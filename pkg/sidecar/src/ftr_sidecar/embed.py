"""Hashed character trigram sentence embedder.

Frozen and training-free: each trigram of the joined sentence text lands in
a signed bucket, the bucket counts are L2-normalized. Identical text gives
identical vectors, and every vector has unit norm, so a sentence's cosine
with itself is exactly 1 up to float error.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import BadRecord


def _bucket(gram: str, dim: int) -> tuple[int, float]:
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
    value = int.from_bytes(digest, "big")
    # low bit picks the sign so colliding grams can cancel instead of piling up
    return (value >> 1) % dim, 1.0 if value & 1 else -1.0


def embed_text(text: str, dim: int) -> np.ndarray:
    if dim < 2:
        raise BadRecord(0, f"embedding dim must be >= 2, got {dim}")
    vec = np.zeros(dim, dtype=np.float64)
    for i in range(len(text) - 2):
        idx, sign = _bucket(text[i:i + 3], dim)
        vec[idx] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        # too short for any trigram, or full cancellation: fall back to a
        # deterministic unit basis vector so downstream cosines stay defined
        idx, _ = _bucket("\x00" + text, dim)
        vec[idx] = 1.0
        return vec
    return vec / norm
