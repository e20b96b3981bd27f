"""Probability sources.

Two built-in families need no weights on disk:

- ``hash-random:<seed>``: pseudo-logits drawn from a keyed hash of
  (seed, sentence, unit, label), then softmaxed. A stand-in with the exact
  cost profile and wire behaviour of a real filter, and bit-stable across
  processes and platforms, unlike anything touching ``random`` state.
- ``uniform``: every label equally likely. Degenerate on purpose; routes
  everything to the reranker at any usable threshold.

Anything else is treated as a checkpoint path for a fine-tuned encoder; this
build has no inference runtime for those, so a missing path and an existing
one both raise ModelLoadError with distinct messages.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import DeviceError, ModelLoadError

NONE_LABEL = "None"
LOGIT_SPREAD = 4.0  # keyed-hash logits live in [0, 4): peaks near e^4 apart


def check_device(hint: str) -> None:
    if hint != "cpu":
        raise DeviceError(f"device {hint!r} is not available in this build; use cpu")


def _hash_unit_interval(*parts: str) -> float:
    digest = hashlib.blake2b("|".join(parts).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2**64


@dataclass(frozen=True)
class Scorer:
    family: str
    seed: int

    def probs(self, sentence_id: str, unit_id: str,
              labels: tuple[str, ...]) -> dict[str, float]:
        """Distribution over labels plus the abstain label, summing to 1."""
        full = labels + (NONE_LABEL,)
        if self.family == "uniform":
            p = 1.0 / len(full)
            return {label: p for label in full}
        logits = [
            LOGIT_SPREAD * _hash_unit_interval(str(self.seed), sentence_id, unit_id, label)
            for label in full
        ]
        peak = max(logits)
        exps = [math.exp(x - peak) for x in logits]
        total = sum(exps)
        return {label: e / total for label, e in zip(full, exps)}


def load_model(model_id: str, device: str = "cpu") -> Scorer:
    check_device(device)
    if model_id == "uniform":
        return Scorer(family="uniform", seed=0)
    if model_id.startswith("hash-random:"):
        raw = model_id.split(":", 1)[1]
        try:
            seed = int(raw)
        except ValueError:
            raise ModelLoadError(f"hash-random seed must be an integer, got {raw!r}") from None
        return Scorer(family="hash-random", seed=seed)
    if "/" in model_id or model_id.endswith(".pt"):
        if not Path(model_id).exists():
            raise ModelLoadError(f"no checkpoint at {model_id!r}")
        raise ModelLoadError(
            f"checkpoint {model_id!r} needs an inference runtime this build does not ship")
    raise ModelLoadError(f"unknown model family {model_id!r}")
