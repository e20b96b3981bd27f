"""Scoring and embedding sidecar for the ftrerank pipeline.

Turns a dataset file into the two artifacts the pipeline consumes but never
computes itself: per-unit label probability files and sentence embedding
tables. Coupling is file-only; the consumer validates everything on ingest.
"""

from .data import Sentence, load_schema, load_sentences
from .embed import embed_text
from .errors import BadRecord, DeviceError, ModelLoadError, SidecarError
from .jobs import SidecarJob, embed_dataset, score_dataset, write_fixture_dataset
from .model import Scorer, check_device, load_model
from .propose import propose_units, unit_key

__version__ = "0.1.0"

__all__ = [
    "BadRecord",
    "DeviceError",
    "ModelLoadError",
    "Scorer",
    "Sentence",
    "SidecarError",
    "SidecarJob",
    "check_device",
    "embed_dataset",
    "embed_text",
    "load_model",
    "load_schema",
    "load_sentences",
    "propose_units",
    "score_dataset",
    "unit_key",
    "write_fixture_dataset",
]
