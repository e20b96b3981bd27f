"""Builders shared across the test modules."""

from __future__ import annotations

from ftrerank.schema import (
    Dataset,
    GoldAnnotation,
    LabelSchema,
    SentenceRecord,
    Split,
    Unit,
)

NER_LABELS = (
    "person-actor",
    "person-director",
    "art-writtenart",
    "organization-company",
    "building-theater",
    "location-GPE",
)


def entity_sentence(sid: str, label: str, *, surface: str = "Unit") -> SentenceRecord:
    tokens = ["The", surface, "appeared", "."]
    return SentenceRecord(
        sentence_id=sid,
        tokens=tokens,
        annotations=[GoldAnnotation(unit=Unit.entity(1, 2), label=label)],
    )


def bare_sentence(sid: str) -> SentenceRecord:
    return SentenceRecord(sentence_id=sid, tokens=["Nothing", "here", "."], annotations=[])


def dataset_of(schema: LabelSchema, sentences, split=Split.FULL) -> Dataset:
    return Dataset(schema=schema, sentences=list(sentences), split_tag=split)
