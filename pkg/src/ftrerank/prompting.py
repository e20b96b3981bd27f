"""Prompt compilation and answer parsing.

Two prompt families live here: multiple-choice rerank prompts (one target
unit, a handful of templated choices, lettered answers) and plain ICL
extraction prompts (sentence in, tuple list out). Both are pure string
builders; parsing is total and never raises on model output.
"""

from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from .errors import BadVariant, DataError, MalformedRecord, MarkerCollision, MissingTemplate, WrongTask
from .filtering import CandidateSet, ScoreRecord
from .schema import NONE_LABEL, GoldAnnotation, LabelSchema, Span, Task, Unit

MARKER = "<t>"

# Placeholder expected in choice templates, by task.
_PLACEHOLDERS = {
    Task.NER: ("{ent}",),
    Task.RE: ("{subj}", "{obj}"),
    Task.ED: ("{evt}",),
}
_ALL_PLACEHOLDERS = ("{ent}", "{subj}", "{obj}", "{evt}")

# Keys under which template files may spell their no-answer row.
_NONE_KEYS = {"no-entity", "no_relation", "no-event", NONE_LABEL}

VARIANT_IDS = ("I0", "I1", "I2", "I3", "I4", "I5")

# Task vocabulary used to phrase instructions and answer headers.
_TASK_WORDS = {
    Task.NER: {
        "noun": "entities",
        "singular": "entity",
        "types": "entity types",
        "header": "Entities",
        "sentinel": "No entities found.",
        "annotator": "entity-instance annotator",
        "slot": "identified_entity",
        "unit_word": "word or phrase about the entity",
    },
    Task.ED: {
        "noun": "events",
        "singular": "event",
        "types": "event types",
        "header": "Events",
        "sentinel": "No events found.",
        "annotator": "event-instance annotator",
        "slot": "identified_trigger",
        "unit_word": "word or phrase that triggers the event",
    },
    Task.RE: {
        "noun": "relations",
        "singular": "relation",
        "types": "relation types",
        "header": "Relation",
        "sentinel": "no_relation",
        "annotator": "relation annotator",
        "slot": "identified_relation",
        "unit_word": "relation between the marked subject and object",
    },
}


def estimate_tokens(text: str) -> int:
    """Cheap length proxy: one token per four UTF-8 bytes, rounded up."""
    return math.ceil(len(text.encode("utf-8")) / 4)


def choice_letters(n: int) -> list[str]:
    # a..z, then aa, ab, ... like spreadsheet columns
    out = []
    for i in range(n):
        k = i
        s = ""
        while True:
            s = chr(ord("a") + k % 26) + s
            k = k // 26 - 1
            if k < 0:
                break
        out.append(s)
    return out


@dataclass(frozen=True)
class TemplateSet:
    schema: LabelSchema
    choice_templates: Mapping[str, str]
    none_template: str

    def __post_init__(self) -> None:
        required = _PLACEHOLDERS.get(self.schema.task)
        if required is None:
            raise WrongTask(f"no choice templates defined for task {self.schema.task.value}")
        for label in self.schema.labels:
            if label not in self.choice_templates:
                raise MissingTemplate(label)
        foreign = [p for p in _ALL_PLACEHOLDERS if p not in required]
        for label, tpl in list(self.choice_templates.items()) + [(NONE_LABEL, self.none_template)]:
            for p in foreign:
                if p in tpl:
                    raise DataError(f"template for {label!r} uses {p}, not valid for {self.schema.task.value}")

    def template_for(self, label: str) -> str:
        if label == NONE_LABEL:
            return self.none_template
        tpl = self.choice_templates.get(label)
        if tpl is None:
            raise MissingTemplate(label)
        return tpl

    def render_choice(self, label: str, *, ent: str = "", subj: str = "", obj: str = "", evt: str = "") -> str:
        tpl = self.template_for(label)
        return tpl.replace("{ent}", ent).replace("{subj}", subj).replace("{obj}", obj).replace("{evt}", evt)

    def instruction(self, variant_id: str, definitions: Mapping[str, str] | None = None) -> str:
        return instruction_text(variant_id, self.schema, definitions)


def load_templates(path: str | Path, schema: LabelSchema) -> TemplateSet:
    """Read a label<TAB>template file. A row keyed no-entity/no_relation/no-event
    (or None) supplies the no-answer template; every schema label needs a row."""
    choice: dict[str, str] = {}
    none_tpl: str | None = None
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise MalformedRecord(line_no, "expected label<TAB>template")
            key, tpl = line.split("\t", 1)
            key = key.strip()
            if key in _NONE_KEYS:
                if none_tpl is not None:
                    raise MalformedRecord(line_no, "duplicate no-answer template")
                none_tpl = tpl
                continue
            if key in choice:
                raise MalformedRecord(line_no, f"duplicate template for {key!r}")
            choice[key] = tpl
    if none_tpl is None:
        raise MissingTemplate(NONE_LABEL)
    for label in schema.labels:
        if label not in choice:
            raise MissingTemplate(label)
    return TemplateSet(schema=schema, choice_templates=choice, none_template=none_tpl)


_I1 = (
    "Identify the {noun} expressed by each sentence, and locate each {singular} to words in the "
    "sentence. The possible {types} are: {label_list}. If you do not find any {singular} in this "
    "sentence, just output `Answer: {sentinel}'"
)
_I2 = (
    "Identify the {noun} expressed by each sentence, and locate each {singular} to words in the "
    "sentence. The possible {types} are:\n{label_lines}\nIf you do not find any {singular} in this "
    "sentence, just output `Answer: {sentinel}'"
)
_I3 = (
    "Assume you are an {annotator}. Given a sentence, you need to (1) identify the {unit_word} in "
    "the sentence, and (2) classify its {singular} type. The possible {types} are listed as below:\n"
    "{label_list}.\nPlease note that your annotation results must follow such format: '''Answer: "
    "([Type_1] <SEP> {slot}:[{slot_cap}_1]), ([Type_2] <SEP> {slot}:[{slot_cap}_2]), ......'''. \n"
    "If you do not find any {singular} in this sentence, just output `Answer: {sentinel}'"
)
_I4 = (
    "Assume you are an {annotator}. Your objective is to perform a series of intricate steps for "
    "{task_name}. Firstly, you have to identify a particular word or phrase in the sentence that "
    "corresponds to an {singular}. Following this, classify the {singular} into one of the potential "
    "{types}. The potential {types} are provided as below:\n{label_list}.\nPlease note that your "
    "annotation results must follow such format: `Answer: ([Type_1] <SEP> {slot}:[{slot_cap}_1]), "
    "([Type_2] <SEP> {slot}:[{slot_cap}_2]), ......'. If you do not find any {singular} in this "
    "sentence, just output `Answer: {sentinel}'"
)
_I5 = (
    "Assume you are an {annotator}. Given a sentence, you need to (1) identify the {unit_word} in "
    "the sentence, and (2) classify its {singular} type. The possible {types} are listed as below:\n"
    "{label_lines}\nPlease note that your annotation results must follow such format: `Answer: "
    "([Type_1] <SEP> {slot}:[{slot_cap}_1]), ([Type_2] <SEP> {slot}:[{slot_cap}_2]), ......'. If you "
    "do not find any {singular} in this sentence, just output `Answer: {sentinel}'"
)
_TASK_NAMES = {Task.NER: "Named Entity Recognition", Task.ED: "Event Detection", Task.RE: "Relation Extraction"}


def instruction_text(variant_id: str, schema: LabelSchema, definitions: Mapping[str, str] | None = None) -> str:
    """Concrete instruction for one variant, with the schema's labels filled in.

    All six variants exist for entity schemas; other tasks get the plain ones
    (I0, I1) only, since the richer phrasings are entity-specific.
    """
    if variant_id not in VARIANT_IDS:
        raise BadVariant(variant_id)
    if schema.task not in _TASK_WORDS:
        raise WrongTask(f"no instructions for task {schema.task.value}")
    if variant_id == "I0":
        return ""
    if schema.task is not Task.NER and variant_id not in ("I0", "I1"):
        raise BadVariant(variant_id)
    words = _TASK_WORDS[schema.task]
    label_list = ", ".join(schema.labels)
    if definitions:
        lines = [f"- {lab}: {definitions[lab]}" if lab in definitions else f"- {lab}" for lab in schema.labels]
    else:
        lines = [f"- {lab}" for lab in schema.labels]
    fills = dict(
        words,
        label_list=label_list,
        label_lines="\n".join(lines),
        slot_cap=words["slot"].split("_")[1].capitalize(),
        task_name=_TASK_NAMES[schema.task],
    )
    tpl = {"I1": _I1, "I2": _I2, "I3": _I3, "I4": _I4, "I5": _I5}[variant_id]
    return tpl.format(**fills)


@dataclass(frozen=True)
class DemoExample:
    instruct: str
    sentence: str
    choices: tuple[str, ...]
    analysis: str | None
    answer_index: int

    def __post_init__(self) -> None:
        if not self.choices:
            raise DataError("demo with no choices")
        if not 0 <= self.answer_index < len(self.choices):
            raise DataError(f"demo answer index {self.answer_index} outside {len(self.choices)} choices")

    def render(self, cot: bool) -> str:
        letters = choice_letters(len(self.choices))
        lines = [f"Instruct: {self.instruct}", f"Sentence: {self.sentence}"]
        lines += [f"({let}) {text}" for let, text in zip(letters, self.choices)]
        if cot and self.analysis:
            lines.append(f"Analysis: {self.analysis}")
        lines.append(f"Answer: ({letters[self.answer_index]})")
        return "\n".join(lines)


def load_demos(path: str | Path) -> list[DemoExample]:
    demos = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"bad JSON: {exc}") from exc
            try:
                demos.append(
                    DemoExample(
                        instruct=rec["instruct"],
                        sentence=rec["sentence"],
                        choices=tuple(rec["choices"]),
                        analysis=rec.get("analysis"),
                        answer_index=rec["answer"],
                    )
                )
            except (KeyError, TypeError) as exc:
                raise MalformedRecord(line_no, f"missing demo field: {exc}") from exc
    return demos


class ParseStatus(Enum):
    PARSED = "parsed"
    PARSED_FALLBACK = "parsed_fallback"
    FAILED = "failed"


@dataclass(frozen=True)
class PromptBundle:
    instruction: str
    demo_block: tuple[DemoExample, ...]
    demo_texts: tuple[str, ...]
    question: str
    choice_map: tuple[tuple[str, str], ...]  # (letter, label), prompt order
    choice_texts: tuple[str, ...]  # rendered bodies aligned with choice_map
    fallback_label: str
    meta: dict = field(default_factory=dict)

    def text(self) -> str:
        parts = []
        if self.instruction:
            parts.append(self.instruction)
        parts.extend(self.demo_texts)
        parts.append(self.question)
        return "\n\n".join(parts)

    def label_for(self, letter: str) -> str | None:
        for let, lab in self.choice_map:
            if let == letter:
                return lab
        return None


def mark_sentence(tokens: Sequence[str], spans: Sequence[Span]) -> str:
    """Join tokens with single spaces, quoting each span between markers."""
    for tok in tokens:
        if MARKER in tok:
            raise MarkerCollision(f"token {tok!r} already contains {MARKER}")
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    for a, b in zip(ordered, ordered[1:]):
        if b.start < a.end:
            raise MarkerCollision(f"overlapping target spans {a} and {b}")
    if ordered and ordered[-1].end > len(tokens):
        raise DataError(f"span {ordered[-1]} outside sentence of {len(tokens)} tokens")
    pieces: list[str] = []
    starts = {s.start for s in ordered}
    ends = {s.end for s in ordered}
    for i, tok in enumerate(tokens):
        if i in starts:
            pieces.append(MARKER)
        pieces.append(tok)
        if i + 1 in ends:
            pieces.append(MARKER)
    return " ".join(pieces)


def _surfaces(unit: Unit, tokens: Sequence[str]) -> dict[str, str]:
    if unit.kind == "entity":
        return {"ent": unit.span.surface(tokens)}
    if unit.kind == "trigger":
        return {"evt": unit.span.surface(tokens)}
    if unit.kind == "relation":
        return {"subj": unit.subj.surface(tokens), "obj": unit.obj.surface(tokens)}
    raise WrongTask(f"no choice prompt for unit kind {unit.kind!r}")


def _instruct_line(unit: Unit, tokens: Sequence[str]) -> str:
    sur = _surfaces(unit, tokens)
    if unit.kind == "entity":
        return f"Read following sentences and identify what is the entity type of {sur['ent']} quoted by {MARKER}."
    if unit.kind == "trigger":
        return f"Read following sentences and identify what event is triggered by the word {sur['evt']} quoted by {MARKER}."
    return f"Read the sentence and determine the relation between {sur['subj']} and {sur['obj']} quoted by {MARKER}."


def render_mcq(
    rec: ScoreRecord,
    tokens: Sequence[str],
    cands: CandidateSet,
    demos: Sequence[DemoExample],
    tset: TemplateSet,
    cot: bool,
    shuffle_seed: int | None = None,
) -> PromptBundle:
    """Compile one multiple-choice rerank prompt.

    Choices follow the candidate order (first candidate is the filter's pick,
    which also serves as the parse-failure fallback). shuffle_seed reorders
    the choices for order-sensitivity runs; the fallback stays put.
    """
    unit = rec.unit
    sur = _surfaces(unit, tokens)
    marked = mark_sentence(tokens, unit.spans())
    order = list(cands.candidates)
    if not order:
        raise DataError(f"empty candidate set for {rec.sample_id}")
    fallback = order[0]
    if shuffle_seed is not None:
        random.Random(shuffle_seed).shuffle(order)
    rendered = [tset.render_choice(lab, **sur) for lab in order]
    letters = choice_letters(len(order))
    lines = [f"Instruct: {_instruct_line(unit, tokens)}", f"Sentence: {marked}"]
    lines += [f"({let}) {text}" for let, text in zip(letters, rendered)]
    question = "\n".join(lines)
    demo_texts = tuple(d.render(cot) for d in demos)
    bundle = PromptBundle(
        instruction="",
        demo_block=tuple(demos),
        demo_texts=demo_texts,
        question=question,
        choice_map=tuple(zip(letters, order)),
        choice_texts=tuple(rendered),
        fallback_label=fallback,
        meta={"sample_id": rec.sample_id},
    )
    bundle.meta["token_estimate"] = estimate_tokens(bundle.text())
    return bundle


def _gold_tuple_line(task: Task, annotations: Sequence[GoldAnnotation], tokens: Sequence[str]) -> str:
    header = _TASK_WORDS[task]["header"]
    if not annotations:
        return f"{header}: {_TASK_WORDS[task]['sentinel']}"
    parts = [f"({a.label}, {a.unit.span.surface(tokens)})" for a in annotations]
    return f"{header}: " + ", ".join(parts)


def render_icl(
    tokens: Sequence[str],
    demos: Sequence[tuple[Sequence[str], Sequence[GoldAnnotation]]],
    tset: TemplateSet,
    variant_id: str,
    unit: Unit | None = None,
) -> PromptBundle:
    """Compile a plain extraction prompt: instruction, demo sentences with
    their gold tuples, then the test sentence with an empty answer slot.

    Relation prompts need `unit` (the subject/object pair being asked) and
    each demo must carry exactly one relation annotation.
    """
    task = tset.schema.task
    if task not in _TASK_WORDS:
        raise WrongTask(f"no ICL prompt format for task {task.value}")
    instruction = tset.instruction(variant_id)
    demo_texts: list[str] = []
    if task is Task.RE:
        if unit is None or unit.kind != "relation":
            raise DataError("relation prompts need the subject/object pair")
        for d_tokens, d_gold in demos:
            rel = [a for a in d_gold if a.unit.kind == "relation"]
            if len(rel) != 1:
                raise DataError("relation demos must carry exactly one relation annotation")
            ann = rel[0]
            marked = mark_sentence(d_tokens, ann.unit.spans())
            subj = ann.unit.subj.surface(d_tokens)
            obj = ann.unit.obj.surface(d_tokens)
            demo_texts.append(f"Sentence: {marked}\nRelation between {subj} and {obj}: {ann.label}")
        marked = mark_sentence(tokens, unit.spans())
        subj = unit.subj.surface(tokens)
        obj = unit.obj.surface(tokens)
        question = f"Sentence: {marked}\nRelation between {subj} and {obj}:"
    else:
        for d_tokens, d_gold in demos:
            demo_texts.append(f"Sentence: {' '.join(d_tokens)}\n{_gold_tuple_line(task, list(d_gold), d_tokens)}")
        header = _TASK_WORDS[task]["header"]
        question = f"Sentence: {' '.join(tokens)}\n{header}:"
    bundle = PromptBundle(
        instruction=instruction,
        demo_block=(),
        demo_texts=tuple(demo_texts),
        question=question,
        choice_map=(),
        choice_texts=(),
        fallback_label=NONE_LABEL,
        meta={},
    )
    bundle.meta["token_estimate"] = estimate_tokens(bundle.text())
    return bundle


_ANSWER_RE = re.compile(r"Answer:\s*\(([A-Za-z]+)\)")
_PAREN_RE = re.compile(r"\(([A-Za-z]+)\)")


def parse_mcq_answer(text: str, bundle: PromptBundle) -> tuple[str, ParseStatus]:
    """Pull the chosen label out of a rerank reply. Total: anything that
    cannot be read maps to the fallback label with Failed status."""
    hits = _ANSWER_RE.findall(text or "")
    for letter in reversed(hits):
        label = bundle.label_for(letter.lower())
        if label is not None:
            return label, ParseStatus.PARSED
    lines = [ln for ln in (text or "").splitlines() if ln.strip()]
    if lines:
        tail_hits = _PAREN_RE.findall(lines[-1])
        labels = {bundle.label_for(h.lower()) for h in tail_hits}
        labels.discard(None)
        if len(labels) == 1:
            return labels.pop(), ParseStatus.PARSED_FALLBACK
    lowered = (text or "").casefold()
    contained = [
        lab
        for (_, lab), body in zip(bundle.choice_map, bundle.choice_texts)
        if body and body.casefold() in lowered
    ]
    if len(set(contained)) == 1:
        return contained[0], ParseStatus.PARSED_FALLBACK
    return bundle.fallback_label, ParseStatus.FAILED


@dataclass
class IclParse:
    items: list[tuple[str, str]]  # (surface, label)
    units: list[tuple[Unit, str]]  # span-aligned, when tokens were given
    unknown_dropped: int = 0
    unmatched: int = 0
    ambiguous: int = 0


_TUPLE_RE = re.compile(r"\(\s*([^(),]+?)\s*,\s*([^()]*?)\s*\)")

_NONE_FORMS = {"none", "no_relation", "no relation"}


def _align(surface: str, tokens: Sequence[str]) -> tuple[Span | None, int]:
    """Leftmost exact token-window match; returns (span, occurrence count)."""
    target = surface.split()
    if not target:
        return None, 0
    hits = []
    for i in range(len(tokens) - len(target) + 1):
        if list(tokens[i : i + len(target)]) == target:
            hits.append(i)
    if not hits:
        return None, 0
    return Span(hits[0], hits[0] + len(target)), len(hits)


def parse_icl_answer(text: str, schema: LabelSchema, tokens: Sequence[str] | None = None) -> IclParse:
    """Read (type, surface) tuples back out of an extraction reply.

    Lenient by design: unknown labels are dropped and counted, surfaces that
    do not appear in the sentence are counted as unmatched, and a sentinel
    no-answer reply yields an empty parse.
    """
    task = schema.task
    if task not in _TASK_WORDS:
        raise WrongTask(f"no ICL parser for task {task.value}")
    out = IclParse(items=[], units=[])
    body = text or ""
    if task is Task.RE:
        tail = body
        for m in re.finditer(r"(?:Relation[^:\n]*|Answer)\s*:\s*", body):
            tail = body[m.end() :]
        tail = tail.strip()
        first = tail.splitlines()[0].strip() if tail else ""
        first = first.rstrip(".")
        if not first:
            return out
        if first.casefold() in _NONE_FORMS:
            out.items.append(("", NONE_LABEL))
            return out
        for lab in schema.labels:
            if first.casefold() == lab.casefold():
                out.items.append(("", lab))
                return out
        contained = [lab for lab in schema.labels if lab.casefold() in tail.casefold()]
        if len(contained) == 1:
            out.items.append(("", contained[0]))
        else:
            out.unknown_dropped += 1
        return out

    header = _TASK_WORDS[task]["header"]
    tail = body
    for m in re.finditer(rf"(?:{header}|Answer)\s*:", body):
        tail = body[m.end() :]
    sentinel = _TASK_WORDS[task]["sentinel"].casefold().rstrip(".")
    if sentinel in tail.casefold():
        return out
    for m in _TUPLE_RE.finditer(tail):
        label, surface = m.group(1).strip(), m.group(2).strip()
        if label not in schema:
            out.unknown_dropped += 1
            continue
        out.items.append((surface, label))
        if tokens is not None:
            span, n = _align(surface, tokens)
            if span is None:
                out.unmatched += 1
                continue
            if n > 1:
                out.ambiguous += 1
            unit = Unit.entity(span.start, span.end) if task is Task.NER else Unit.trigger_word(span.start, span.end)
            out.units.append((unit, label))
    return out
