from __future__ import annotations

import importlib.resources as ir
import json
from pathlib import Path

import pytest

from ftrerank.errors import (
    BadVariant,
    DataError,
    MalformedRecord,
    MarkerCollision,
    MissingTemplate,
    WrongTask,
)
from ftrerank.filtering import CandidateSet, RouterConfig, ScoreRecord, top_candidates
from ftrerank.prompting import (
    DemoExample,
    ParseStatus,
    choice_letters,
    estimate_tokens,
    instruction_text,
    load_demos,
    load_templates,
    mark_sentence,
    parse_icl_answer,
    parse_mcq_answer,
    render_icl,
    render_mcq,
)
from ftrerank.schema import (
    GoldAnnotation,
    LabelSchema,
    NONE_LABEL,
    Span,
    Task,
    Unit,
)

DATA = Path(__file__).parent / "data"


def pkg_file(rel: str) -> str:
    return str(ir.files("ftrerank").joinpath(rel))


@pytest.fixture
def fewnerd_small():
    schema = LabelSchema(task=Task.NER, labels=(
        "person-actor", "person-director", "person-artist/author",
        "organization-company", "location-GPE", "building-theater"))
    return schema, load_templates(pkg_file("data/templates/fewnerd.tsv"), schema)


@pytest.fixture
def mcq_bundle(fewnerd_small):
    schema, tset = fewnerd_small
    rec = ScoreRecord(sample_id="s0#0", sentence_id="s0", unit=Unit.entity(1, 2),
                      probs={"person-actor": 0.4, "person-director": 0.35, NONE_LABEL: 0.25})
    cands = top_candidates(rec, RouterConfig(tau=0.6, top_n=2), schema)
    return render_mcq(rec, ("The", "Bob", "show", "."), cands, [], tset, cot=True)


class TestLetters:
    def test_spreadsheet_sequence(self):
        letters = choice_letters(28)
        assert letters[:4] == ["a", "b", "c", "d"]
        assert letters[25] == "z"
        assert letters[26] == "aa"
        assert letters[27] == "ab"

    def test_token_estimate(self):
        assert estimate_tokens("") == 0
        assert estimate_tokens("abcd") == 1
        assert estimate_tokens("abcde") == 2
        # multi-byte text counts utf-8 bytes, not characters
        assert estimate_tokens("é" * 4) == 2


class TestTemplates:
    def test_golden_renders(self):
        goldens = json.loads((DATA / "template_goldens.json").read_text())
        tasks = {"fewnerd": Task.NER, "tacrev": Task.RE, "ace05": Task.ED}
        for stem, golden in goldens.items():
            if stem.startswith("_"):
                continue
            schema = LabelSchema(task=tasks[stem], labels=tuple(golden["labels"]))
            tset = load_templates(pkg_file(f"data/templates/{stem}.tsv"), schema)
            for case in golden["cases"]:
                got = tset.render_choice(case["label"], **case["slots"])
                assert got == case["expected"], f"{stem}/{case['label']}"

    def test_none_template_required(self, tmp_path, fewnerd_small):
        schema, _ = fewnerd_small
        path = tmp_path / "t.tsv"
        path.write_text("person-actor\t{ent} is an actor.\n")
        with pytest.raises(MissingTemplate):
            load_templates(path, schema)

    def test_schema_coverage_required(self, tmp_path):
        schema = LabelSchema(task=Task.NER, labels=("person-actor", "person-director"))
        path = tmp_path / "t.tsv"
        path.write_text("no-entity\t{ent} is nothing.\nperson-actor\t{ent} is an actor.\n")
        with pytest.raises(MissingTemplate):
            load_templates(path, schema)

    def test_extra_rows_tolerated(self, tmp_path):
        schema = LabelSchema(task=Task.NER, labels=("person-actor",))
        path = tmp_path / "t.tsv"
        path.write_text(
            "no-entity\t{ent} is nothing.\n"
            "person-actor\t{ent} is an actor.\n"
            "person-director\t{ent} is a director.\n"
        )
        tset = load_templates(path, schema)
        assert tset.render_choice("person-actor", ent="Bob") == "Bob is an actor."

    def test_duplicate_row_rejected(self, tmp_path):
        schema = LabelSchema(task=Task.NER, labels=("person-actor",))
        path = tmp_path / "t.tsv"
        path.write_text(
            "no-entity\tx\nperson-actor\ta\nperson-actor\tb\n")
        with pytest.raises(MalformedRecord):
            load_templates(path, schema)

    def test_foreign_placeholder_rejected(self, tmp_path):
        schema = LabelSchema(task=Task.NER, labels=("person-actor",))
        path = tmp_path / "t.tsv"
        path.write_text("no-entity\t{ent} is nothing.\nperson-actor\t{subj} acts.\n")
        with pytest.raises(DataError):
            load_templates(path, schema)


class TestInstructions:
    def test_i0_empty(self, fewnerd_small):
        schema, _ = fewnerd_small
        assert instruction_text("I0", schema) == ""

    def test_i1_lists_labels(self):
        schema = LabelSchema(task=Task.NER, labels=("person-actor", "location-GPE"))
        text = instruction_text("I1", schema)
        assert "person-actor, location-GPE" in text
        assert text.endswith("`Answer: No entities found.'")

    def test_i2_uses_definitions(self):
        schema = LabelSchema(task=Task.NER, labels=("person-actor", "location-GPE"))
        text = instruction_text("I2", schema, {"person-actor": "an actor",
                                               "location-GPE": "a place"})
        assert "- person-actor: an actor" in text
        assert "- location-GPE: a place" in text

    def test_variants_distinct(self):
        schema = LabelSchema(task=Task.NER, labels=("person-actor",))
        texts = {v: instruction_text(v, schema, {"person-actor": "an actor"})
                 for v in ("I1", "I2", "I3", "I4", "I5")}
        assert len(set(texts.values())) == 5

    def test_unknown_variant(self, fewnerd_small):
        schema, _ = fewnerd_small
        with pytest.raises(BadVariant):
            instruction_text("I9", schema)

    def test_non_ner_limited_to_simple_variants(self):
        ed = LabelSchema(task=Task.ED, labels=("Attack",))
        assert instruction_text("I0", ed) == ""
        assert "event" in instruction_text("I1", ed)
        with pytest.raises(BadVariant):
            instruction_text("I2", ed)

    def test_re_sentinel(self):
        re_schema = LabelSchema(task=Task.RE, labels=("per:employee_of",))
        assert instruction_text("I1", re_schema).endswith("`Answer: no_relation'")

    def test_argument_task_unsupported(self):
        eae = LabelSchema(task=Task.EAE, labels=("Agent",))
        with pytest.raises(WrongTask):
            instruction_text("I1", eae)


class TestMarking:
    def test_single_span(self):
        out = mark_sentence(("a", "b", "c"), [Span(1, 2)])
        assert out == "a <t> b <t> c"

    def test_two_spans(self):
        out = mark_sentence(("a", "b", "c", "d"), [Span(0, 1), Span(2, 4)])
        assert out == "<t> a <t> b <t> c d <t>"

    def test_marker_in_token(self):
        with pytest.raises(MarkerCollision):
            mark_sentence(("a", "<t>", "c"), [Span(0, 1)])

    def test_overlap(self):
        with pytest.raises(MarkerCollision):
            mark_sentence(("a", "b", "c"), [Span(0, 2), Span(1, 3)])


class TestRenderMcq:
    def test_question_layout(self, mcq_bundle):
        lines = mcq_bundle.question.splitlines()
        assert lines[0] == ("Instruct: Read following sentences and identify what is "
                            "the entity type of Bob quoted by <t>.")
        assert lines[1] == "Sentence: The <t> Bob <t> show ."
        assert lines[2] == "(a) Bob is an actor."
        assert lines[3] == "(b) Bob is a director."
        assert lines[4] == "(c) Bob do/does not belong to any known entities."
        assert len(lines) == 5  # no answer cue on the question itself

    def test_choice_map_and_fallback(self, mcq_bundle):
        assert mcq_bundle.choice_map == (("a", "person-actor"), ("b", "person-director"),
                                         ("c", NONE_LABEL))
        assert mcq_bundle.fallback_label == "person-actor"

    def test_demo_blocks_prepended(self, fewnerd_small):
        schema, tset = fewnerd_small
        demos = load_demos(pkg_file("data/demos/fewnerd_demos.jsonl"))
        rec = ScoreRecord(sample_id="s0#0", sentence_id="s0", unit=Unit.entity(1, 2),
                          probs={"person-actor": 0.5, NONE_LABEL: 0.5})
        cands = top_candidates(rec, RouterConfig(top_n=3), schema)
        bundle = render_mcq(rec, ("The", "Bob", "show"), cands, demos, tset, cot=True)
        text = bundle.text()
        blocks = text.split("\n\n")
        assert len(blocks) == 5  # 4 demos then the question
        for block in blocks[:4]:
            assert block.startswith("Instruct: ")
            assert "\nAnalysis: " in block
            assert block.splitlines()[-1].startswith("Answer: (")
        assert blocks[4] == bundle.question

    def test_cot_off_drops_analysis(self, fewnerd_small):
        schema, tset = fewnerd_small
        demos = load_demos(pkg_file("data/demos/fewnerd_demos.jsonl"))
        rec = ScoreRecord(sample_id="s0#0", sentence_id="s0", unit=Unit.entity(1, 2),
                          probs={"person-actor": 0.5, NONE_LABEL: 0.5})
        cands = top_candidates(rec, RouterConfig(top_n=3), schema)
        bundle = render_mcq(rec, ("The", "Bob", "show"), cands, demos, tset, cot=False)
        assert "Analysis:" not in bundle.text()
        assert "Answer: (" in bundle.text()  # demo answers survive

    def test_shuffle_keeps_fallback(self, fewnerd_small):
        schema, tset = fewnerd_small
        rec = ScoreRecord(sample_id="s0#0", sentence_id="s0", unit=Unit.entity(1, 2),
                          probs={"person-actor": 0.4, "person-director": 0.35, NONE_LABEL: 0.25})
        cands = top_candidates(rec, RouterConfig(top_n=3), schema)
        for seed in range(5):
            bundle = render_mcq(rec, ("The", "Bob", "show"), cands, [], tset,
                                cot=True, shuffle_seed=seed)
            assert bundle.fallback_label == "person-actor"
            assert sorted(lab for _, lab in bundle.choice_map) == sorted(cands.candidates)

    def test_re_instruct_line(self):
        schema = LabelSchema(task=Task.RE, labels=("per:employee_of", "org:founded_by"))
        tset = load_templates(pkg_file("data/templates/tacrev.tsv"), schema)
        unit = Unit.relation(Span(0, 1), Span(3, 4))
        rec = ScoreRecord(sample_id="r0#0", sentence_id="r0", unit=unit,
                          probs={"per:employee_of": 0.5, NONE_LABEL: 0.5})
        cands = top_candidates(rec, RouterConfig(top_n=3), schema)
        bundle = render_mcq(rec, ("Flint", "works", "at", "HSBC"), cands, [], tset, cot=True)
        assert bundle.question.splitlines()[0] == (
            "Instruct: Read the sentence and determine the relation between "
            "Flint and HSBC quoted by <t>.")
        assert "<t> Flint <t>" in bundle.question
        assert "<t> HSBC <t>" in bundle.question

    def test_ed_instruct_line(self):
        schema = LabelSchema(task=Task.ED, labels=("Transaction.Transfer-Money",))
        tset = load_templates(pkg_file("data/templates/ace05.tsv"), schema)
        rec = ScoreRecord(sample_id="e0#0", sentence_id="e0", unit=Unit.trigger_word(1, 2),
                          probs={"Transaction.Transfer-Money": 0.5, NONE_LABEL: 0.5})
        cands = top_candidates(rec, RouterConfig(top_n=3), schema)
        bundle = render_mcq(rec, ("the", "loan", "deal"), cands, [], tset, cot=True)
        assert bundle.question.splitlines()[0] == (
            "Instruct: Read following sentences and identify what event is "
            "triggered by the word loan quoted by <t>.")

    def test_token_estimate_recorded(self, mcq_bundle):
        assert mcq_bundle.meta["token_estimate"] == estimate_tokens(mcq_bundle.text())


class TestDemos:
    @pytest.mark.parametrize("stem,n", [("fewnerd_demos", 4), ("tacrev_demos", 4),
                                        ("ace05_demos", 4)])
    def test_bundled_fixtures_load(self, stem, n):
        demos = load_demos(pkg_file(f"data/demos/{stem}.jsonl"))
        assert len(demos) == n
        for d in demos:
            assert d.instruct.startswith("Read")
            assert "<t>" in d.sentence
            assert 0 <= d.answer_index < len(d.choices)
            assert d.analysis

    def test_render_block_shape(self):
        demo = DemoExample(instruct="Read this.", sentence="a <t> b <t> c",
                           choices=("first", "second"), analysis="because",
                           answer_index=1)
        with_cot = demo.render(cot=True)
        assert with_cot == ("Instruct: Read this.\nSentence: a <t> b <t> c\n"
                            "(a) first\n(b) second\nAnalysis: because\nAnswer: (b)")
        without = demo.render(cot=False)
        assert "Analysis" not in without
        assert without.endswith("Answer: (b)")


class TestParseMcq:
    @pytest.fixture
    def bundle(self, fewnerd_small):
        schema, tset = fewnerd_small
        rec = ScoreRecord(sample_id="s0#0", sentence_id="s0", unit=Unit.entity(1, 2),
                          probs={"person-actor": 0.4, "person-director": 0.35,
                                 NONE_LABEL: 0.25})
        cands = top_candidates(rec, RouterConfig(tau=0.6, top_n=2), schema)
        return render_mcq(rec, ("The", "Bob", "show", "."), cands, [], tset, cot=True)

    def test_canned_corpus(self, bundle):
        corpus = json.loads((DATA / "parse_corpus.json").read_text())
        for case in corpus["cases"]:
            label, status = parse_mcq_answer(case["text"], bundle)
            assert label == case["label"], case["name"]
            assert status.value == case["status"], case["name"]

    def test_every_letter_round_trips(self, fewnerd_small):
        schema, tset = fewnerd_small
        many = LabelSchema(task=Task.NER, labels=tuple(f"type-{i:02d}" for i in range(30)))
        tmpl = {f"type-{i:02d}": "{ent} is type " + str(i) + "." for i in range(30)}
        from ftrerank.prompting import TemplateSet

        tset30 = TemplateSet(schema=many, choice_templates=tmpl,
                             none_template="{ent} is nothing.")
        rec = ScoreRecord(sample_id="s0#0", sentence_id="s0", unit=Unit.entity(0, 1),
                          probs={lab: 1.0 / 30 for lab in many.labels})
        cands = top_candidates(rec, RouterConfig(top_n=30), many)
        bundle = render_mcq(rec, ("Bob",), cands, [], tset30, cot=False)
        for letter, label in bundle.choice_map:
            got, status = parse_mcq_answer(f"Answer: ({letter})", bundle)
            assert got == label
            assert status is ParseStatus.PARSED


class TestIcl:
    @pytest.fixture
    def ner_tset(self, fewnerd_small):
        return fewnerd_small[1]

    def test_ner_prompt_shape(self, ner_tset):
        demo_tokens = ("Alice", "acted", "well")
        demo_gold = [GoldAnnotation(unit=Unit.entity(0, 1), label="person-actor")]
        bundle = render_icl(("Bob", "directed", "it"), [(demo_tokens, demo_gold)],
                            ner_tset, "I1")
        assert bundle.instruction.startswith("Identify the entities")
        assert bundle.demo_texts == (
            "Sentence: Alice acted well\nEntities: (person-actor, Alice)",)
        assert bundle.question == "Sentence: Bob directed it\nEntities:"

    def test_empty_demo_uses_sentinel(self, ner_tset):
        bundle = render_icl(("Bob",), [(("Nothing", "here"), [])], ner_tset, "I1")
        assert bundle.demo_texts[0].endswith("Entities: No entities found.")

    def test_re_prompt_needs_unit(self):
        schema = LabelSchema(task=Task.RE, labels=("per:employee_of",))
        tset = load_templates(pkg_file("data/templates/tacrev.tsv"), schema)
        with pytest.raises(DataError):
            render_icl(("a", "b"), [], tset, "I1", unit=None)

    def test_re_prompt_shape(self):
        schema = LabelSchema(task=Task.RE, labels=("per:employee_of",))
        tset = load_templates(pkg_file("data/templates/tacrev.tsv"), schema)
        unit = Unit.relation(Span(0, 1), Span(3, 4))
        demo_unit = Unit.relation(Span(0, 1), Span(2, 3))
        demo = (("Alice", "joined", "IBM"),
                [GoldAnnotation(unit=demo_unit, label="per:employee_of")])
        bundle = render_icl(("Flint", "works", "at", "HSBC"), [demo], tset, "I1", unit=unit)
        assert bundle.demo_texts[0] == (
            "Sentence: <t> Alice <t> joined <t> IBM <t>\n"
            "Relation between Alice and IBM: per:employee_of")
        assert bundle.question == (
            "Sentence: <t> Flint <t> works at <t> HSBC <t>\n"
            "Relation between Flint and HSBC:")

    def test_parse_ner_tuples(self, fewnerd_small):
        schema, _ = fewnerd_small
        tokens = ("Bob", "met", "Alice", "in", "Paris")
        reply = "Entities: (person-actor, Bob), (location-GPE, Paris)"
        out = parse_icl_answer(reply, schema, tokens)
        assert out.items == [("Bob", "person-actor"), ("Paris", "location-GPE")]
        assert out.units == [(Unit.entity(0, 1), "person-actor"),
                             (Unit.entity(4, 5), "location-GPE")]

    def test_parse_drops_unknown_labels(self, fewnerd_small):
        schema, _ = fewnerd_small
        out = parse_icl_answer("Entities: (martian, Bob)", schema, ("Bob",))
        assert out.items == []
        assert out.unknown_dropped == 1

    def test_parse_sentinel(self, fewnerd_small):
        schema, _ = fewnerd_small
        out = parse_icl_answer("Entities: No entities found.", schema, ("Bob",))
        assert out.items == []
        assert out.unknown_dropped == 0

    def test_parse_takes_last_header(self, fewnerd_small):
        schema, _ = fewnerd_small
        reply = ("Sentence: Alice acted\nEntities: (person-actor, Alice)\n\n"
                 "Sentence: Bob directed\nEntities: (person-director, Bob)")
        out = parse_icl_answer(reply, schema, ("Bob", "directed"))
        assert out.items == [("Bob", "person-director")]

    def test_parse_unmatched_surface(self, fewnerd_small):
        schema, _ = fewnerd_small
        out = parse_icl_answer("Entities: (person-actor, Zelda)", schema, ("Bob",))
        assert out.items == [("Zelda", "person-actor")]
        assert out.units == []
        assert out.unmatched == 1

    def test_parse_re_exact_and_none(self):
        schema = LabelSchema(task=Task.RE, labels=("per:employee_of", "org:founded_by"))
        out = parse_icl_answer("Relation between a and b: per:employee_of", schema)
        assert out.items == [("", "per:employee_of")]
        out = parse_icl_answer("Relation between a and b: no_relation", schema)
        assert out.items == [("", NONE_LABEL)]

    def test_parse_re_contained(self):
        schema = LabelSchema(task=Task.RE, labels=("per:employee_of", "org:founded_by"))
        out = parse_icl_answer(
            "The relation here is per:employee_of I believe.\n"
            "Answer: the label per:employee_of fits", schema)
        assert out.items == [("", "per:employee_of")]

    def test_parse_eae_guarded(self):
        eae = LabelSchema(task=Task.EAE, labels=("Agent",))
        with pytest.raises(WrongTask):
            parse_icl_answer("anything", eae)
