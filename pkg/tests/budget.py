"""Cost baseline: send every sample to the reranker with every label as a choice.

The routed pipeline should land far below this. Run directly for a comparison
table on a synthetic corpus:

    python3 tests/budget.py
"""

from __future__ import annotations

from ftrerank.pipeline import RunConfig, all_label_candidates
from ftrerank.prompting import render_mcq


def all_labels_baseline_tokens(table, gold, tset, demos, cfg: RunConfig) -> int:
    """Prompt-token estimate for the no-routing, no-label-filter strategy."""
    by_id = gold.by_id()
    demos_used = tuple(demos[: cfg.demo_count])
    total = 0
    for _, rec in sorted(table.records.items()):
        cands = all_label_candidates(rec, table.schema)
        sent = by_id[rec.sentence_id]
        bundle = render_mcq(rec, sent.tokens, cands, demos_used, tset,
                            cot=cfg.ablations.effective_cot)
        total += bundle.meta["token_estimate"]
    return total


def main() -> None:
    import importlib.resources as ir

    from fixtures import make_routing_fixture
    from ftrerank.filtering import RouterConfig
    from ftrerank.llm import CostLedger, LLMClient, mock_llm
    from ftrerank.pipeline import run_filter_then_rerank
    from ftrerank.prompting import load_demos, load_templates
    from ftrerank.schema import LabelSchema, Task

    labels = ("person-actor", "person-director", "art-writtenart",
              "organization-company", "building-theater", "location-GPE")
    schema = LabelSchema(task=Task.NER, labels=labels)
    table, gold, gold_map = make_routing_fixture(
        schema, n_easy=970, n_wrong=30, wrong_confs=(0.45, 0.5, 0.55, 0.58))
    tset = load_templates(str(ir.files("ftrerank") / "data/templates/fewnerd.tsv"), schema)
    demos = load_demos(str(ir.files("ftrerank") / "data/demos/fewnerd_demos.jsonl"))
    cfg = RunConfig(router=RouterConfig(tau=0.6, top_n=3))
    client = LLMClient(mock_llm("oracle", gold=gold_map), ledger=CostLedger())
    _, report, ledger = run_filter_then_rerank(table, gold, tset, demos, client, cfg)
    baseline = all_labels_baseline_tokens(table, gold, tset, demos, cfg)

    n = len(table.records)
    print(f"samples\t{n}")
    print(f"routed\t{report.rerank_rows['rerank.n']}\t({report.rerank_rows['rerank.ratio']:.1%})")
    print(f"llm calls\t{ledger.total_calls}")
    print(f"prompt tokens, routed\t{ledger.total_prompt_tokens}")
    print(f"prompt tokens, all-samples all-labels\t{baseline}")
    print(f"cost ratio\t{ledger.total_prompt_tokens / baseline:.3f}")


if __name__ == "__main__":
    main()
