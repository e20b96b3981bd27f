"""Command-line front end.

Subcommands: sample (build K-shot splits), ingest (validate a score file),
tune (pick the routing threshold on validation data), run (execute a mode and
write reports), report (rebuild report files from saved decisions), ablate
(switch matrix).

Exit codes: 0 ok, 2 bad config, 3 bad data, 4 endpoint trouble.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

from .corpus import balance_negatives, downsample_test, greedy_kshot_sample, load_dataset, save_dataset, split_train_valid
from .errors import ConfigError, DataError, EndpointError
from .filtering import RouterConfig, ScoreTable, gold_label_map, ingest_scores
from .llm import CostLedger, LLMClient, http_transport, mock_llm
from .pipeline import (
    Ablations,
    Mode,
    RunConfig,
    rebuild_reports,
    run_ablations,
    run_filter_only,
    run_filter_then_rerank,
    run_icl_baseline,
    run_slm_rerank_baseline,
    tune_on_validation,
    write_report,
)
from .prompting import load_demos, load_templates
from .retrieval import load_embeddings
from .schema import Dataset, LabelSchema, SamplerConfig, Split, Task

_ENV_RE = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


def interpolate_env(value):
    """Replace ${NAME} in every string of a JSON-shaped value."""
    if isinstance(value, str):
        def sub(match):
            name = match.group(1)
            if name not in os.environ:
                raise ConfigError(f"config references unset environment variable {name}")
            return os.environ[name]

        return _ENV_RE.sub(sub, value)
    if isinstance(value, list):
        return [interpolate_env(v) for v in value]
    if isinstance(value, dict):
        return {k: interpolate_env(v) for k, v in value.items()}
    return value


def load_config(path: str | Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return interpolate_env(raw)


def load_schema_file(path: str | Path) -> LabelSchema:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"schema file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"schema file is not valid JSON: {exc}") from None
    try:
        task = Task(raw["task"])
        labels = tuple(raw["labels"])
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"schema file needs 'task' and 'labels': {exc}") from None
    return LabelSchema(task=task, labels=labels)


def _cfg_paths(cfg: dict) -> dict:
    paths = cfg.get("paths", {})
    if not isinstance(paths, dict):
        raise ConfigError("'paths' must be an object")
    return paths


def _need_path(paths: dict, key: str) -> str:
    value = paths.get(key)
    if not value:
        raise ConfigError(f"config is missing paths.{key}")
    return value


def build_run_config(cfg: dict) -> RunConfig:
    ab = cfg.get("ablations", {})
    if not isinstance(ab, dict):
        raise ConfigError("'ablations' must be an object")
    try:
        mode = Mode(cfg.get("mode", "filter_then_rerank"))
    except ValueError:
        raise ConfigError(f"unknown mode {cfg.get('mode')!r}") from None
    router = RouterConfig(
        tau=float(cfg.get("tau", 0.5)),
        top_n=int(cfg.get("top_n", 3)),
    )
    llm = cfg.get("llm", {})
    return RunConfig(
        mode=mode,
        router=router,
        ablations=Ablations(
            cot=bool(ab.get("cot", True)),
            demo=bool(ab.get("demo", True)),
            label_filter=bool(ab.get("label_filter", True)),
            adaptive=bool(ab.get("adaptive", True)),
        ),
        demo_count=int(cfg.get("demo_count", 4)),
        demo_strategy=cfg.get("demo_strategy", "random"),
        seed=int(cfg.get("seed", 0)),
        model_id=llm.get("model", os.environ.get("LLM_MODEL", "mock")),
        variant_id=cfg.get("variant", "I1"),
        head_rule=cfg.get("head_rule", "last_token"),
        max_output_tokens=llm.get("max_output_tokens"),
    )


def build_client(cfg: dict, *, scores: ScoreTable | None = None,
                 gold: Dataset | None = None, force_oracle: bool = False) -> LLMClient:
    llm = cfg.get("llm", {})
    transport_name = "mock:oracle" if force_oracle else llm.get("transport", "http")
    cache_path = llm.get("cache")
    if transport_name == "http":
        transport = http_transport(
            endpoint=llm.get("endpoint"),
            api_key=llm.get("api_key"),
            rate_per_min=int(llm.get("rate_per_min", 20)),
        )
    elif transport_name.startswith("mock:"):
        policy = transport_name.split(":", 1)[1]
        kwargs = {}
        if policy in ("oracle", "noisy"):
            if scores is None or gold is None:
                raise ConfigError(f"mock policy {policy!r} needs scores and gold data")
            kwargs["gold"] = gold_label_map(scores, gold)
        if policy == "noisy":
            kwargs["p"] = float(llm.get("p", 1.0))
            kwargs["seed"] = int(llm.get("seed", cfg.get("seed", 0)))
        if policy == "fixed_text":
            kwargs["text"] = llm.get("text", "")
        transport = mock_llm(policy, **kwargs)
    else:
        raise ConfigError(f"unknown transport {transport_name!r}")
    return LLMClient(transport, cache_path=cache_path, ledger=CostLedger(),
                     max_parallel=int(llm.get("max_parallel", 4)))


def _config_echo(cfg: dict, run_cfg: RunConfig, tau: float | None = None) -> dict:
    echo = {
        "mode": run_cfg.mode.value,
        "tau": run_cfg.router.tau if tau is None else tau,
        "top_n": run_cfg.router.top_n,
        "ablations": json.dumps(run_cfg.ablations.to_json(), sort_keys=True),
        "demo_count": run_cfg.demo_count,
        "demo_strategy": run_cfg.demo_strategy,
        "seed": run_cfg.seed,
        "model_id": run_cfg.model_id,
        "ratio_basis": "samples",
    }
    return echo


def cmd_sample(args: argparse.Namespace) -> int:
    schema = load_schema_file(args.schema)
    full = load_dataset(args.data, schema)
    scfg = SamplerConfig(
        k=args.k, seed=args.seed, negative_ratio=args.negative_ratio,
        valid_fraction=args.valid_fraction,
    )
    sampled = greedy_kshot_sample(full, scfg)
    sampled = balance_negatives(sampled, full, scfg)
    train, valid = split_train_valid(sampled, scfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(train, out / "train.jsonl")
    save_dataset(valid, out / "valid.jsonl")
    print(f"train: {len(train.sentences)} sentences, valid: {len(valid.sentences)} sentences")
    if args.test:
        full_test = load_dataset(args.test, schema, split_tag=Split.TEST)
        test = downsample_test(full_test, args.test_target, args.seed)
        save_dataset(test, out / "test.jsonl")
        print(f"test: {len(test.sentences)} sentences (downsampled from {len(full_test.sentences)})")
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    schema = load_schema_file(args.schema)
    table = ingest_scores(args.scores, schema, provenance=args.provenance)
    line = f"ok: {len(table)} score records, task {schema.task.value}"
    if args.data:
        gold = load_dataset(args.data, schema)
        by_id = gold.by_id()
        missing = [r.sentence_id for r in table.records.values() if r.sentence_id not in by_id]
        if missing:
            raise DataError(f"{len(missing)} score records reference unknown sentences, first: {missing[0]!r}")
        line += f", covers {len({r.sentence_id for r in table.records.values()})} sentences"
    print(line)
    return 0


def _load_run_inputs(cfg: dict, run_cfg: RunConfig):
    paths = _cfg_paths(cfg)
    schema = load_schema_file(_need_path(paths, "schema"))
    gold = load_dataset(_need_path(paths, "test"), schema, split_tag=Split.TEST)
    return paths, schema, gold


def cmd_tune(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    run_cfg = build_run_config(cfg)
    paths = _cfg_paths(cfg)
    schema = load_schema_file(_need_path(paths, "schema"))
    valid_gold = load_dataset(_need_path(paths, "valid"), schema, split_tag=Split.VALID)
    valid_scores = ingest_scores(_need_path(paths, "valid_scores"), schema)
    tset = load_templates(_need_path(paths, "templates"), schema)
    demos = load_demos(_need_path(paths, "demos")) if paths.get("demos") else []
    client = build_client(cfg, scores=valid_scores, gold=valid_gold, force_oracle=args.oracle)
    tau = tune_on_validation(valid_scores, valid_gold, tset, demos, client, run_cfg)
    print(f"tau\t{tau}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump({"tau": tau}, fh)
            fh.write("\n")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    run_cfg = build_run_config(cfg)
    paths, schema, gold = _load_run_inputs(cfg, run_cfg)
    out_dir = _need_path(paths, "out_dir")
    if run_cfg.mode is Mode.FILTER_ONLY:
        scores = ingest_scores(_need_path(paths, "scores"), schema)
        preds, report, ledger = run_filter_only(scores, gold, run_cfg)
        write_report(out_dir, report, ledger, _config_echo(cfg, run_cfg), predictions=preds)
    elif run_cfg.mode is Mode.FILTER_THEN_RERANK:
        scores = ingest_scores(_need_path(paths, "scores"), schema)
        tset = load_templates(_need_path(paths, "templates"), schema)
        demos = load_demos(_need_path(paths, "demos")) if paths.get("demos") else []
        client = build_client(cfg, scores=scores, gold=gold)
        decisions, report, ledger = run_filter_then_rerank(scores, gold, tset, demos, client, run_cfg)
        write_report(out_dir, report, ledger, _config_echo(cfg, run_cfg), decisions=decisions)
    elif run_cfg.mode is Mode.SLM_RERANK_BASELINE:
        scores = ingest_scores(_need_path(paths, "scores"), schema)
        reranker = ingest_scores(_need_path(paths, "reranker_scores"), schema)
        decisions, report, ledger = run_slm_rerank_baseline(scores, reranker, gold, run_cfg)
        write_report(out_dir, report, ledger, _config_echo(cfg, run_cfg), decisions=decisions)
    else:  # icl_baseline
        pool = load_dataset(_need_path(paths, "train"), schema, split_tag=Split.TRAIN)
        tset = load_templates(_need_path(paths, "templates"), schema)
        emb = load_embeddings(paths["embeddings"]) if paths.get("embeddings") else None
        client = build_client(cfg)
        preds, report, ledger = run_icl_baseline(gold, pool, tset, client, run_cfg, emb=emb)
        write_report(out_dir, report, ledger, _config_echo(cfg, run_cfg), predictions=preds)
    print(f"f1\t{report.f1:.6f}")
    print(f"out\t{out_dir}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    paths = _cfg_paths(cfg)
    schema = load_schema_file(_need_path(paths, "schema"))
    gold = load_dataset(_need_path(paths, "test"), schema, split_tag=Split.TEST)
    scores = ingest_scores(_need_path(paths, "scores"), schema)
    report = rebuild_reports(_need_path(paths, "out_dir"), scores, gold)
    print(f"f1\t{report.f1:.6f}")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    run_cfg = build_run_config(cfg)
    paths, schema, gold = _load_run_inputs(cfg, run_cfg)
    scores = ingest_scores(_need_path(paths, "scores"), schema)
    tset = load_templates(_need_path(paths, "templates"), schema)
    demos = load_demos(_need_path(paths, "demos")) if paths.get("demos") else []

    def make_client() -> LLMClient:
        return build_client(cfg, scores=scores, gold=gold)

    rows = run_ablations(scores, gold, tset, demos, make_client, run_cfg)
    out_dir = Path(_need_path(paths, "out_dir"))
    out_dir.mkdir(parents=True, exist_ok=True)
    header = "name\tf1\trerank_ratio\tllm_calls\tprompt_tokens"
    lines = [header]
    for row in rows:
        lines.append(
            f"{row['name']}\t{row['f1']:.6f}\t{row['rerank_ratio']:.6f}"
            f"\t{row['llm_calls']}\t{row['prompt_tokens']}"
        )
    text = "\n".join(lines) + "\n"
    with open(out_dir / "ablations.tsv", "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ftrerank", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="build K-shot train/valid splits from a full dataset")
    p.add_argument("--schema", required=True)
    p.add_argument("--data", required=True, help="full training split, one sentence per line")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--negative-ratio", type=float, default=1.0)
    p.add_argument("--valid-fraction", type=float, default=0.10)
    p.add_argument("--test", help="full test split to downsample")
    p.add_argument("--test-target", type=int, default=500)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("ingest", help="validate a score file against a schema")
    p.add_argument("--schema", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--data", help="optionally check sentence coverage against this dataset")
    p.add_argument("--provenance", default="")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("tune", help="pick the routing threshold on the validation split")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="write {'tau': value} JSON here")
    p.add_argument("--oracle", action="store_true",
                   help="tune against a gold-answering mock instead of the configured endpoint")
    p.set_defaults(fn=cmd_tune)

    p = sub.add_parser("run", help="execute the configured mode and write reports")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("report", help="rebuild report files from saved decisions")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("ablate", help="run the ablation switch matrix")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_ablate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except EndpointError as exc:
        print(f"endpoint error: {exc}", file=sys.stderr)
        return 4
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
