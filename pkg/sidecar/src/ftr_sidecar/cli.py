"""Command line front end.

    sidecar score --schema schema.json --data test.jsonl \
        --model hash-random:0 --out scores.jsonl
    sidecar embed --data test.jsonl --out embeddings.tsv --dim 64

Exit codes: 0 success, 2 bad usage, 3 bad input data, 4 model or device
problem.
"""

from __future__ import annotations

import argparse
import sys

from .data import load_schema
from .errors import BadRecord, DeviceError, ModelLoadError
from .jobs import SidecarJob, embed_dataset, score_dataset


def cmd_score(args: argparse.Namespace) -> int:
    task, labels = load_schema(args.schema)
    job = SidecarJob(task=task, data_path=args.data, model_id=args.model,
                     out_path=args.out, batch_size=args.batch_size,
                     device=args.device)
    n = score_dataset(job, labels, max_span_len=args.max_span_len)
    print(f"{n} score records -> {args.out}")
    return 0


def cmd_embed(args: argparse.Namespace) -> int:
    job = SidecarJob(task="NER", data_path=args.data, model_id="frozen-trigram",
                     out_path=args.out, batch_size=args.batch_size,
                     device=args.device)
    n = embed_dataset(job, dim=args.dim)
    print(f"{n} embeddings (dim {args.dim}) -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sidecar")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="write per-unit label probabilities")
    p.add_argument("--schema", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True,
                   help="hash-random:<seed>, uniform, or a checkpoint path")
    p.add_argument("--out", required=True)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--device", default="cpu")
    p.add_argument("--max-span-len", type=int, default=3)
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("embed", help="write one sentence embedding per line")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--device", default="cpu")
    p.set_defaults(fn=cmd_embed)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ModelLoadError, DeviceError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 4
    except (BadRecord, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
