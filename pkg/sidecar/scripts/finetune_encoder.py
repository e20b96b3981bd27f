"""Reference recipe: fine-tune a small pretrained encoder as the filter.

Produces a checkpoint whose inference pass would emit the same score wire
format the built-in families do. This script is reference material, not part
of the tested surface: it needs torch + transformers and a base model on
disk or a reachable hub, none of which the test environment provides.

    python3 scripts/finetune_encoder.py \
        --base-model roberta-base --data train.jsonl --schema schema.json \
        --epochs 20 --lr 2e-5 --batch-size 16 --out ckpt/

Span scoring at inference: enumerate candidate spans exactly like
ftr_sidecar.propose, feed [CLS] sentence [SEP] span [SEP], softmax the label
head (abstain label included as a regular class).
"""

from __future__ import annotations

import argparse
import json
import sys


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--base-model", required=True)
    p.add_argument("--data", required=True, help="k-shot train split, unified JSONL")
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=2e-5)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--max-span-len", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        import torch
        from torch.utils.data import DataLoader
        from transformers import AutoModel, AutoTokenizer
    except ImportError as exc:
        print(f"this recipe needs torch and transformers: {exc}", file=sys.stderr)
        return 4

    from ftr_sidecar.data import load_schema, load_sentences
    from ftr_sidecar.propose import propose_units

    task, labels = load_schema(args.schema)
    sentences = load_sentences(args.data)
    classes = list(labels) + ["None"]

    torch.manual_seed(args.seed)
    tokenizer = AutoTokenizer.from_pretrained(args.base_model)
    encoder = AutoModel.from_pretrained(args.base_model)
    head = torch.nn.Linear(encoder.config.hidden_size, len(classes))

    def encode(sent, unit):
        span = " ".join(sent.tokens[unit["start"]:unit["end"]])
        return tokenizer(sent.text(), span, truncation=True,
                         return_tensors="pt", padding="max_length", max_length=128)

    examples = []
    for sent in sentences:
        gold = {(a.get("start"), a.get("end")): a["label"] for a in sent.annotations}
        for unit in propose_units(sent, task, args.max_span_len):
            label = gold.get((unit.get("start"), unit.get("end")), "None")
            examples.append((sent, unit, classes.index(label)))

    opt = torch.optim.AdamW(list(encoder.parameters()) + list(head.parameters()),
                            lr=args.lr)
    loss_fn = torch.nn.CrossEntropyLoss()
    loader = DataLoader(examples, batch_size=args.batch_size, shuffle=True,
                        collate_fn=lambda b: b)
    encoder.train()
    for epoch in range(args.epochs):
        total = 0.0
        for batch in loader:
            opt.zero_grad()
            losses = []
            for sent, unit, target in batch:
                enc = encode(sent, unit)
                pooled = encoder(**enc).last_hidden_state[:, 0]
                logits = head(pooled)
                losses.append(loss_fn(logits, torch.tensor([target])))
            loss = torch.stack(losses).mean()
            loss.backward()
            opt.step()
            total += float(loss)
        print(f"epoch {epoch + 1}/{args.epochs} loss {total / max(1, len(loader)):.4f}")

    encoder.save_pretrained(args.out)
    tokenizer.save_pretrained(args.out)
    torch.save(head.state_dict(), f"{args.out}/label_head.pt")
    with open(f"{args.out}/classes.json", "w", encoding="utf-8") as fh:
        json.dump(classes, fh)
    print(f"checkpoint -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
