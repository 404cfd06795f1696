"""Inference adapter: local encoder classifier -> prediction JSONL.

Loads an already fine-tuned binary sequence classifier (local path or hub
id), scores every example in a corpus JSONL file, and writes one record per
example in the shared prediction schema:

    {"model_id": str, "example_id": str, "p_sarcastic": float|null,
     "status": "ok"|"refused"}

The sarcastic-class probability comes from a softmax over the classifier
logits, so the two class probabilities sum to one. Malformed corpus rows
are skipped with a warning and recorded as refusals. Inference-only and
deterministic: rerunning with the same model and corpus reproduces the
output byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import torch
from transformers import AutoModelForSequenceClassification, AutoTokenizer


@dataclass(frozen=True)
class AdapterConfig:
    model_ref: str
    corpus_path: str
    output_path: str
    model_id: str
    batch_size: int = 16
    device: str = "cpu"
    text_field: str = "text_target"
    positive_index: int = 1
    max_length: int = 256

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.text_field not in ("text_target", "text_source"):
            raise ValueError(f"text_field must be text_target or text_source, got {self.text_field!r}")
        if self.positive_index not in (0, 1):
            raise ValueError(f"positive_index must be 0 or 1, got {self.positive_index}")


@dataclass(frozen=True)
class InferenceResult:
    records: tuple[dict, ...]
    class_probs: tuple[tuple[float, float], ...]  # (p_negative, p_positive) per ok row
    skipped: tuple[str, ...]  # example ids recorded as refused


def read_corpus_rows(path: str | Path, text_field: str) -> list[tuple[str, str | None]]:
    """(example_id, text) pairs; text is None for malformed rows.

    Rows missing the preferred text field fall back to text_source; rows
    with no usable id get a synthesized line-based one.
    """
    rows: list[tuple[str, str | None]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("not an object")
            except ValueError:
                print(f"warning: {path}:{lineno}: malformed row, recording refusal",
                      file=sys.stderr)
                rows.append((f"line-{lineno}", None))
                continue
            example_id = obj.get("id")
            if not isinstance(example_id, str) or not example_id:
                example_id = f"line-{lineno}"
            text = obj.get(text_field) or obj.get("text_source")
            if not isinstance(text, str) or not text:
                print(f"warning: {path}:{lineno}: no usable text, recording refusal",
                      file=sys.stderr)
                rows.append((example_id, None))
                continue
            rows.append((example_id, text))
    return rows


def load_classifier(model_ref: str, device: str):
    tokenizer = AutoTokenizer.from_pretrained(model_ref)
    model = AutoModelForSequenceClassification.from_pretrained(model_ref)
    if model.config.num_labels != 2:
        raise ValueError(
            f"expected a binary classifier, got {model.config.num_labels} labels"
        )
    model.to(device)
    model.eval()
    return tokenizer, model


def infer(config: AdapterConfig) -> InferenceResult:
    """Score the corpus and write the prediction JSONL."""
    tokenizer, model = load_classifier(config.model_ref, config.device)
    rows = read_corpus_rows(config.corpus_path, config.text_field)

    records: list[dict] = []
    class_probs: list[tuple[float, float]] = []
    skipped: list[str] = []
    scored = [(eid, text) for eid, text in rows if text is not None]

    probs_by_id: dict[str, tuple[float, float]] = {}
    for start in range(0, len(scored), config.batch_size):
        batch = scored[start:start + config.batch_size]
        encoded = tokenizer(
            [text for _, text in batch],
            padding=True,
            truncation=True,
            max_length=config.max_length,
            return_tensors="pt",
        ).to(config.device)
        with torch.no_grad():
            logits = model(**encoded).logits
        probs = torch.softmax(logits.double(), dim=-1).cpu()
        for (eid, _), pair in zip(batch, probs.tolist()):
            negative = pair[1 - config.positive_index]
            positive = pair[config.positive_index]
            probs_by_id[eid] = (negative, positive)

    for eid, text in rows:
        if text is None:
            skipped.append(eid)
            records.append({
                "model_id": config.model_id, "example_id": eid,
                "p_sarcastic": None, "status": "refused",
            })
        else:
            negative, positive = probs_by_id[eid]
            class_probs.append((negative, positive))
            records.append({
                "model_id": config.model_id, "example_id": eid,
                "p_sarcastic": positive, "status": "ok",
            })

    output = Path(config.output_path)
    output.parent.mkdir(parents=True, exist_ok=True)
    with open(output, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False))
            fh.write("\n")

    return InferenceResult(
        records=tuple(records),
        class_probs=tuple(class_probs),
        skipped=tuple(skipped),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="local-infer",
        description="Emit sarcastic-class probabilities from a local encoder classifier.",
    )
    parser.add_argument("--model", required=True, help="model path or hub id")
    parser.add_argument("--corpus", required=True, help="corpus JSONL file")
    parser.add_argument("--out", required=True, help="prediction JSONL output path")
    parser.add_argument("--model-id", required=True, help="model id written into records")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--device", default="cpu", help="torch device hint")
    parser.add_argument("--text-field", choices=("text_target", "text_source"),
                        default="text_target")
    parser.add_argument("--positive-index", type=int, default=1,
                        help="logit index of the sarcastic class")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = AdapterConfig(
            model_ref=args.model,
            corpus_path=args.corpus,
            output_path=args.out,
            model_id=args.model_id,
            batch_size=args.batch_size,
            device=args.device,
            text_field=args.text_field,
            positive_index=args.positive_index,
        )
        result = infer(config)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    n_ok = sum(1 for r in result.records if r["status"] == "ok")
    print(f"wrote {len(result.records)} records ({n_ok} ok, {len(result.skipped)} refused) "
          f"to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
