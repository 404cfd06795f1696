import json

import pytest
import torch
from transformers import BertConfig, BertForSequenceClassification, BertTokenizerFast


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A small randomly initialized binary BERT classifier, saved locally."""
    root = tmp_path_factory.mktemp("tiny-model")
    vocab = (
        ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
        + [chr(c) for c in range(ord("a"), ord("z") + 1)]
        + [str(d) for d in range(10)]
    )
    vocab_file = root / "vocab.txt"
    vocab_file.write_text("\n".join(vocab), encoding="utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file), do_lower_case=True)

    torch.manual_seed(1234)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
        num_labels=2,
    )
    model = BertForSequenceClassification(config)
    model_dir = root / "model"
    model.save_pretrained(model_dir)
    tokenizer.save_pretrained(model_dir)
    return str(model_dir)


@pytest.fixture
def fixture_corpus(tmp_path):
    """Ten corpus rows in the shared corpus JSONL schema."""
    path = tmp_path / "corpus.jsonl"
    rows = []
    for i in range(10):
        rows.append({
            "id": f"e{i}",
            "text_source": f"original text number {i}",
            "text_target": f"prevedeno besedilo {i}",
            "label": i % 2,
            "origin_split": "orig_train",
            "split": "test",
        })
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return path
