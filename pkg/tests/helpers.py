"""Shared builders for corpus and source-file fixtures."""

import csv

from sarcens.corpus import Corpus, Example


def build_corpus(n_sarcastic, n_non_sarcastic, origin="orig_train", split=None, prefix=""):
    examples = []
    for i in range(n_sarcastic):
        examples.append(
            Example(
                id=f"{prefix}s{i}",
                text_source=f"yeah sure, great idea {i} 🙃",
                label=1,
                origin_split=origin,
                split=split,
            )
        )
    for i in range(n_non_sarcastic):
        examples.append(
            Example(
                id=f"{prefix}n{i}",
                text_source=f"the meeting is at {i} o'clock",
                label=0,
                origin_split=origin,
                split=split,
            )
        )
    return Corpus(tuple(examples), {"source": "synthetic", "seed": None})


def write_source_csv(path, rows):
    """rows: iterable of (text, sarcastic) pairs."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["text", "sarcastic"])
        for text, sarcastic in rows:
            writer.writerow([text, sarcastic])
    return path


def write_official_shaped_files(tmp_path):
    """Synthetic files with the official split class counts."""
    train_rows = [(f"train tweet {i}", 1) for i in range(867)]
    train_rows += [(f"train tweet {i}", 0) for i in range(867, 867 + 2601)]
    test_rows = [(f"test tweet {i}", 1) for i in range(200)]
    test_rows += [(f"test tweet {i}", 0) for i in range(200, 200 + 1200)]
    train_path = write_source_csv(tmp_path / "train.csv", train_rows)
    test_path = write_source_csv(tmp_path / "test.csv", test_rows)
    return train_path, test_path
