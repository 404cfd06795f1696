"""Load, merge, balance, and split the labeled sarcasm corpus.

All sampling is driven by an explicitly seeded Mersenne Twister
(``random.Random``) so that every derived corpus is reproducible from the
seed recorded in its metadata. Text is never normalized: emojis, links,
capitalization, and newlines pass through byte-for-byte.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

ORIGIN_SPLITS = ("orig_train", "orig_test")
SPLITS = ("train", "val", "test")

SARCASTIC = 1
NOT_SARCASTIC = 0

# Serialized example keys, in exact output order.
_EXAMPLE_KEYS = ("id", "text_source", "text_target", "label", "origin_split", "split")


@dataclass(frozen=True)
class Example:
    """One labeled text with its provenance and split assignment."""

    id: str
    text_source: str
    label: int
    origin_split: str
    text_target: str | None = None
    split: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("example id must be non-empty")
        if not self.text_source:
            raise ValueError(f"example {self.id!r}: text_source must be non-empty")
        if self.label not in (0, 1):
            raise ValueError(f"example {self.id!r}: label must be 0 or 1, got {self.label!r}")
        if self.origin_split not in ORIGIN_SPLITS:
            raise ValueError(
                f"example {self.id!r}: origin_split must be one of {ORIGIN_SPLITS}, "
                f"got {self.origin_split!r}"
            )
        if self.split is not None and self.split not in SPLITS:
            raise ValueError(
                f"example {self.id!r}: split must be one of {SPLITS} or None, got {self.split!r}"
            )

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "text_source": self.text_source,
            "text_target": self.text_target,
            "label": self.label,
            "origin_split": self.origin_split,
            "split": self.split,
        }

    @classmethod
    def from_record(cls, record: dict) -> "Example":
        keys = set(record)
        if keys != set(_EXAMPLE_KEYS):
            missing = set(_EXAMPLE_KEYS) - keys
            extra = keys - set(_EXAMPLE_KEYS)
            parts = []
            if missing:
                parts.append(f"missing keys {sorted(missing)}")
            if extra:
                parts.append(f"unexpected keys {sorted(extra)}")
            raise ValueError("bad example record: " + ", ".join(parts))
        return cls(
            id=record["id"],
            text_source=record["text_source"],
            text_target=record["text_target"],
            label=record["label"],
            origin_split=record["origin_split"],
            split=record["split"],
        )


@dataclass(frozen=True)
class Corpus:
    """Ordered, immutable collection of examples plus provenance metadata.

    Metadata carries the source name, the creation seed (None for corpora
    loaded straight from source files), and per-class counts. Counts are
    validated against the examples at construction time.
    """

    examples: tuple[Example, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        examples = tuple(self.examples)
        object.__setattr__(self, "examples", examples)
        seen = set()
        for ex in examples:
            if ex.id in seen:
                raise ValueError(f"duplicate example id {ex.id!r}")
            seen.add(ex.id)
        counts = class_counts(examples)
        meta = dict(self.metadata)
        meta.setdefault("source", "unknown")
        meta.setdefault("seed", None)
        for key, value in (("n_sarcastic", counts[SARCASTIC]), ("n_not_sarcastic", counts[NOT_SARCASTIC])):
            if key in meta and meta[key] != value:
                raise ValueError(
                    f"metadata {key}={meta[key]} does not match recomputed count {value}"
                )
            meta[key] = value
        object.__setattr__(self, "metadata", meta)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    @property
    def n_sarcastic(self) -> int:
        return self.metadata["n_sarcastic"]

    @property
    def n_not_sarcastic(self) -> int:
        return self.metadata["n_not_sarcastic"]

    def by_id(self) -> dict[str, Example]:
        return {ex.id: ex for ex in self.examples}

    def subset(self, split: str) -> tuple[Example, ...]:
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        return tuple(ex for ex in self.examples if ex.split == split)


def class_counts(examples: Iterable[Example]) -> dict[int, int]:
    counts = {SARCASTIC: 0, NOT_SARCASTIC: 0}
    for ex in examples:
        counts[ex.label] += 1
    return counts


# ---------------------------------------------------------------------------
# Source-file loading (iSarcasmEval-style CSV / JSONL with text + sarcastic)
# ---------------------------------------------------------------------------

def _rows_from_csv(path: Path) -> Iterable[tuple[int, str, object]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return  # zero-byte file: no examples
        if "text" not in reader.fieldnames or "sarcastic" not in reader.fieldnames:
            raise ValueError(
                f"{path}: expected columns 'text' and 'sarcastic', got {reader.fieldnames}"
            )
        for row in reader:
            yield reader.line_num, row.get("text"), row.get("sarcastic")


def _rows_from_jsonl(path: Path) -> Iterable[tuple[int, str, object]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ValueError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj.get("text"), obj.get("sarcastic")


def _load_source_file(path: str | Path, origin_split: str) -> list[Example]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"source file not found: {path}")
    suffix = path.suffix.lower()
    if suffix == ".csv":
        rows = _rows_from_csv(path)
    elif suffix in (".jsonl", ".json"):
        rows = _rows_from_jsonl(path)
    else:
        raise ValueError(f"{path}: unsupported extension {suffix!r} (expected .csv or .jsonl)")

    examples = []
    for index, (lineno, text, sarcastic) in enumerate(rows):
        if text is None or text == "":
            raise ValueError(f"{path}:{lineno}: missing or empty 'text'")
        if sarcastic in (0, 1):
            label = int(sarcastic)
        elif sarcastic in ("0", "1"):
            label = int(sarcastic)
        else:
            raise ValueError(f"{path}:{lineno}: 'sarcastic' must be 0 or 1, got {sarcastic!r}")
        examples.append(
            Example(
                id=f"{origin_split}:{index}",
                text_source=text,
                label=label,
                origin_split=origin_split,
            )
        )
    return examples


def load_isarcasm(train_path: str | Path, test_path: str | Path) -> Corpus:
    """Load the official pre-split dataset files into one tagged corpus.

    Examples keep their origin split (``orig_train`` / ``orig_test``); ids
    are synthesized as ``<origin_split>:<row index>`` since the source files
    carry none.
    """
    examples = _load_source_file(train_path, "orig_train")
    examples += _load_source_file(test_path, "orig_test")
    return Corpus(tuple(examples), {"source": "isarcasm", "seed": None})


def origin_counts(corpus: Corpus) -> dict[str, dict[int, int]]:
    """Per-origin-split class counts, for load reporting."""
    out = {}
    for origin in ORIGIN_SPLITS:
        out[origin] = class_counts(ex for ex in corpus if ex.origin_split == origin)
    return out


# ---------------------------------------------------------------------------
# Balancing and splitting
# ---------------------------------------------------------------------------

def merge_and_balance(corpus: Corpus, seed: int) -> Corpus:
    """Downsample the majority class to a balanced corpus.

    Every sarcastic example is kept; an equal number of non-sarcastic
    examples is drawn uniformly without replacement with ``random.Random(seed)``.
    Input order is preserved, so an already-balanced corpus round-trips as a
    copy.
    """
    sarcastic = [ex for ex in corpus if ex.label == SARCASTIC]
    non_sarcastic = [ex for ex in corpus if ex.label == NOT_SARCASTIC]
    if not sarcastic:
        raise ValueError("cannot balance: corpus has no sarcastic examples")
    if len(non_sarcastic) < len(sarcastic):
        raise ValueError(
            f"cannot balance by downsampling: {len(non_sarcastic)} non-sarcastic < "
            f"{len(sarcastic)} sarcastic"
        )
    rng = random.Random(seed)
    keep_ids = {ex.id for ex in sarcastic}
    keep_ids.update(ex.id for ex in rng.sample(non_sarcastic, len(sarcastic)))
    kept = tuple(ex for ex in corpus if ex.id in keep_ids)
    meta = {"source": corpus.metadata.get("source", "unknown"), "seed": seed}
    return Corpus(kept, meta)


def _split_sizes(n: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    # Floor each quota; leftover examples go to train first, then val. This
    # is the hand rule that yields 1708/213/213 for 2134 x (0.8, 0.1, 0.1).
    floors = [int(n * r) for r in ratios]
    leftover = n - sum(floors)
    for i in range(leftover):
        floors[i] += 1
    return tuple(floors)


def stratified_split(corpus: Corpus, ratios: Sequence[float], seed: int) -> Corpus:
    """Assign train/val/test splits, keeping each split balanced.

    ``ratios`` is a (train, val, test) triple of positive fractions summing
    to 1. The corpus must be balanced. Each split's class counts differ by
    at most one; splits are disjoint and exhaustive; assignment is
    deterministic for a fixed seed.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3:
        raise ValueError(f"expected 3 split ratios (train, val, test), got {len(ratios)}")
    if any(r <= 0 for r in ratios):
        raise ValueError(f"split ratios must be positive, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got sum {sum(ratios)!r}")
    counts = class_counts(corpus)
    if counts[SARCASTIC] != counts[NOT_SARCASTIC]:
        raise ValueError(
            f"stratified_split requires a balanced corpus, got "
            f"{counts[SARCASTIC]} sarcastic vs {counts[NOT_SARCASTIC]} non-sarcastic"
        )

    n = len(corpus)
    sizes = _split_sizes(n, ratios)
    for name, size in zip(SPLITS, sizes):
        if size == 0:
            raise ValueError(f"split {name!r} would receive 0 examples (ratios {ratios}, n={n})")

    # Per-split class quotas: halves, with leftover single seats alternating
    # between classes in split order so per-class totals stay equal.
    quota = {split: {SARCASTIC: size // 2, NOT_SARCASTIC: size // 2}
             for split, size in zip(SPLITS, sizes)}
    next_extra = SARCASTIC
    for split, size in zip(SPLITS, sizes):
        if size % 2:
            quota[split][next_extra] += 1
            next_extra = NOT_SARCASTIC if next_extra == SARCASTIC else SARCASTIC

    rng = random.Random(seed)
    assignment: dict[str, str] = {}
    for label in (SARCASTIC, NOT_SARCASTIC):
        members = [ex.id for ex in corpus if ex.label == label]
        rng.shuffle(members)
        cursor = 0
        for split in SPLITS:
            take = quota[split][label]
            for ex_id in members[cursor:cursor + take]:
                assignment[ex_id] = split
            cursor += take

    meta = dict(corpus.metadata)
    meta["seed"] = seed
    assigned = tuple(replace(ex, split=assignment[ex.id]) for ex in corpus)
    return Corpus(assigned, meta)


# ---------------------------------------------------------------------------
# Corpus JSONL serialization
# ---------------------------------------------------------------------------

def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def save_corpus(corpus: Corpus, path: str | Path) -> Path:
    """Write corpus JSONL (one example per line) plus a metadata sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ex in corpus:
            fh.write(json.dumps(ex.to_record(), ensure_ascii=False))
            fh.write("\n")
    meta = dict(corpus.metadata)
    with open(_meta_path(path), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def load_corpus(path: str | Path) -> Corpus:
    """Reload a corpus written by :func:`save_corpus`. Order is preserved."""
    path = Path(path)
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                examples.append(Example.from_record(record))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    meta_file = _meta_path(path)
    if meta_file.exists():
        with open(meta_file, encoding="utf-8") as fh:
            meta = json.load(fh)  # stale counts fail Corpus validation
    else:
        meta = {"source": "unknown", "seed": None}
    return Corpus(tuple(examples), meta)
