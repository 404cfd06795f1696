"""Ingest per-model prediction files and align them into a labeled matrix.

A matrix row exists only for examples where every selected model produced a
usable probability; examples any model refused are dropped from the whole
matrix (drop counts are kept per model so reports can surface them).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus

STATUSES = ("ok", "refused")

_RECORD_KEYS = {"model_id", "example_id", "p_sarcastic", "status"}


@dataclass(frozen=True)
class Prediction:
    """One base model's sarcastic-class probability (or refusal) for one example."""

    model_id: str
    example_id: str
    p_sarcastic: float | None
    status: str = "ok"

    def __post_init__(self):
        if not self.model_id:
            raise ValueError("model_id must be non-empty")
        if not self.example_id:
            raise ValueError("example_id must be non-empty")
        if self.status not in STATUSES:
            raise ValueError(f"status must be one of {STATUSES}, got {self.status!r}")
        if self.status == "ok":
            if self.p_sarcastic is None:
                raise ValueError(
                    f"({self.model_id}, {self.example_id}): status=ok requires p_sarcastic"
                )
            if not 0.0 <= self.p_sarcastic <= 1.0:
                raise ValueError(
                    f"({self.model_id}, {self.example_id}): p_sarcastic must be in [0, 1], "
                    f"got {self.p_sarcastic!r}"
                )

    def to_record(self) -> dict:
        return {
            "model_id": self.model_id,
            "example_id": self.example_id,
            "p_sarcastic": self.p_sarcastic,
            "status": self.status,
        }


def ingest(path: str | Path) -> list[Prediction]:
    """Read and validate a prediction JSONL file.

    Raises on out-of-range probabilities and duplicate (model, example)
    keys, naming the offending line.
    """
    path = Path(path)
    records: list[Prediction] = []
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict) or not _RECORD_KEYS.issubset(obj):
                raise ValueError(
                    f"{path}:{lineno}: expected keys {sorted(_RECORD_KEYS)}, "
                    f"got {sorted(obj) if isinstance(obj, dict) else type(obj).__name__}"
                )
            try:
                pred = Prediction(
                    model_id=obj["model_id"],
                    example_id=obj["example_id"],
                    p_sarcastic=obj["p_sarcastic"],
                    status=obj["status"],
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            key = (pred.model_id, pred.example_id)
            if key in seen:
                raise ValueError(f"{path}:{lineno}: duplicate prediction for {key}")
            seen.add(key)
            records.append(pred)
    return records


def save_predictions(records: Iterable[Prediction], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_record(), ensure_ascii=False))
            fh.write("\n")
    return path


def status_counts(records: Iterable[Prediction]) -> dict[str, int]:
    counts = {"ok": 0, "refused": 0}
    for rec in records:
        counts[rec.status] += 1
    return counts


@dataclass(frozen=True)
class PredictionMatrix:
    """Aligned examples x models probability matrix with gold labels.

    Rows follow ``example_ids`` and columns ``model_ids``; every cell came
    from a status=ok prediction.
    """

    model_ids: tuple[str, ...]
    example_ids: tuple[str, ...]
    probs: np.ndarray  # N x M float64 in [0, 1]
    labels: np.ndarray  # N ints in {0, 1}

    def __post_init__(self):
        model_ids = tuple(self.model_ids)
        example_ids = tuple(self.example_ids)
        probs = np.asarray(self.probs, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if len(set(model_ids)) != len(model_ids):
            raise ValueError("model_ids must be distinct")
        if len(set(example_ids)) != len(example_ids):
            raise ValueError("example_ids must be distinct")
        if probs.shape != (len(example_ids), len(model_ids)):
            raise ValueError(
                f"probs shape {probs.shape} does not match "
                f"{len(example_ids)} examples x {len(model_ids)} models"
            )
        if probs.size and (probs.min() < 0.0 or probs.max() > 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        if labels.shape != (len(example_ids),):
            raise ValueError(f"labels shape {labels.shape} does not match example count")
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        probs.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "model_ids", model_ids)
        object.__setattr__(self, "example_ids", example_ids)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "labels", labels)

    @property
    def n_examples(self) -> int:
        return len(self.example_ids)

    @property
    def n_models(self) -> int:
        return len(self.model_ids)

    def column(self, model_id: str) -> np.ndarray:
        return self.probs[:, self.model_ids.index(model_id)]

    def select_models(self, model_ids: Sequence[str]) -> "PredictionMatrix":
        missing = [m for m in model_ids if m not in self.model_ids]
        if missing:
            raise ValueError(f"models not in matrix: {', '.join(missing)}")
        indices = [self.model_ids.index(m) for m in model_ids]
        return PredictionMatrix(
            model_ids=tuple(model_ids),
            example_ids=self.example_ids,
            probs=self.probs[:, indices],
            labels=self.labels,
        )

    def fingerprint(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    def to_dict(self) -> dict:
        return {
            "model_ids": list(self.model_ids),
            "example_ids": list(self.example_ids),
            "probs": self.probs.tolist(),
            "labels": self.labels.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PredictionMatrix":
        return cls(
            model_ids=tuple(data["model_ids"]),
            example_ids=tuple(data["example_ids"]),
            probs=np.array(data["probs"], dtype=float).reshape(
                len(data["example_ids"]), len(data["model_ids"])
            ),
            labels=np.array(data["labels"], dtype=int),
        )

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False)
            fh.write("\n")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "PredictionMatrix":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class Alignment:
    """An aligned matrix plus the per-model drop accounting behind it."""

    matrix: PredictionMatrix
    split: str
    dropped_per_model: dict[str, int]
    dropped_total: int
    coverage: dict[str, float]


def align(
    prediction_sets: Sequence[Sequence[Prediction]],
    corpus: Corpus,
    split: str,
    min_coverage: float = 0.5,
    allow_low_coverage: bool = False,
) -> Alignment:
    """Build the probability matrix over examples every model answered.

    ``prediction_sets`` holds one list of predictions per model. Example
    rows are restricted to split ids where ALL models have status=ok; rows
    and columns are sorted by id. A model whose ok-coverage of the split
    falls below ``min_coverage`` raises unless ``allow_low_coverage`` is
    set.
    """
    split_examples = corpus.subset(split)
    if not split_examples:
        raise ValueError(f"corpus has no examples in split {split!r}")
    split_ids = {ex.id for ex in split_examples}
    labels_by_id = {ex.id: ex.label for ex in split_examples}

    by_model: dict[str, dict[str, Prediction]] = {}
    for preds in prediction_sets:
        preds = list(preds)
        if not preds:
            raise ValueError("empty prediction set supplied")
        model_ids = {p.model_id for p in preds}
        if len(model_ids) != 1:
            raise ValueError(
                f"each prediction set must cover exactly one model, got {sorted(model_ids)}"
            )
        model_id = preds[0].model_id
        if model_id in by_model:
            raise ValueError(f"model {model_id!r} supplied more than once")
        by_model[model_id] = {p.example_id: p for p in preds}
    if not by_model:
        raise ValueError("no prediction sets supplied")

    coverage = {}
    for model_id, preds in by_model.items():
        ok_ids = {eid for eid, p in preds.items() if p.status == "ok" and eid in split_ids}
        coverage[model_id] = len(ok_ids) / len(split_ids)
        if coverage[model_id] < min_coverage and not allow_low_coverage:
            raise ValueError(
                f"model {model_id!r} covers only {coverage[model_id]:.1%} of split "
                f"{split!r} (< {min_coverage:.0%}); pass allow_low_coverage to proceed"
            )

    kept_ids = set(split_ids)
    for preds in by_model.values():
        kept_ids &= {eid for eid, p in preds.items() if p.status == "ok"}
    dropped_per_model = {
        model_id: sum(
            1 for eid in split_ids
            if eid not in preds or preds[eid].status != "ok"
        )
        for model_id, preds in by_model.items()
    }

    example_ids = tuple(sorted(kept_ids))
    model_ids = tuple(sorted(by_model))
    probs = np.array(
        [[by_model[m][eid].p_sarcastic for m in model_ids] for eid in example_ids],
        dtype=float,
    ).reshape(len(example_ids), len(model_ids))
    labels = np.array([labels_by_id[eid] for eid in example_ids], dtype=int)

    matrix = PredictionMatrix(
        model_ids=model_ids, example_ids=example_ids, probs=probs, labels=labels
    )
    return Alignment(
        matrix=matrix,
        split=split,
        dropped_per_model=dropped_per_model,
        dropped_total=len(split_ids) - len(kept_ids),
        coverage=coverage,
    )
