"""Confusion matrices, classification metrics, and report emission.

The sarcastic class (label 1) is the positive class throughout. Metrics are
kept at full float precision internally; display formatting rounds to three
decimals with round-half-to-even.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(pred: Sequence[int], gold: Sequence[int]) -> ConfusionMatrix:
    """Count tp/fp/fn/tn for binary predictions against gold labels."""
    if len(pred) != len(gold):
        raise ValueError(f"length mismatch: {len(pred)} predictions vs {len(gold)} labels")
    if len(pred) == 0:
        raise ValueError("cannot build a confusion matrix from zero examples")
    tp = fp = fn = tn = 0
    for p, g in zip(pred, gold):
        if p not in (0, 1) or g not in (0, 1):
            raise ValueError(f"labels must be 0 or 1, got pred={p!r} gold={g!r}")
        if p == 1 and g == 1:
            tp += 1
        elif p == 1:
            fp += 1
        elif g == 1:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def metrics(cm: ConfusionMatrix) -> tuple[float, float, float, float]:
    """Accuracy, precision, recall, and binary F1 of the positive class.

    Zero-denominator cases (degenerate predictors) yield 0.0 rather than an
    error; callers can inspect :func:`zero_division_flags` to surface them.
    """
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    accuracy = (cm.tp + cm.tn) / cm.total
    precision = cm.tp / (cm.tp + cm.fp) if (cm.tp + cm.fp) > 0 else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if (cm.tp + cm.fn) > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) > 0 else 0.0
    return accuracy, precision, recall, f1


def zero_division_flags(cm: ConfusionMatrix) -> tuple[str, ...]:
    flags = []
    if cm.tp + cm.fp == 0:
        flags.append("precision_zero_denominator")
    if cm.tp + cm.fn == 0:
        flags.append("recall_zero_denominator")
    precision = cm.tp / (cm.tp + cm.fp) if (cm.tp + cm.fp) > 0 else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if (cm.tp + cm.fn) > 0 else 0.0
    if precision + recall == 0:
        flags.append("f1_zero_denominator")
    return tuple(flags)


@dataclass(frozen=True)
class SystemReport:
    """Evaluation results for one system (a single model or an ensemble)."""

    name: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    evaluated_count: int
    dropped_count: int
    members: tuple[str, ...] = ()
    flags: tuple[str, ...] = ()

    @classmethod
    def from_confusion(
        cls,
        name: str,
        cm: ConfusionMatrix,
        dropped_count: int = 0,
        members: Sequence[str] = (),
    ) -> "SystemReport":
        accuracy, precision, recall, f1 = metrics(cm)
        return cls(
            name=name,
            accuracy=accuracy,
            precision=precision,
            recall=recall,
            f1=f1,
            evaluated_count=cm.total,
            dropped_count=dropped_count,
            members=tuple(members),
            flags=zero_division_flags(cm),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "evaluated_count": self.evaluated_count,
            "dropped_count": self.dropped_count,
            "members": list(self.members),
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SystemReport":
        return cls(
            name=data["name"],
            accuracy=data["accuracy"],
            precision=data["precision"],
            recall=data["recall"],
            f1=data["f1"],
            evaluated_count=data["evaluated_count"],
            dropped_count=data["dropped_count"],
            members=tuple(data.get("members", ())),
            flags=tuple(data.get("flags", ())),
        )


def display(value: float) -> str:
    """Three-decimal display string, round-half-to-even."""
    return f"{value:.3f}"


def emit_report(reports: Iterable[SystemReport], format: str = "text-table") -> str:
    """Render reports (sorted by system name) as a text table, CSV, or JSON."""
    entries = sorted(reports, key=lambda r: r.name)
    format = format.lower()
    if format == "json":
        return json.dumps([r.to_dict() for r in entries], ensure_ascii=False, indent=2) + "\n"
    if format == "csv":
        lines = ["system,accuracy,precision,recall,f1,evaluated,dropped"]
        for r in entries:
            lines.append(
                f"{r.name},{display(r.accuracy)},{display(r.precision)},"
                f"{display(r.recall)},{display(r.f1)},{r.evaluated_count},{r.dropped_count}"
            )
        return "\n".join(lines) + "\n"
    if format == "text-table":
        return _text_table(entries)
    raise ValueError(f"unknown report format {format!r} (expected text-table, csv, or json)")


def _text_table(entries: Sequence[SystemReport]) -> str:
    headers = ("System", "Accuracy", "Precision", "Recall", "F1", "Evaluated", "Dropped")
    rows = [
        (
            r.name,
            display(r.accuracy),
            display(r.precision),
            display(r.recall),
            display(r.f1),
            str(r.evaluated_count),
            str(r.dropped_count),
        )
        for r in entries
    ]
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    out = io.StringIO()

    def line(cells):
        out.write("  ".join(cell.ljust(w) for cell, w in zip(cells, widths)).rstrip() + "\n")

    line(headers)
    line(tuple("-" * w for w in widths))
    for row in rows:
        line(row)
    footnotes = [r for r in entries if r.members or r.flags]
    if footnotes:
        out.write("\n")
        for r in footnotes:
            if r.members:
                out.write(f"{r.name}: members = {', '.join(r.members)}\n")
            if r.flags:
                out.write(f"{r.name}: flags = {', '.join(r.flags)}\n")
    return out.getvalue()


def save_report(reports: Iterable[SystemReport], path, format: str = "json") -> None:
    from pathlib import Path

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(emit_report(reports, format=format), encoding="utf-8")


def load_report(path) -> list[SystemReport]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return [SystemReport.from_dict(entry) for entry in data]
