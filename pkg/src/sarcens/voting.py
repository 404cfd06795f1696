"""Hard, soft, and cutoff-based mixed voting over base-model probabilities.

Mixed voting applies hard voting to a row when the absolute difference
between positive and negative votes exceeds the cutoff ``n``, and soft
voting otherwise. With an odd number of predictors and n=0 it reduces to
hard voting; with n equal to the predictor count it reduces to soft voting.

All comparisons are strict: a probability counts as a positive vote only
when it exceeds the threshold, and the hard/soft switch fires only when the
vote difference exceeds ``n``. Exact ties resolve to ``tie_label``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .predictions import PredictionMatrix

SCHEMES = ("hard", "soft", "mixed")


@dataclass(frozen=True)
class VotingConfig:
    scheme: str = "hard"
    cutoff_n: int = 0
    threshold: float = 0.5
    tie_label: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.cutoff_n < 0:
            raise ValueError(f"cutoff_n must be >= 0, got {self.cutoff_n}")
        if self.tie_label not in (0, 1):
            raise ValueError(f"tie_label must be 0 or 1, got {self.tie_label!r}")


def _check_row(row: Sequence[float]) -> None:
    if len(row) == 0:
        raise ValueError("cannot vote over an empty row of predictions")


def hard_vote(row: Sequence[float], config: VotingConfig = VotingConfig()) -> int:
    """Majority over per-model binarized predictions; exact tie -> tie_label."""
    _check_row(row)
    positives = sum(1 for p in row if p > config.threshold)
    negatives = len(row) - positives
    if positives > negatives:
        return 1
    if negatives > positives:
        return 0
    return config.tie_label


def soft_vote(row: Sequence[float], config: VotingConfig = VotingConfig()) -> int:
    """Threshold the mean probability; exact tie -> tie_label."""
    _check_row(row)
    mean = sum(row) / len(row)
    if mean > config.threshold:
        return 1
    if mean < config.threshold:
        return 0
    return config.tie_label


def mixed_vote(row: Sequence[float], config: VotingConfig) -> int:
    """Hard vote when |#positive - #negative| > cutoff_n, soft vote otherwise."""
    _check_row(row)
    if not 0 <= config.cutoff_n <= len(row):
        raise ValueError(
            f"cutoff_n must be in [0, {len(row)}] for {len(row)} predictors, "
            f"got {config.cutoff_n}"
        )
    positives = sum(1 for p in row if p > config.threshold)
    negatives = len(row) - positives
    if abs(positives - negatives) > config.cutoff_n:
        return hard_vote(row, config)
    return soft_vote(row, config)


def vote_row(row: Sequence[float], config: VotingConfig) -> int:
    if config.scheme == "hard":
        return hard_vote(row, config)
    if config.scheme == "soft":
        return soft_vote(row, config)
    return mixed_vote(row, config)


def vote_matrix(matrix: PredictionMatrix, config: VotingConfig) -> np.ndarray:
    """Apply the configured scheme row-wise; returns N binary labels."""
    return np.array([vote_row(row, config) for row in matrix.probs.tolist()], dtype=int)


def tune_cutoff(val_matrix: PredictionMatrix, config: VotingConfig) -> tuple[int, float]:
    """Scan every cutoff n in {0..M} on the validation matrix.

    Returns the accuracy-maximizing n; ties break toward the smallest n.
    """
    m = len(val_matrix.model_ids)
    if m < 1:
        raise ValueError("validation matrix has no models")
    labels = val_matrix.labels
    best_n, best_acc = 0, -1.0
    for n in range(m + 1):
        cand = VotingConfig(
            scheme="mixed", cutoff_n=n, threshold=config.threshold, tie_label=config.tie_label
        )
        preds = vote_matrix(val_matrix, cand)
        acc = float(np.mean(preds == labels))
        if acc > best_acc:
            best_n, best_acc = n, acc
    return best_n, best_acc
