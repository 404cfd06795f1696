"""Stacking meta-learner: Ridge-regularized binary logistic regression.

Trained on base-model sarcastic-class probabilities, the objective is

    J(w, b) = -(1/N) * sum_i [y_i log s_i + (1 - y_i) log(1 - s_i)] + lam * ||w||^2

with s_i = sigmoid(w . x_i + b) and the intercept left unregularized. The
objective is convex (strictly so in w for lam > 0), so a damped Newton
iteration converges to the unique optimum; training stops when the gradient
infinity-norm falls below the tolerance and errors out otherwise. Weights
double as the model-importance signal used for top-k member selection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .predictions import PredictionMatrix


class ConvergenceError(RuntimeError):
    """Training failed to reach the gradient tolerance within max_iters."""

    def __init__(self, message: str, gradient_norm: float, iterations: int):
        super().__init__(message)
        self.gradient_norm = gradient_norm
        self.iterations = iterations


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def objective(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, lam: float) -> float:
    """Mean negative log-likelihood plus lam * ||w||^2 (intercept unpenalized)."""
    z = x @ w + b
    nll = np.logaddexp(0.0, z) - y * z
    return float(nll.mean() + lam * float(w @ w))


def gradient(
    w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, lam: float
) -> tuple[np.ndarray, float]:
    """Analytic gradient of :func:`objective` with respect to (w, b)."""
    residual = _sigmoid(x @ w + b) - y
    grad_w = x.T @ residual / len(y) + 2.0 * lam * w
    grad_b = float(residual.mean())
    return grad_w, grad_b


def _hessian(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    n, m = x.shape
    s = _sigmoid(x @ w + b)
    d = s * (1.0 - s)
    h = np.empty((m + 1, m + 1))
    h[:m, :m] = (x.T * d) @ x / n + 2.0 * lam * np.eye(m)
    h[:m, m] = h[m, :m] = x.T @ d / n
    h[m, m] = d.mean()
    return h


@dataclass(frozen=True)
class MetaModel:
    """Stacking weights with provenance and optimizer diagnostics."""

    model_ids: tuple[str, ...]
    weights: np.ndarray
    intercept: float
    lam: float
    trained_on: str
    optimizer_report: dict

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if weights.shape != (len(self.model_ids),):
            raise ValueError(
                f"weights shape {weights.shape} does not match {len(self.model_ids)} models"
            )
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "model_ids", tuple(self.model_ids))

    def to_dict(self) -> dict:
        return {
            "model_ids": list(self.model_ids),
            "weights": self.weights.tolist(),
            "intercept": self.intercept,
            "lambda": self.lam,
            "trained_on": self.trained_on,
            "optimizer_report": dict(self.optimizer_report),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetaModel":
        return cls(
            model_ids=tuple(data["model_ids"]),
            weights=np.array(data["weights"], dtype=float),
            intercept=data["intercept"],
            lam=data["lambda"],
            trained_on=data["trained_on"],
            optimizer_report=data["optimizer_report"],
        )

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False, indent=2)
            fh.write("\n")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "MetaModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def train(
    matrix: PredictionMatrix,
    lam: float,
    tolerance: float = 1e-8,
    max_iters: int = 10000,
    seed: int = 0,
) -> MetaModel:
    """Fit the meta-learner on an aligned prediction matrix.

    Damped Newton from the zero vector: at each step the Newton direction is
    line-searched by halving until the objective decreases, and iteration
    stops once the gradient infinity-norm is at or below ``tolerance``.
    Training is deterministic; the seed is only recorded for provenance.
    """
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    x = np.asarray(matrix.probs, dtype=float)
    y = np.asarray(matrix.labels, dtype=float)
    classes = np.unique(matrix.labels)
    if len(classes) < 2:
        raise ValueError(f"training labels contain a single class ({classes.tolist()})")

    m = x.shape[1]
    theta = np.zeros(m + 1)

    def grad_vec(t):
        gw, gb = gradient(t[:m], t[m], x, y, lam)
        return np.concatenate([gw, [gb]])

    iterations = 0
    grad_norm = float(np.max(np.abs(grad_vec(theta))))
    for iterations in range(1, max_iters + 1):
        g = grad_vec(theta)
        grad_norm = float(np.max(np.abs(g)))
        if grad_norm <= tolerance:
            iterations -= 1
            break
        h = _hessian(theta[:m], theta[m], x, y, lam)
        try:
            step = np.linalg.solve(h, -g)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(h, -g, rcond=None)
        # Halve until the objective actually decreases (convexity guarantees
        # the full Newton step rarely needs damping, but separable data can).
        j0 = objective(theta[:m], theta[m], x, y, lam)
        t = 1.0
        while t > 1e-12:
            cand = theta + t * step
            if objective(cand[:m], cand[m], x, y, lam) < j0:
                break
            t *= 0.5
        else:
            break  # no descent possible at float precision
        theta = theta + t * step
        grad_norm = float(np.max(np.abs(grad_vec(theta))))
        if grad_norm <= tolerance:
            break
    else:
        raise ConvergenceError(
            f"meta-learner did not converge in {max_iters} iterations "
            f"(gradient infinity-norm {grad_norm:.3e} > tolerance {tolerance:.1e})",
            gradient_norm=grad_norm,
            iterations=max_iters,
        )
    if grad_norm > tolerance:
        raise ConvergenceError(
            f"meta-learner stalled after {iterations} iterations "
            f"(gradient infinity-norm {grad_norm:.3e} > tolerance {tolerance:.1e})",
            gradient_norm=grad_norm,
            iterations=iterations,
        )

    return MetaModel(
        model_ids=matrix.model_ids,
        weights=theta[:m].copy(),
        intercept=float(theta[m]),
        lam=float(lam),
        trained_on=matrix.fingerprint(),
        optimizer_report={
            "iterations": iterations,
            "final_gradient_norm": grad_norm,
            "tolerance": tolerance,
            "seed": seed,
        },
    )


def predict(model: MetaModel, matrix: PredictionMatrix) -> np.ndarray:
    """Sarcastic-class probabilities sigmoid(w . x + b) for each matrix row."""
    if matrix.model_ids != model.model_ids:
        raise ValueError(
            f"matrix columns {matrix.model_ids} do not match "
            f"meta-model features {model.model_ids}"
        )
    return _sigmoid(matrix.probs @ model.weights + model.intercept)


def select_top_k(model: MetaModel, k: int) -> list[str]:
    """The k model ids with largest |weight|, descending; ties break lexicographically."""
    m = len(model.model_ids)
    if not 1 <= k <= m:
        raise ValueError(f"k must be in [1, {m}], got {k}")
    ranked = sorted(zip(model.model_ids, model.weights), key=lambda mw: (-abs(mw[1]), mw[0]))
    return [model_id for model_id, _ in ranked[:k]]


def tune_lambda(
    train_matrix: PredictionMatrix,
    val_matrix: PredictionMatrix,
    grid: Sequence[float],
    tolerance: float = 1e-8,
    max_iters: int = 10000,
    seed: int = 0,
) -> tuple[float, MetaModel]:
    """Grid-search lambda by validation accuracy; ties favor stronger regularization."""
    grid = sorted(float(g) for g in grid)
    if not grid:
        raise ValueError("lambda grid must be non-empty")
    if grid[0] < 0:
        raise ValueError(f"lambda grid values must be >= 0, got {grid[0]}")
    best: tuple[float, MetaModel] | None = None
    best_acc = -1.0
    for lam in grid:
        model = train(train_matrix, lam, tolerance=tolerance, max_iters=max_iters, seed=seed)
        probs = predict(model, val_matrix)
        acc = float(np.mean((probs > 0.5).astype(int) == val_matrix.labels))
        if acc >= best_acc:  # ascending grid, so >= keeps the largest tied lambda
            best, best_acc = (lam, model), acc
    assert best is not None
    return best
