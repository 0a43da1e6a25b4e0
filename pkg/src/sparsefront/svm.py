"""Linear SVM trained with Pegasos-style stochastic subgradient descent.

The bias is handled by augmenting each sample with a constant 1 feature,
so a single weight update rule covers both.  Step size is eta_t =
1/(reg_lambda * t) with t the global step counter; the returned weights
are the average of the iterates from a warm-up epoch onward, which damps
the oscillation of the final iterate.  Shuffling is seeded, so training
is deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TrainingError",
    "TrainConfig",
    "LinearModel",
    "EvalResult",
    "hinge_objective",
    "train",
    "evaluate",
    "save_model",
    "load_model",
]


class TrainingError(Exception):
    """Training failed to produce a finite model."""


@dataclass(frozen=True)
class TrainConfig:
    reg_lambda: float = 1e-4
    epochs: int = 20
    seed: int = 0
    # Iterate averaging starts at this epoch (0-based); None = epochs // 2.
    average_from: int | None = None

    def __post_init__(self):
        if self.reg_lambda <= 0:
            raise ValueError("reg_lambda must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    @property
    def warmup(self) -> int:
        return self.epochs // 2 if self.average_from is None else self.average_from


@dataclass(frozen=True)
class LinearModel:
    """Scores f(x) = w.x + b; f >= 0 predicts d2, f < 0 predicts d1."""

    w: np.ndarray
    b: float
    d1: int
    d2: int
    meta: dict = field(default_factory=dict)

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.w + self.b

    def predict(self, x: np.ndarray) -> np.ndarray:
        f = self.decision_function(x)
        return np.where(f >= 0, self.d2, self.d1)


@dataclass(frozen=True)
class EvalResult:
    correct: int
    total: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.total

    @property
    def error_rate(self) -> float:
        return 1.0 - self.accuracy


def hinge_objective(w: np.ndarray, b: float, x: np.ndarray, y_pm: np.ndarray,
                    reg_lambda: float) -> float:
    """reg_lambda/2 * ||w||^2 + mean hinge loss (bias unregularized here;
    used for reporting only)."""
    margins = y_pm * (x @ w + b)
    hinge = np.maximum(0.0, 1.0 - margins).mean()
    return 0.5 * reg_lambda * float(w @ w) + float(hinge)


def _signed_labels(y: np.ndarray, d1: int, d2: int) -> np.ndarray:
    y = np.asarray(y)
    bad = ~((y == d1) | (y == d2))
    if np.any(bad):
        raise ValueError(f"labels contain values other than {d1} and {d2}")
    for d in (d1, d2):
        if not np.any(y == d):
            raise ValueError(f"class {d} has no training examples")
    return np.where(y == d2, 1.0, -1.0)


def train(x: np.ndarray, y: np.ndarray, d1: int, d2: int,
          cfg: TrainConfig = TrainConfig()) -> LinearModel:
    """Train on samples ``x`` (rows) with digit labels ``y``."""
    if d1 == d2:
        raise ValueError("d1 and d2 must differ")
    x = np.asarray(x, dtype=float)
    y_pm = _signed_labels(y, d1, d2)
    m, n = x.shape
    xa = np.hstack([x, np.ones((m, 1))])  # constant feature carries the bias

    rng = np.random.default_rng(cfg.seed)
    w = np.zeros(n + 1)
    w_sum = np.zeros(n + 1)
    n_avg = 0
    t = 0
    history = []

    for epoch in range(cfg.epochs):
        for i in rng.permutation(m):
            t += 1
            eta = 1.0 / (cfg.reg_lambda * t)
            margin = y_pm[i] * (w @ xa[i])
            w *= 1.0 - eta * cfg.reg_lambda
            if margin < 1.0:
                w += eta * y_pm[i] * xa[i]
        if epoch >= cfg.warmup:
            w_sum += w
            n_avg += 1
        w_rep = w_sum / n_avg if n_avg else w
        history.append(
            hinge_objective(w_rep[:n], float(w_rep[n]), x, y_pm, cfg.reg_lambda)
        )
        if not np.isfinite(history[-1]):
            raise TrainingError(f"objective diverged at epoch {epoch}")

    w_final = w_sum / n_avg if n_avg else w
    meta = {
        "reg_lambda": cfg.reg_lambda,
        "epochs": cfg.epochs,
        "seed": cfg.seed,
        "warmup": cfg.warmup,
        "objective_history": history,
    }
    return LinearModel(w=w_final[:n], b=float(w_final[n]), d1=d1, d2=d2, meta=meta)


def evaluate(model: LinearModel, x: np.ndarray, y: np.ndarray) -> EvalResult:
    y = np.asarray(y)
    if y.size == 0:
        raise ValueError("empty evaluation set")
    pred = model.predict(x)
    return EvalResult(correct=int(np.sum(pred == y)), total=int(y.size))


def save_model(model: LinearModel, path):
    payload = {
        "w": model.w.tolist(),
        "b": model.b,
        "d1": model.d1,
        "d2": model.d2,
        "meta": model.meta,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_model(path) -> LinearModel:
    with open(path) as fh:
        payload = json.load(fh)
    return LinearModel(
        w=np.asarray(payload["w"], dtype=float),
        b=float(payload["b"]),
        d1=int(payload["d1"]),
        d2=int(payload["d2"]),
        meta=payload.get("meta", {}),
    )
