"""Fuzzy-integral fusion of two classifier scores and TP/FP evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_MU1 = 0.47
DEFAULT_MU2 = 0.53
DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class FusionParams:
    mu1: float = DEFAULT_MU1  # importance of classifier 1 (MLP)
    mu2: float = DEFAULT_MU2  # importance of classifier 2 (NF)
    mu12: float = 1.0  # importance of the coalition

    def __post_init__(self):
        for name in ("mu1", "mu2", "mu12"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (0.0 <= self.mu1 <= 1.0 and 0.0 <= self.mu2 <= 1.0):
            raise ValueError("mu1 and mu2 must lie in [0, 1]")


def fuse(h1, h2, p: FusionParams = FusionParams()):
    """``[mu12 - (mu2 + mu1)] h1 + mu1 h1 + mu2 h2``, clipped to [0, 1].

    The expression is evaluated as written, without ordering the inputs.
    Works elementwise on arrays.
    """
    out = (p.mu12 - (p.mu2 + p.mu1)) * np.asarray(h1) + p.mu1 * np.asarray(h1) + p.mu2 * np.asarray(h2)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class EvalResult:
    tp: int
    fn: int
    fp: int
    tn: int
    threshold: float

    @property
    def tp_rate(self) -> float | None:
        n = self.tp + self.fn
        return self.tp / n if n else None

    @property
    def fp_rate(self) -> float | None:
        n = self.fp + self.tn
        return self.fp / n if n else None

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / (self.tp + self.fn + self.fp + self.tn)

    @property
    def youden(self) -> float | None:
        if self.tp_rate is None or self.fp_rate is None:
            return None
        return self.tp_rate - self.fp_rate


def evaluate(scores, labels, threshold: float = DEFAULT_THRESHOLD) -> EvalResult:
    """Count outcomes, predicting positive iff ``score > threshold``."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.size == 0:
        raise ValueError("nothing to evaluate")
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    pred = scores > threshold
    pos = labels == 1
    return EvalResult(
        tp=int(np.sum(pred & pos)),
        fn=int(np.sum(~pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        threshold=threshold,
    )


@dataclass
class SweepResult:
    params: FusionParams
    mu1: np.ndarray
    tp_rate: np.ndarray
    fp_rate: np.ndarray
    objective: np.ndarray

    def rows(self) -> list:
        return [
            (float(m), float(t), float(f), float(o))
            for m, t, f, o in zip(self.mu1, self.tp_rate, self.fp_rate, self.objective)
        ]


def grid_search_mu(
    h1, h2, labels, step: float = 0.01, threshold: float = DEFAULT_THRESHOLD, mu12: float = 1.0
) -> SweepResult:
    """Sweep ``mu1`` over [0, 1] with ``mu2 = 1 - mu1`` and maximize TP rate minus FP rate.

    Ties go to the ``mu1`` closest to 0.5, then the smaller one.
    """
    labels = np.asarray(labels)
    if labels.size == 0 or labels.min() == labels.max():
        raise ValueError("validation scores must contain both classes")
    n = int(round(1.0 / step))
    if n < 1 or abs(n * step - 1.0) > 1e-9:
        raise ValueError("step must divide 1")
    grid = np.arange(n + 1)
    mu1 = grid / n
    tp = np.empty(n + 1)
    fp = np.empty(n + 1)
    for i in grid:
        res = evaluate(fuse(h1, h2, FusionParams(i / n, (n - i) / n, mu12)), labels, threshold)
        tp[i], fp[i] = res.tp_rate, res.fp_rate
    obj = tp - fp
    best = min(grid[obj == obj.max()], key=lambda i: (abs(2 * i - n), i))
    params = FusionParams(best / n, (n - best) / n, mu12)
    return SweepResult(params, mu1, tp, fp, obj)
