"""Stratified k-fold splitting and cross-validated early stopping."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

DEFAULT_FOLDS = 5
DECISION_THRESHOLD = 0.5


def check_binary_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("labels must be a non-empty vector")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    if y.min() == y.max():
        raise ValueError("degenerate labels: only one class present")
    return y.astype(np.float64)


def kfold_split(n: int, folds: int = DEFAULT_FOLDS, seed: int = 0, labels=None) -> np.ndarray:
    """Fold index per sample.

    Samples are shuffled per class and dealt round-robin, positives first,
    so fold sizes differ by at most one and each class is spread evenly.
    """
    if folds < 2 or n < folds:
        raise ValueError(f"need folds >= 2 and n >= folds (n={n}, folds={folds})")
    rng = np.random.default_rng(seed)
    if labels is None:
        groups = [np.arange(n)]
    else:
        labels = np.asarray(labels)
        if labels.shape != (n,):
            raise ValueError("labels length must equal n")
        groups = [np.flatnonzero(labels == c) for c in sorted(np.unique(labels), reverse=True)]
    order = np.concatenate([rng.permutation(g) for g in groups])
    assignment = np.empty(n, dtype=np.int64)
    assignment[order] = np.arange(n) % folds
    return assignment


@dataclass
class TrainReport:
    train_loss: np.ndarray  # per epoch, mean over folds
    val_loss: np.ndarray  # per epoch, mean over folds
    fold_tp: list
    fold_fp: list
    selected_epoch: int
    seed: int
    final_loss: np.ndarray  # per epoch of the refit on all data
    oof_scores: np.ndarray  # out-of-fold predictions at the selected epoch
    run_losses: list = field(default_factory=list)  # every training run, per epoch

    def curve_rows(self) -> list:
        return [
            (e, float(self.train_loss[e]), float(self.val_loss[e]))
            for e in range(len(self.train_loss))
        ]


def _rates(scores, y, threshold=DECISION_THRESHOLD):
    pred = scores > threshold
    pos, neg = y == 1, y == 0
    tp = float(pred[pos].mean()) if pos.any() else float("nan")
    fp = float(pred[neg].mean()) if neg.any() else float("nan")
    return tp, fp


# fit_path(X_train, y_train, X_val, epochs) -> (train_loss[epochs+1], val_pred[epochs+1, n_val])
FitPath = Callable[[np.ndarray, np.ndarray, np.ndarray, int], tuple]


def cross_validate(fit_path: FitPath, X, y, epochs: int, seed: int, folds: int):
    """Run ``fit_path`` on every fold and pick the epoch with least mean validation MSE.

    Returns ``(selected_epoch, partial TrainReport fields)``.
    """
    y = np.asarray(y, dtype=np.float64)
    assignment = kfold_split(len(y), folds, seed, labels=y)
    train_curves, val_curves, runs = [], [], []
    val_preds = {}
    for k in range(folds):
        va = assignment == k
        tr_loss, preds = fit_path(X[~va], y[~va], X[va], epochs)
        runs.append(np.asarray(tr_loss))
        train_curves.append(tr_loss)
        val_curves.append(np.mean((preds - y[va][None, :]) ** 2, axis=1))
        val_preds[k] = preds
    train_loss = np.mean(train_curves, axis=0)
    val_loss = np.mean(val_curves, axis=0)
    selected = int(np.argmin(val_loss[1:]) + 1) if epochs >= 1 else 0
    oof = np.empty(len(y))
    fold_tp, fold_fp = [], []
    for k in range(folds):
        va = assignment == k
        oof[va] = val_preds[k][selected]
        tp, fp = _rates(oof[va], y[va])
        fold_tp.append(tp)
        fold_fp.append(fp)
    return selected, dict(
        train_loss=train_loss,
        val_loss=val_loss,
        fold_tp=fold_tp,
        fold_fp=fold_fp,
        oof_scores=oof,
        run_losses=runs,
    )
