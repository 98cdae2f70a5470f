"""Self-organizing map used as a classifier by neuron majority vote."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..select import SofmGrid, standardize, train_sofm
from .cv import check_binary_labels


@dataclass
class SofmClassifier:
    grid: SofmGrid
    neuron_labels: np.ndarray  # 0/1 per neuron
    mean: np.ndarray
    std: np.ndarray

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        win = self.grid.winners((X - self.mean) / self.std)
        return self.neuron_labels[win].astype(np.float64)


def sofm_classify_train(X, y, rows: int = 4, cols: int = 4, epochs: int = 100, seed: int = 0):
    """Train a SOFM and label neurons by majority vote of the samples they win.

    Ties go to the positive class. A neuron that wins nothing takes the
    label of the nearest labeled neuron on the hex grid (lowest index on ties).
    """
    X = np.asarray(X, dtype=np.float64)
    y = check_binary_labels(y)
    Z, mean, std = standardize(X)
    grid = train_sofm(Z, rows, cols, epochs, seed)
    win = grid.winners(Z)
    n = grid.n_neurons
    pos = np.bincount(win, weights=y, minlength=n)
    total = np.bincount(win, minlength=n)
    labels = np.full(n, -1)
    hit = total > 0
    labels[hit] = (pos[hit] >= total[hit] - pos[hit]).astype(int)
    dist = grid.grid_distances()
    labeled = np.flatnonzero(hit)
    for i in np.flatnonzero(~hit):
        labels[i] = labels[labeled[np.argmin(dist[i, labeled])]]
    return SofmClassifier(grid, labels, mean, std)


def sofm_predict(m: SofmClassifier, x) -> float | np.ndarray:
    out = m.predict(x)
    return float(out[0]) if np.ndim(x) == 1 else out
