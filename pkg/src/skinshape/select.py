"""Self-organizing map on a hexagonal grid and correlation-based feature pruning."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class SofmGrid:
    rows: int
    cols: int
    weights: np.ndarray  # (rows * cols, D), neuron index = row * cols + col
    trained: bool = False

    @property
    def n_neurons(self) -> int:
        return self.rows * self.cols

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def winners(self, data: np.ndarray) -> np.ndarray:
        data = np.atleast_2d(np.asarray(data, dtype=np.float64))
        if data.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} features, got {data.shape[1]}")
        d2 = (
            np.sum(data**2, axis=1)[:, None]
            - 2.0 * data @ self.weights.T
            + np.sum(self.weights**2, axis=1)[None, :]
        )
        return np.argmin(d2, axis=1)

    def grid_distances(self) -> np.ndarray:
        return hex_distances(self.rows, self.cols)


def hex_distances(rows: int, cols: int) -> np.ndarray:
    """Pairwise hex-step distances for an odd-row-offset layout."""
    r = np.repeat(np.arange(rows), cols)
    c = np.tile(np.arange(cols), rows)
    q = c - (r - (r & 1)) // 2  # axial coordinates
    dq = q[:, None] - q[None, :]
    dr = r[:, None] - r[None, :]
    return (np.abs(dq) + np.abs(dr) + np.abs(dq + dr)) / 2.0


def train_sofm(
    data: np.ndarray, rows: int = 4, cols: int = 4, epochs: int = 100, seed: int = 0
) -> SofmGrid:
    """Batch Kohonen training with a Gaussian hexagonal neighborhood.

    Each epoch moves every neuron a fraction ``lr`` of the way toward the
    neighborhood-weighted mean of the data. The neighborhood width decays
    linearly from ``max(rows, cols) / 2`` to 0.5 and ``lr`` from 0.5 to 0.01.
    Neurons start at randomly chosen data rows.
    """
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("data must be a non-empty 2-D matrix")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    rng = np.random.default_rng(seed)
    n_neurons = rows * cols
    init = rng.choice(X.shape[0], size=n_neurons, replace=X.shape[0] < n_neurons)
    grid = SofmGrid(rows, cols, X[init].copy())
    dist = grid.grid_distances()
    sigma0, sigma1 = max(rows, cols) / 2.0, 0.5
    lr0, lr1 = 0.5, 0.01
    for epoch in range(epochs):
        frac = epoch / (epochs - 1) if epochs > 1 else 1.0
        sigma = sigma0 + (sigma1 - sigma0) * frac
        lr = lr0 + (lr1 - lr0) * frac
        bmu = grid.winners(X)
        h = np.exp(-(dist[:, bmu] ** 2) / (2.0 * sigma**2))
        den = h.sum(axis=1)
        ok = den > 1e-300
        target = (h[ok] @ X) / den[ok, None]
        grid.weights[ok] += lr * (target - grid.weights[ok])
    grid.trained = True
    return grid


def weight_planes(g: SofmGrid) -> np.ndarray:
    """Per-feature weight planes, shape ``(D, rows, cols)``."""
    if not g.trained:
        raise ValueError("SOFM grid is not trained")
    return g.weights.T.reshape(g.dim, g.rows, g.cols).copy()


def correlation_matrix(data: np.ndarray) -> np.ndarray:
    """Pearson correlations; zero-variance columns correlate 0 with everything else."""
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least 2 rows")
    Xc = X - X.mean(axis=0)
    norms = np.sqrt(np.sum(Xc**2, axis=0))
    flat = norms <= 1e-12 * np.maximum(1.0, np.abs(X).max(axis=0))
    safe = np.where(flat, 1.0, norms)
    corr = (Xc.T @ Xc) / np.outer(safe, safe)
    corr[flat, :] = 0.0
    corr[:, flat] = 0.0
    corr = np.clip((corr + corr.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def standardize(data: np.ndarray) -> tuple:
    """Column z-scores; constant columns map to zero. Returns ``(Z, mean, std)``."""
    X = np.asarray(data, dtype=np.float64)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    return (X - mean) / std, mean, std


@dataclass
class SelectionReport:
    correlation: np.ndarray
    plane_variance: np.ndarray
    dropped: dict = field(default_factory=dict)  # feature index -> reason
    kept: list = field(default_factory=list)

    def decisions(self, names=None) -> list:
        """Rows ``(index, name, plane_variance, decision, reason)``."""
        names = names or [f"f{i}" for i in range(len(self.plane_variance))]
        out = []
        for i, name in enumerate(names):
            reason = self.dropped.get(i, "")
            out.append((i, name, float(self.plane_variance[i]), "drop" if reason else "keep", reason))
        return out


def select_features(
    grid: SofmGrid,
    corr: np.ndarray,
    rho_max: float = 0.9,
    var_min: float = 1e-3,
) -> SelectionReport:
    """Drop uniform weight planes, then the weaker member of each highly correlated pair.

    Pairs are visited from the strongest correlation down; the member with
    the lower plane variance goes (the higher index on a tie).
    """
    planes = weight_planes(grid)
    corr = np.asarray(corr, dtype=np.float64)
    D = planes.shape[0]
    if corr.shape != (D, D):
        raise ValueError("correlation matrix does not match the SOFM input dimension")
    var = planes.reshape(D, -1).var(axis=1)
    dropped = {i: "uniform-plane" for i in range(D) if var[i] < var_min}

    iu, ju = np.triu_indices(D, k=1)
    strength = np.abs(corr[iu, ju])
    order = np.lexsort((ju, iu, -strength))
    for k in order:
        if strength[k] <= rho_max:
            break
        i, j = int(iu[k]), int(ju[k])
        if i in dropped or j in dropped:
            continue
        tol = 1e-12 * max(var[i], var[j], 1e-300)
        if abs(var[i] - var[j]) <= tol:
            loser, keeper = j, i
        elif var[i] < var[j]:
            loser, keeper = i, j
        else:
            loser, keeper = j, i
        dropped[loser] = f"correlated-with-{keeper}"
    kept = [i for i in range(D) if i not in dropped]
    return SelectionReport(corr, var, dict(sorted(dropped.items())), kept)
