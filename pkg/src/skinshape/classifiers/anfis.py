"""Subtractive clustering and a first-order TSK fuzzy model trained ANFIS-style."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lstsq

from ..select import standardize
from .cv import DEFAULT_FOLDS, TrainReport, check_binary_labels, cross_validate

DEFAULT_RADIUS = 0.5
SQUASH = 1.5
ACCEPT_RATIO = 0.5
REJECT_RATIO = 0.15
MF_LEARNING_RATE = 0.01
MIN_WIDTH = 1e-3


def _sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d2 = np.sum(A**2, axis=1)[:, None] - 2.0 * A @ B.T + np.sum(B**2, axis=1)[None, :]
    return np.maximum(d2, 0.0)


def subtractive_clustering(
    X,
    radius: float = DEFAULT_RADIUS,
    squash: float = SQUASH,
    accept: float = ACCEPT_RATIO,
    reject: float = REJECT_RATIO,
    max_centers: int | None = None,
) -> np.ndarray:
    """Chiu's subtractive clustering; returns the selected data points as centers.

    A candidate whose potential falls between the reject and accept ratios of
    the first potential is kept only if it is far enough from existing
    centers relative to its potential.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise ValueError("no data to cluster")
    if radius <= 0:
        raise ValueError("radius must be positive")
    alpha = 4.0 / radius**2
    beta = 4.0 / (squash * radius) ** 2
    potential = np.zeros(len(X))
    for start in range(0, len(X), 1024):
        chunk = X[start : start + 1024]
        potential[start : start + 1024] = np.exp(-alpha * _sq_dists(chunk, X)).sum(axis=1)

    first = int(np.argmax(potential))
    p_first = potential[first]
    centers = [first]
    p_last = p_first
    while max_centers is None or len(centers) < max_centers:
        c = X[centers[-1]]
        potential = potential - p_last * np.exp(-beta * np.sum((X - c) ** 2, axis=1))
        while True:
            k = int(np.argmax(potential))
            pk = potential[k]
            if pk > accept * p_first:
                break
            if pk < reject * p_first or pk <= 0:
                k = -1
                break
            dmin = np.sqrt(np.min(np.sum((X[centers] - X[k]) ** 2, axis=1)))
            if dmin / radius + pk / p_first >= 1.0:
                break
            potential[k] = 0.0
        if k < 0:
            break
        centers.append(k)
        p_last = pk
    return X[centers].copy()


@dataclass
class NfModel:
    centers: np.ndarray  # (R, D), standardized space
    widths: np.ndarray  # (R, D)
    coefs: np.ndarray  # (R, D + 1); last column is the constant term
    mean: np.ndarray
    std: np.ndarray

    @property
    def n_rules(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def raw_output(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} features, got {X.shape[1]}")
        Z = (X - self.mean) / self.std
        wbar = firing_strengths(Z, self.centers, self.widths)
        return np.sum(wbar * rule_outputs(Z, self.coefs), axis=1)

    def predict(self, X) -> np.ndarray:
        return np.clip(self.raw_output(X), 0.0, 1.0)


def nf_predict(m: NfModel, x) -> float | np.ndarray:
    out = m.predict(x)
    return float(out[0]) if np.ndim(x) == 1 else out


def firing_strengths(Z, centers, widths) -> np.ndarray:
    """Normalized rule firing strengths (product of Gaussian memberships)."""
    log_w = -0.5 * np.sum(
        ((Z[:, None, :] - centers[None, :, :]) / widths[None, :, :]) ** 2, axis=2
    )
    log_w -= log_w.max(axis=1, keepdims=True)
    w = np.exp(log_w)
    return w / w.sum(axis=1, keepdims=True)


def rule_outputs(Z, coefs) -> np.ndarray:
    return Z @ coefs[:, :-1].T + coefs[:, -1][None, :]


def design_matrix(Z, wbar) -> np.ndarray:
    """Rows ``[wbar_r * z, wbar_r]`` for every rule, so output = A @ coefs.ravel()."""
    n, R = wbar.shape
    Zaug = np.hstack([Z, np.ones((n, 1))])
    return (wbar[:, :, None] * Zaug[:, None, :]).reshape(n, -1)


def solve_consequents(Z, y, centers, widths) -> tuple:
    """Least-squares consequents for fixed memberships. Returns ``(coefs, A, residual)``."""
    wbar = firing_strengths(Z, centers, widths)
    A = design_matrix(Z, wbar)
    sol, *_ = lstsq(A, y, lapack_driver="gelsd")
    coefs = sol.reshape(centers.shape[0], Z.shape[1] + 1)
    return coefs, A, y - A @ sol


def _mf_gradient(Z, y, centers, widths, coefs):
    wbar = firing_strengths(Z, centers, widths)
    yr = rule_outputs(Z, coefs)
    f = np.sum(wbar * yr, axis=1)
    err = 2.0 * (f - y) / len(y)
    M = err[:, None] * wbar * (yr - f[:, None])  # dE/dlog w_r per sample
    Msum = M.sum(axis=0)[:, None]
    MZ = M.T @ Z
    MZ2 = M.T @ (Z**2)
    g_c = (MZ - Msum * centers) / widths**2
    g_w = (MZ2 - 2.0 * centers * MZ + centers**2 * Msum) / widths**3
    return g_c, g_w


def initial_widths(Z, n_rules: int, radius: float) -> np.ndarray:
    spread = Z.max(axis=0) - Z.min(axis=0)
    spread = np.where(spread > 0, spread, 1.0)
    return np.tile(np.maximum(radius * spread / np.sqrt(8.0), MIN_WIDTH), (n_rules, 1))


def _hybrid_path(Z, y, centers, widths, epochs, rate, callback=None):
    """Alternate least-squares consequents and one gradient step on memberships.

    Returns the state after ``epochs`` membership updates plus the training
    loss of each of the ``epochs + 1`` visited states.
    """
    centers, widths = centers.copy(), widths.copy()
    losses = []
    for epoch in range(epochs + 1):
        coefs, _, resid = solve_consequents(Z, y, centers, widths)
        losses.append(float(np.mean(resid**2)))
        if callback:
            callback(centers, widths, coefs)
        if epoch == epochs:
            break
        g_c, g_w = _mf_gradient(Z, y, centers, widths, coefs)
        centers -= rate * g_c
        widths = np.maximum(widths - rate * g_w, MIN_WIDTH)
    return centers, widths, coefs, np.asarray(losses)


def _fit(X, y, centers_raw, epochs, radius, rate, callback=None):
    Z, mean, std = standardize(X)
    centers = (np.atleast_2d(centers_raw) - mean) / std
    widths = initial_widths(Z, centers.shape[0], radius)
    cb = None
    if callback:
        cb = lambda c, w, k: callback(NfModel(c, w, k, mean, std))
    c, w, k, losses = _hybrid_path(Z, y, centers, widths, epochs, rate, cb)
    return NfModel(c, w, k, mean, std), losses


def anfis_train(
    X,
    y,
    centers=None,
    epochs: int = 50,
    seed: int = 0,
    folds: int = DEFAULT_FOLDS,
    radius: float = DEFAULT_RADIUS,
    rate: float = MF_LEARNING_RATE,
    max_rules: int | None = None,
    classify: bool = True,
) -> tuple:
    """Hybrid-trained TSK model with cross-validated stopping.

    ``centers`` are rule centers in input units; when omitted they come from
    subtractive clustering of the standardized data. ``classify=False``
    allows real-valued targets. Returns ``(NfModel, TrainReport)``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = check_binary_labels(y) if classify else np.asarray(y, dtype=np.float64)
    if centers is None:
        Z, mean, std = standardize(X)
        centers = subtractive_clustering(Z, radius, max_centers=max_rules) * std + mean
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    if centers.shape[0] == 0:
        raise ValueError("zero rules")

    def fit_path(Xtr, ytr, Xva, n_epochs):
        preds = []
        _, losses = _fit(
            Xtr, ytr, centers, n_epochs, radius, rate,
            lambda m: preds.append(np.clip(m.raw_output(Xva), 0.0, 1.0) if classify else m.raw_output(Xva)),
        )
        return losses, np.vstack(preds)

    if folds and folds >= 2:
        selected, fields = cross_validate(fit_path, X, y, epochs, seed, folds)
    else:
        selected = epochs
        fields = None
    model, final_loss = _fit(X, y, centers, selected, radius, rate)
    if fields is None:
        fields = dict(
            train_loss=final_loss, val_loss=np.full_like(final_loss, np.nan),
            fold_tp=[], fold_fp=[], oof_scores=np.array([]), run_losses=[],
        )
    fields["run_losses"].append(final_loss)
    report = TrainReport(selected_epoch=selected, seed=seed, final_loss=final_loss, **fields)
    return model, report
