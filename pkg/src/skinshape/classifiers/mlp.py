"""One-hidden-layer sigmoid MLP trained by scaled conjugate gradient."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..select import standardize
from .cv import DEFAULT_FOLDS, TrainReport, check_binary_labels, cross_validate

HIDDEN_UNITS = 10
INIT_RANGE = 0.5


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def n_params(dim: int, hidden: int = HIDDEN_UNITS) -> int:
    return hidden * dim + hidden + hidden + 1


def unpack(theta: np.ndarray, dim: int, hidden: int = HIDDEN_UNITS):
    i = hidden * dim
    W1 = theta[:i].reshape(hidden, dim)
    b1 = theta[i : i + hidden]
    w2 = theta[i + hidden : i + 2 * hidden]
    b2 = theta[i + 2 * hidden]
    return W1, b1, w2, b2


def forward(theta, X, hidden=HIDDEN_UNITS):
    W1, b1, w2, b2 = unpack(theta, X.shape[1], hidden)
    a = sigmoid(X @ W1.T + b1)
    return a, sigmoid(a @ w2 + b2)


def mse(theta, X, y, hidden=HIDDEN_UNITS) -> float:
    _, out = forward(theta, X, hidden)
    return float(np.mean((out - y) ** 2))


def mse_grad(theta, X, y, hidden=HIDDEN_UNITS) -> np.ndarray:
    """Analytic gradient of :func:`mse` with respect to the packed parameters."""
    a, out = forward(theta, X, hidden)
    W1, b1, w2, b2 = unpack(theta, X.shape[1], hidden)
    delta_out = 2.0 * (out - y) * out * (1.0 - out) / len(y)
    g_w2 = a.T @ delta_out
    g_b2 = delta_out.sum()
    delta_h = np.outer(delta_out, w2) * a * (1.0 - a)
    g_W1 = delta_h.T @ X
    g_b1 = delta_h.sum(axis=0)
    return np.concatenate([g_W1.ravel(), g_b1, g_w2, [g_b2]])


def scg(f, grad, x0: np.ndarray, iterations: int, callback=None):
    """Scaled conjugate gradient (Moller, 1993).

    ``callback(x)`` is invoked with the initial point and after every
    iteration, including rejected ones, so it sees ``iterations + 1`` states.
    Returns ``(x, losses)`` where ``losses[k]`` is the objective after
    iteration ``k``; rejected steps leave it unchanged, so it never increases.
    """
    sigma0 = 1e-4
    beta, beta_min, beta_max = 1.0, 1e-15, 1e100
    x = np.array(x0, dtype=np.float64)
    nparams = x.size
    f_old = f(x)
    f_now = f_old
    g_new = grad(x)
    g_old = g_new
    d = -g_new
    success, n_success = True, 0
    losses = [f_now]
    if callback:
        callback(x)
    mu = kappa = theta = 0.0
    converged = False
    for _ in range(iterations):
        if converged:
            losses.append(f_now)
            if callback:
                callback(x)
            continue
        if success:
            mu = float(d @ g_new)
            if mu >= 0:
                d = -g_new
                mu = float(d @ g_new)
            kappa = float(d @ d)
            if kappa < np.finfo(float).eps:
                converged = True
                losses.append(f_now)
                if callback:
                    callback(x)
                continue
            sigma = sigma0 / np.sqrt(kappa)
            g_plus = grad(x + sigma * d)
            theta = float(d @ (g_plus - g_new)) / sigma
        delta = theta + beta * kappa
        if delta <= 0:
            delta = beta * kappa
            beta = beta - theta / kappa
        alpha = -mu / delta
        x_new = x + alpha * d
        f_new = f(x_new)
        Delta = 2.0 * (f_new - f_old) / (alpha * mu)
        if Delta >= 0 and f_new <= f_old:
            success = True
            n_success += 1
            x = x_new
            f_now = f_new
        else:
            success = False
            f_now = f_old
        losses.append(f_now)
        if callback:
            callback(x)
        if success:
            f_old = f_new
            g_old = g_new
            g_new = grad(x)
            if float(g_new @ g_new) == 0.0:
                converged = True
                continue
        if Delta < 0.25:
            beta = min(4.0 * beta, beta_max)
        if Delta > 0.75:
            beta = max(0.5 * beta, beta_min)
        if n_success == nparams:
            d = -g_new
            n_success = 0
        elif success:
            gamma = float((g_old - g_new) @ g_new) / mu
            d = gamma * d - g_new
    return x, np.asarray(losses)


@dataclass
class MlpModel:
    theta: np.ndarray
    dim: int
    mean: np.ndarray
    std: np.ndarray
    hidden: int = HIDDEN_UNITS

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} features, got {X.shape[1]}")
        _, out = forward(self.theta, (X - self.mean) / self.std, self.hidden)
        return out


def mlp_predict(m: MlpModel, x) -> float | np.ndarray:
    """Score in (0, 1) for one vector, or an array for a matrix."""
    out = m.predict(x)
    return float(out[0]) if np.ndim(x) == 1 else out


def init_theta(dim: int, seed: int, hidden: int = HIDDEN_UNITS) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-INIT_RANGE, INIT_RANGE, n_params(dim, hidden))


def _fit(X, y, epochs, seed, hidden, callback=None):
    Z, mean, std = standardize(X)
    theta0 = init_theta(X.shape[1], seed, hidden)
    cb = (lambda th: callback(th, mean, std)) if callback else None
    theta, losses = scg(
        lambda th: mse(th, Z, y, hidden), lambda th: mse_grad(th, Z, y, hidden), theta0, epochs, cb
    )
    return MlpModel(theta, X.shape[1], mean, std, hidden), losses


def mlp_train(
    X, y, epochs: int = 200, seed: int = 0, folds: int = DEFAULT_FOLDS, hidden: int = HIDDEN_UNITS
) -> tuple:
    """Cross-validated SCG training.

    Each fold is trained for ``epochs`` iterations while validation error is
    tracked; the epoch with the lowest mean validation error is then used to
    refit on all data. Returns ``(MlpModel, TrainReport)``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = check_binary_labels(y)

    def fit_path(Xtr, ytr, Xva, n_epochs):
        preds = []

        def record(th, mean, std):
            _, out = forward(th, (Xva - mean) / std, hidden)
            preds.append(out)

        _, losses = _fit(Xtr, ytr, n_epochs, seed, hidden, record)
        return losses, np.vstack(preds)

    selected, fields = cross_validate(fit_path, X, y, epochs, seed, folds)
    model, final_loss = _fit(X, y, selected, seed, hidden)
    fields["run_losses"].append(final_loss)
    report = TrainReport(selected_epoch=selected, seed=seed, final_loss=final_loss, **fields)
    return model, report
