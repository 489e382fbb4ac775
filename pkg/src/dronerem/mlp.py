"""Single-hidden-layer perceptron trained with Adam, written against numpy.

The network is ``linear(sigmoid(X @ W1 + b1) @ W2 + b2)`` and minimizes the
mean squared error over each mini-batch.
"""
from __future__ import annotations

import numpy as np


def sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def init_params(n_in: int, n_hidden: int, rng: np.random.Generator,
                output_bias: float = 0.0) -> dict[str, np.ndarray]:
    """Glorot-uniform weights, zero hidden bias."""
    lim1 = np.sqrt(6.0 / (n_in + n_hidden))
    lim2 = np.sqrt(6.0 / (n_hidden + 1))
    return {
        "W1": rng.uniform(-lim1, lim1, size=(n_in, n_hidden)),
        "b1": np.zeros(n_hidden),
        "W2": rng.uniform(-lim2, lim2, size=(n_hidden, 1)),
        "b2": np.array([float(output_bias)]),
    }


def forward(params, X):
    hidden = sigmoid(X @ params["W1"] + params["b1"])
    out = hidden @ params["W2"] + params["b2"]
    return out[:, 0], hidden


def loss_and_grad(params, X, y):
    """Mean squared error and its gradient with respect to every parameter."""
    pred, hidden = forward(params, X)
    n = X.shape[0]
    err = pred - y
    loss = float(np.mean(err * err))
    d_out = (2.0 / n) * err[:, None]
    d_hidden = (d_out @ params["W2"].T) * hidden * (1.0 - hidden)
    grads = {
        "W1": X.T @ d_hidden,
        "b1": d_hidden.sum(axis=0),
        "W2": hidden.T @ d_out,
        "b2": d_out.sum(axis=0),
    }
    return loss, grads


class Adam:
    """Adam with bias-corrected moment estimates; updates arrays in place."""

    def __init__(self, learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = epsilon
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name, g in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params[name] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def train(X, y, n_hidden=16, epochs=200, batch_size=32, seed=0,
          learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8,
          X_val=None, y_val=None):
    """Mini-batch Adam training.

    Returns ``(params, history)``; ``history`` holds the full-set training MSE
    after every epoch and, if a validation set is given, the validation MSE
    and the best epoch (1-based).
    """
    rng = np.random.default_rng(seed)
    # start the linear output at the target mean; Adam's per-step cap makes
    # crawling there from zero cost tens of thousands of steps
    params = init_params(X.shape[1], n_hidden, rng, output_bias=float(np.mean(y)))
    opt = Adam(learning_rate, beta1, beta2, epsilon)
    n = X.shape[0]
    history = {"train_mse": [], "val_mse": [], "best_epoch": None}
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            loss, grads = loss_and_grad(params, X[batch], y[batch])
            if not np.isfinite(loss):
                raise FloatingPointError(
                    f"non-finite loss at epoch {epoch}, batch starting {start}: {loss}")
            opt.step(params, grads)
        pred, _ = forward(params, X)
        history["train_mse"].append(float(np.mean((pred - y) ** 2)))
        if X_val is not None:
            pv, _ = forward(params, X_val)
            history["val_mse"].append(float(np.mean((pv - y_val) ** 2)))
    if history["val_mse"]:
        history["best_epoch"] = int(np.argmin(history["val_mse"])) + 1
    return params, history
