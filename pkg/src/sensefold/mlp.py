"""A small feed-forward softmax classifier on numpy.

Rectifier hidden layers, cross-entropy loss, Adam updates, optional early
stopping on a held-back validation slice. The analytic loss gradient is
exposed (``loss_and_grads``) so it can be checked against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class MlpParams:
    hidden: tuple[int, ...] = (100,)
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 1e-3
    patience: int = 10
    val_fraction: float = 0.1
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8


class MlpTrainingError(Exception):
    def __init__(self, message: str, epoch: int):
        super().__init__(f"{message} (epoch {epoch})")
        self.epoch = epoch


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class MlpNet:
    """Layer sizes include input and output: ``[d_in, h1, ..., K]``.

    Hidden weights use He-normal init; the output layer starts at zero so an
    untrained net emits the uniform distribution.
    """

    def __init__(self, sizes: list[int], seed: int = 0):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = list(sizes)
        rng = np.random.default_rng(seed)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for i in range(len(sizes) - 1):
            fan_in, fan_out = sizes[i], sizes[i + 1]
            if i == len(sizes) - 2:
                w = np.zeros((fan_in, fan_out))
            else:
                w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    # -- parameter vector helpers (used by the finite-difference check)

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for pair in zip(self.weights, self.biases) for p in pair])

    def set_flat(self, flat: np.ndarray) -> None:
        pos = 0
        for i in range(len(self.weights)):
            for holder, arr in ((self.weights, self.weights[i]), (self.biases, self.biases[i])):
                size = arr.size
                holder[i] = flat[pos:pos + size].reshape(arr.shape).copy()
                pos += size
        if pos != flat.size:
            raise ValueError("flat parameter vector has the wrong length")

    # -- forward / backward

    def _forward(self, X: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        a = X
        activations = [a]
        for i in range(len(self.weights) - 1):
            a = np.maximum(a @ self.weights[i] + self.biases[i], 0.0)
            activations.append(a)
        logits = a @ self.weights[-1] + self.biases[-1]
        return activations, logits

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        _, logits = self._forward(np.asarray(X, dtype=np.float64))
        return _softmax(logits)

    def loss(self, X: np.ndarray, y: np.ndarray) -> float:
        p = self.predict_proba(X)
        eps = 1e-12
        return float(-np.mean(np.log(p[np.arange(len(y)), y] + eps)))

    def loss_and_grads(self, X: np.ndarray, y: np.ndarray) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
        """Mean cross-entropy and its gradients w.r.t. weights and biases."""
        X = np.asarray(X, dtype=np.float64)
        n = X.shape[0]
        activations, logits = self._forward(X)
        probs = _softmax(logits)
        eps = 1e-12
        loss = float(-np.mean(np.log(probs[np.arange(n), y] + eps)))

        delta = probs.copy()
        delta[np.arange(n), y] -= 1.0
        delta /= n

        grad_w: list[np.ndarray] = [np.empty(0)] * len(self.weights)
        grad_b: list[np.ndarray] = [np.empty(0)] * len(self.biases)
        for i in range(len(self.weights) - 1, -1, -1):
            grad_w[i] = activations[i].T @ delta
            grad_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (activations[i] > 0)
        return loss, grad_w, grad_b


@dataclass
class MlpFitResult:
    net: MlpNet
    epochs_run: int
    best_val_loss: float = field(default=np.nan)


def fit_mlp(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    params: MlpParams,
    seed: int = 0,
) -> MlpFitResult:
    """Train with Adam; early-stop on validation loss when the data allows a
    non-empty validation slice."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    n = X.shape[0]
    rng = np.random.default_rng(seed)

    n_val = int(round(params.val_fraction * n))
    use_early_stop = n_val >= 1 and n - n_val >= 1
    if use_early_stop:
        perm = rng.permutation(n)
        val_idx, tr_idx = perm[:n_val], perm[n_val:]
        X_tr, y_tr = X[tr_idx], y[tr_idx]
        X_val, y_val = X[val_idx], y[val_idx]
    else:
        X_tr, y_tr = X, y
        X_val = y_val = None

    net = MlpNet([X.shape[1], *params.hidden, n_classes], seed=seed)
    m_w = [np.zeros_like(w) for w in net.weights]
    v_w = [np.zeros_like(w) for w in net.weights]
    m_b = [np.zeros_like(b) for b in net.biases]
    v_b = [np.zeros_like(b) for b in net.biases]
    step = 0

    best_val = np.inf
    best_params: np.ndarray | None = None
    stale = 0
    epochs_run = 0

    for epoch in range(1, params.epochs + 1):
        epochs_run = epoch
        order = rng.permutation(len(X_tr))
        for start in range(0, len(X_tr), params.batch_size):
            batch = order[start:start + params.batch_size]
            loss, gw, gb = net.loss_and_grads(X_tr[batch], y_tr[batch])
            if not np.isfinite(loss):
                raise MlpTrainingError("non-finite training loss", epoch)
            step += 1
            b1, b2 = params.adam_beta1, params.adam_beta2
            corr1 = 1.0 - b1 ** step
            corr2 = 1.0 - b2 ** step
            for i in range(len(net.weights)):
                m_w[i] = b1 * m_w[i] + (1 - b1) * gw[i]
                v_w[i] = b2 * v_w[i] + (1 - b2) * gw[i] ** 2
                net.weights[i] -= params.learning_rate * (m_w[i] / corr1) / (
                    np.sqrt(v_w[i] / corr2) + params.adam_eps
                )
                m_b[i] = b1 * m_b[i] + (1 - b1) * gb[i]
                v_b[i] = b2 * v_b[i] + (1 - b2) * gb[i] ** 2
                net.biases[i] -= params.learning_rate * (m_b[i] / corr1) / (
                    np.sqrt(v_b[i] / corr2) + params.adam_eps
                )
        if use_early_stop:
            val_loss = net.loss(X_val, y_val)
            if not np.isfinite(val_loss):
                raise MlpTrainingError("non-finite validation loss", epoch)
            if val_loss < best_val - 1e-6:
                best_val = val_loss
                best_params = net.get_flat()
                stale = 0
            else:
                stale += 1
                if stale >= params.patience:
                    break

    if best_params is not None:
        net.set_flat(best_params)
    return MlpFitResult(net=net, epochs_run=epochs_run, best_val_loss=float(best_val))
