"""Multilayer perceptron with PReLU hidden units trained by Adam.

Hidden layers apply an affine map followed by PReLU with one learnable
slope per unit; the output layer is affine with an identity link for
regression and a sigmoid for classification. Inputs are expected in the
dataset module's neural encoding (one-hot categoricals, min-max scaled
continuous features).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatchError, EmptyDataError, ShapeMismatchError

LOGIT_CLIP = 36.0  # keeps sigmoid outputs strictly inside (0, 1) in float64


def prelu(x, alpha):
    """x for x > 0, alpha * x otherwise (elementwise)."""
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, x, alpha * x)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -LOGIT_CLIP, LOGIT_CLIP)))


@dataclass
class MlpModel:
    weights: list[np.ndarray]   # layer l: (fan_in, fan_out)
    biases: list[np.ndarray]    # layer l: (fan_out,)
    alphas: list[np.ndarray]    # hidden layers only: (fan_out,)
    link: str                   # "identity" or "sigmoid"
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def parameters(self) -> list[np.ndarray]:
        return list(self.weights) + list(self.biases) + list(self.alphas)

    def set_parameters(self, params: Sequence[np.ndarray]) -> None:
        nw, nb = len(self.weights), len(self.biases)
        self.weights = [np.asarray(p, dtype=float) for p in params[:nw]]
        self.biases = [np.asarray(p, dtype=float) for p in params[nw:nw + nb]]
        self.alphas = [np.asarray(p, dtype=float) for p in params[nw + nb:]]


@dataclass
class ForwardCache:
    inputs: np.ndarray
    pre_activations: list[np.ndarray]  # per layer, before PReLU / link
    activations: list[np.ndarray]      # per layer, after PReLU (hidden only)
    output: np.ndarray


def _affine(a: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise a @ W + b.

    Each row is a separate vector-matrix product so its floating-point
    result never depends on the batch shape; a record must predict
    identically alone and inside any batch.
    """
    out = np.empty((a.shape[0], W.shape[1]))
    for i in range(a.shape[0]):
        out[i] = a[i] @ W
    return out + b


def forward(m: MlpModel, X, with_cache: bool = False):
    """Batch forward pass; returns predictions, optionally with the cache for backprop."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != m.weights[0].shape[0]:
        raise DimensionMismatchError(
            f"input width {X.shape[1]} != expected {m.weights[0].shape[0]}")
    a = X
    pres, acts = [], []
    n_hidden = len(m.alphas)
    for l, (W, b) in enumerate(zip(m.weights, m.biases)):
        z = _affine(a, W, b)
        pres.append(z)
        if l < n_hidden:
            a = np.where(z > 0, z, m.alphas[l] * z)
            acts.append(a)
    raw = pres[-1][:, 0]
    out = _sigmoid(raw) if m.link == "sigmoid" else raw
    if with_cache:
        return out, ForwardCache(X, pres, acts, out)
    return out


def _loss_value(y: np.ndarray, out: np.ndarray, loss: str) -> float:
    if loss == "squared":
        return float(0.5 * np.mean((out - y) ** 2))
    p = np.clip(out, 1e-15, 1.0 - 1e-15)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def backward(m: MlpModel, X, y, loss: str = "squared",
             cache: Optional[ForwardCache] = None):
    """Analytic gradients of the mean loss for all weights, biases and PReLU slopes.

    The slope gradient is net_j where the unit's pre-activation is <= 0,
    zero otherwise, accumulated over the batch.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if cache is None:
        _, cache = forward(m, X, with_cache=True)
    n = len(y)
    if loss == "squared" and m.link == "sigmoid":
        out = cache.output
        delta = (out - y) * out * (1.0 - out) / n
    else:
        # identity link with squared loss, or the sigmoid/log-loss pair,
        # both collapse to (output - y) at the raw pre-activation
        delta = (cache.output - y) / n

    n_hidden = len(m.alphas)
    grads_w = [None] * len(m.weights)
    grads_b = [None] * len(m.biases)
    grads_a = [None] * n_hidden
    grad = delta.reshape(-1, 1)  # gradient wrt layer pre-activation
    for l in range(len(m.weights) - 1, -1, -1):
        a_prev = cache.inputs if l == 0 else cache.activations[l - 1]
        grads_w[l] = a_prev.T @ grad
        grads_b[l] = grad.sum(axis=0)
        if l > 0:
            z_prev = cache.pre_activations[l - 1]
            upstream = grad @ m.weights[l].T
            grads_a[l - 1] = np.sum(upstream * np.where(z_prev > 0, 0.0, z_prev), axis=0)
            grad = upstream * np.where(z_prev > 0, 1.0, m.alphas[l - 1])
    return grads_w, grads_b, grads_a


@dataclass
class AdamState:
    """First/second moment accumulators with bias-corrected updates."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    learning_rate: float = 0.03
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], learning_rate: float = 0.03,
                   beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        return cls([np.zeros_like(p) for p in params],
                   [np.zeros_like(p) for p in params],
                   0, learning_rate, beta1, beta2, eps)


def adam_step(state: AdamState, params: Sequence[np.ndarray],
              grads: Sequence[np.ndarray]):
    """One bias-corrected Adam update; returns (new_params, new_state) without mutation."""
    if len(params) != len(grads):
        raise ShapeMismatchError("params and grads must align")
    for p, g in zip(params, grads):
        if np.shape(p) != np.shape(g):
            raise ShapeMismatchError(f"shape {np.shape(g)} does not match {np.shape(p)}")
    t = state.step + 1
    new_m, new_v, new_p = [], [], []
    for p, g, m1, v1 in zip(params, grads, state.m, state.v):
        m2 = state.beta1 * m1 + (1.0 - state.beta1) * g
        v2 = state.beta2 * v1 + (1.0 - state.beta2) * g * g
        m_hat = m2 / (1.0 - state.beta1 ** t)
        v_hat = v2 / (1.0 - state.beta2 ** t)
        new_m.append(m2)
        new_v.append(v2)
        new_p.append(p - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps))
    return new_p, AdamState(new_m, new_v, t, state.learning_rate,
                            state.beta1, state.beta2, state.eps)


@dataclass(frozen=True)
class MlpParams:
    hidden: tuple[int, ...] = (64,)
    epochs: int = 500
    batch_size: int = 32
    learning_rate: float = 0.03
    seed: int = 0
    patience: Optional[int] = 50
    val_fraction: float = 0.15
    alpha_init: float = 0.25


def init_mlp(n_inputs: int, params: MlpParams, link: str) -> MlpModel:
    """He-style uniform fan-in initialization, seed-controlled."""
    rng = np.random.default_rng(params.seed)
    sizes = [n_inputs] + list(params.hidden) + [1]
    weights, biases, alphas = [], [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    for width in params.hidden:
        alphas.append(np.full(width, params.alpha_init))
    return MlpModel(weights, biases, alphas, link)


def fit_mlp(X, y, params: MlpParams = MlpParams(), loss: str = "squared",
            X_val=None, y_val=None) -> MlpModel:
    """Mini-batch Adam training with optional early stopping on validation loss.

    With no explicit validation set, val_fraction of the rows (seeded carve)
    is held out when patience is set; the best-validation snapshot is restored.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(X) == 0:
        raise EmptyDataError("cannot fit on empty data")
    if len(X) != len(y):
        raise EmptyDataError(f"X has {len(X)} rows, y has {len(y)}")
    link = "sigmoid" if loss == "logistic" else "identity"
    rng = np.random.default_rng(params.seed)
    model = init_mlp(X.shape[1], params, link)

    if X_val is None and params.patience is not None and params.val_fraction > 0 \
            and len(X) >= 10:
        order = rng.permutation(len(X))
        n_val = max(1, int(round(params.val_fraction * len(X))))
        val_idx, tr_idx = order[:n_val], order[n_val:]
        X_val, y_val = X[val_idx], y[val_idx]
        X, y = X[tr_idx], y[tr_idx]

    opt = AdamState.for_params(model.parameters(), learning_rate=params.learning_rate)
    best_val = np.inf
    best_params = None
    stall = 0
    batch = max(1, min(params.batch_size, len(X)))
    for _ in range(params.epochs):
        order = rng.permutation(len(X))
        for start in range(0, len(X), batch):
            rows = order[start:start + batch]
            _, cache = forward(model, X[rows], with_cache=True)
            gw, gb, ga = backward(model, X[rows], y[rows], loss, cache)
            new_params, opt = adam_step(opt, model.parameters(), gw + gb + ga)
            model.set_parameters(new_params)
        model.train_losses.append(_loss_value(y, forward(model, X), loss))
        if X_val is not None and len(X_val):
            val = _loss_value(np.asarray(y_val, dtype=float).ravel(),
                              forward(model, X_val), loss)
            model.val_losses.append(val)
            if val < best_val - 1e-12:
                best_val = val
                best_params = [p.copy() for p in model.parameters()]
                stall = 0
            else:
                stall += 1
                if params.patience is not None and stall >= params.patience:
                    break
    if best_params is not None:
        model.set_parameters(best_params)
    return model


def mlp_predict(m: MlpModel, X) -> np.ndarray:
    return forward(m, X)
