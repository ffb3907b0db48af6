"""Adam optimizer, the epoch loop with best-validation checkpointing, and
the finite-difference gradient checker used across the test suite.
"""

import time
from dataclasses import dataclass

import numpy as np

from .dataio import DataError
from .layers import softmax_cross_entropy


@dataclass
class TrainConfig:
    lr: float = 0.001
    batch_size: int = 32
    epochs: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    patience: int = 0    # 0 = early stopping off

    def validate(self):
        if self.lr < 0:
            raise ValueError(f"lr must be >= 0, got {self.lr}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


class Adam:
    """Bias-corrected Adam over a list of (name, Param) pairs."""

    def __init__(self, params, lr=0.001, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self.m = [np.zeros_like(p.value) for _, p in params]
        self.v = [np.zeros_like(p.value) for _, p in params]

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1 - b1 ** self.t
        c2 = 1 - b2 ** self.t
        for (_, p), m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p.value -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.epsilon)


def evaluate_accuracy(model, windows, labels, batch_size=256):
    correct = 0
    for start in range(0, len(windows), batch_size):
        xb = windows[start : start + batch_size]
        yb = labels[start : start + batch_size]
        correct += int((model.predict(xb) == yb).sum())
    return correct / len(windows) if len(windows) else 0.0


def fit(model, dataset, cfg):
    """Train on the train split, select the epoch with the best validation
    accuracy (ties -> earliest), restore it into the model, and return the
    per-epoch history."""
    cfg.validate()
    train_x, train_y = dataset.subset("train")
    val_x, val_y = dataset.subset("val")
    if len(train_x) == 0:
        raise DataError("train split is empty")
    if len(val_x) == 0:
        raise DataError("val split is empty")
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(model.parameters(), cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon)
    history = []
    best_acc = -1.0
    best_params = None
    stale = 0
    for epoch in range(cfg.epochs):
        t0 = time.monotonic()
        order = rng.permutation(len(train_x))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            logits = model.forward(train_x[idx])
            loss, g = softmax_cross_entropy(logits, train_y[idx])
            model.zero_grad()
            model.backward(g)
            opt.step()
            losses.append(loss)
        val_acc = evaluate_accuracy(model, val_x, val_y)
        history.append({
            "epoch": epoch,
            "train_loss": float(np.mean(losses)),
            "val_accuracy": val_acc,
            "wall_ms": (time.monotonic() - t0) * 1000.0,
        })
        if val_acc > best_acc:
            best_acc = val_acc
            best_params = [(n, p.value.copy()) for n, p in model.parameters()]
            stale = 0
        else:
            stale += 1
            if cfg.patience and stale >= cfg.patience:
                break
    if best_params is not None:
        for (_, p), (_, saved) in zip(model.parameters(), best_params):
            p.value[...] = saved
    return history


def gradient_check(component, x_shape, n_samples=120, eps=1e-3, seed=0):
    """Max relative error between analytic gradients and central finite
    differences of loss = sum(forward(x) * G) for a fixed random G.

    The component must run in float64. A coordinate is skipped when the
    two perturbed forwards land on different ReLU / soft-threshold
    branches (branch_signature mismatch): the central difference straddles
    a kink there and is invalid.
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, x_shape)
    y = component.forward(x)
    g = rng.uniform(-1, 1, y.shape)

    component.zero_grad()
    gx = component.backward(g)
    params = component.parameters()
    analytic = {"__input__": gx}
    for name, p in params:
        analytic[name] = p.grad.copy()

    arrays = {"__input__": x}
    for name, p in params:
        arrays[name] = p.value
    names = list(arrays)

    def loss_at():
        out = component.forward(x)
        sig = [m.copy() for m in component.branch_signature()]
        return float(np.sum(out * g)), sig

    max_rel = 0.0
    evaluated = 0
    attempts = 0
    while evaluated < n_samples and attempts < 20 * n_samples:
        attempts += 1
        name = names[rng.integers(0, len(names))]
        arr = arrays[name]
        idx = tuple(rng.integers(0, d) for d in arr.shape)
        orig = arr[idx]
        arr[idx] = orig + eps
        l_plus, sig_plus = loss_at()
        arr[idx] = orig - eps
        l_minus, sig_minus = loss_at()
        arr[idx] = orig
        if not all(np.array_equal(a, b) for a, b in zip(sig_plus, sig_minus)):
            continue
        numeric = (l_plus - l_minus) / (2 * eps)
        a = float(analytic[name][idx])
        rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
        max_rel = max(max_rel, rel)
        evaluated += 1
    # restore caches to the unperturbed point
    component.forward(x)
    return max_rel
