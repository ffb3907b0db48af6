"""Primitive neural layers with explicit forward and backward passes.

Tensors are plain numpy arrays shaped (batch, channels, time), float32 by
default; float64 is used only by the gradient-check machinery. Layers keep
whatever caches their own backward needs, so a layer instance is serial:
one forward, then its matching backward.
"""

import math

import numpy as np

from . import kernels


class ShapeError(ValueError):
    """Raised when an operation receives a tensor of the wrong shape."""


def glorot_uniform(rng, shape, fan_in, fan_out, dtype):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Param:
    """A learnable array and its shape-identical gradient buffer."""

    __slots__ = ("value", "grad")

    def __init__(self, value):
        self.value = value
        self.grad = np.zeros_like(value)


class Layer:
    def forward(self, x):
        raise NotImplementedError

    def backward(self, gy):
        raise NotImplementedError

    def parameters(self):
        """List of (name, Param) pairs, names unique within the layer."""
        return []

    def zero_grad(self):
        for _, p in self.parameters():
            p.grad[...] = 0

    def branch_signature(self):
        """Active-branch masks of the last forward (ReLU sign patterns,
        soft-threshold dead zones). Finite differences across a branch
        change are invalid; the gradient checker compares signatures of
        the two perturbed evaluations and skips mismatches."""
        return []


class Conv1d(Layer):
    """1D convolution, cross-correlation convention, zero padding.

    padding=None means same padding (kernel // 2).
    """

    def __init__(self, in_channels, out_channels, kernel, stride=1, padding=None,
                 bias=True, rng=None, dtype=np.float32):
        if kernel % 2 == 0:
            raise ValueError(f"kernel must be odd, got {kernel}")
        if stride < 1:
            raise ValueError(f"stride must be >= 1, got {stride}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.stride = stride
        self.padding = kernel // 2 if padding is None else padding
        rng = rng or np.random.default_rng(0)
        fan_in = in_channels * kernel
        fan_out = out_channels * kernel
        self.weight = Param(glorot_uniform(rng, (out_channels, in_channels, kernel),
                                           fan_in, fan_out, dtype))
        self.bias = Param(np.zeros(out_channels, dtype=dtype)) if bias else None
        self._x = None

    def out_length(self, t):
        return (t + 2 * self.padding - self.kernel) // self.stride + 1

    def forward(self, x):
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise ShapeError(
                f"conv1d expects channels={self.in_channels}, "
                f"got input shape {x.shape}")
        self._x = x
        b = self.bias.value if self.bias is not None else None
        return kernels.conv1d_forward(x, self.weight.value, b,
                                      self.stride, self.padding)

    def backward(self, gy):
        x = self._x
        if gy.shape != (x.shape[0], self.out_channels, self.out_length(x.shape[2])):
            raise ShapeError(f"conv1d backward got grad shape {gy.shape}")
        gx, gw, gb = kernels.conv1d_backward(gy, x, self.weight.value,
                                             self.stride, self.padding)
        self.weight.grad += gw
        if self.bias is not None:
            self.bias.grad += gb
        return gx

    def parameters(self):
        out = [("weight", self.weight)]
        if self.bias is not None:
            out.append(("bias", self.bias))
        return out


class ReLU(Layer):
    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, 0)

    def backward(self, gy):
        return np.where(self._mask, gy, 0)

    def branch_signature(self):
        return [self._mask]


class Sigmoid(Layer):
    def forward(self, x):
        self._y = sigmoid(x)
        return self._y

    def backward(self, gy):
        return gy * self._y * (1 - self._y)


class GlobalAvgPool(Layer):
    """(B, C, T) -> (B, C, 1), arithmetic mean over time."""

    def forward(self, x):
        self._t = x.shape[2]
        return x.mean(axis=2, keepdims=True)

    def backward(self, gy):
        return np.repeat(gy / self._t, self._t, axis=2)


class Linear(Layer):
    """Dense map on flattened (batch, features) inputs."""

    def __init__(self, in_features, out_features, rng=None, dtype=np.float32):
        rng = rng or np.random.default_rng(0)
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Param(glorot_uniform(rng, (out_features, in_features),
                                           in_features, out_features, dtype))
        self.bias = Param(np.zeros(out_features, dtype=dtype))

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeError(
                f"linear expects features={self.in_features}, got shape {x.shape}")
        self._x = x
        return x @ self.weight.value.T + self.bias.value

    def backward(self, gy):
        self.weight.grad += gy.T @ self._x
        self.bias.grad += gy.sum(axis=0)
        return gy @ self.weight.value

    def parameters(self):
        return [("weight", self.weight), ("bias", self.bias)]


def sigmoid(x):
    # split by sign for overflow safety
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x):
    return np.maximum(x, 0)


def split_channels(x, s):
    """Split (B, C, T) into s equal channel groups; inverse of concat_channels."""
    if x.shape[1] % s != 0:
        raise ShapeError(
            f"channels ({x.shape[1]}) must be divisible by scale count s={s}")
    return np.split(x, s, axis=1)

def concat_channels(parts):
    return np.concatenate(parts, axis=1)


def _expand_tau(tau, x):
    tau = np.asarray(tau)
    if np.any(tau < 0):
        raise ValueError("soft threshold tau must be non-negative")
    if tau.ndim == 1:       # per channel
        return tau[None, :, None]
    if tau.ndim == 2:       # per (batch, channel)
        return tau[:, :, None]
    raise ShapeError(f"tau must be per-channel or per-(batch,channel), got shape {tau.shape}")


def soft_threshold(x, tau):
    """Shrinkage: zero inside [-tau, tau], shrink toward zero outside."""
    t = _expand_tau(tau, x)
    return np.sign(x) * np.maximum(np.abs(x) - t, 0)


def soft_threshold_backward(gy, x, tau):
    """Subgradient of soft_threshold.

    Boundary |x| == tau is assigned to the dead zone. grad_tau is summed over
    the axes the threshold was broadcast over, matching tau's shape.
    """
    t = _expand_tau(tau, x)
    live = np.abs(x) > t
    gx = np.where(live, gy, 0)
    gt_full = np.where(live, -np.sign(x) * gy, 0)
    tau = np.asarray(tau)
    if tau.ndim == 1:
        gt = gt_full.sum(axis=(0, 2))
    else:
        gt = gt_full.sum(axis=2)
    return gx, gt


def softmax_cross_entropy(logits, labels):
    """Mean NLL over the batch; returns (loss, grad_logits).

    Stabilized by max subtraction; grad = (softmax - one-hot) / batch.
    """
    labels = np.asarray(labels)
    n, c = logits.shape
    if labels.shape != (n,):
        raise ShapeError(f"labels shape {labels.shape} does not match batch {n}")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= c:
        raise ValueError(f"labels must be in [0, {c})")
    z = logits - logits.max(axis=1, keepdims=True)
    ez = np.exp(z)
    p = ez / ez.sum(axis=1, keepdims=True)
    loss = float(-np.mean(np.log(p[np.arange(n), labels] + 1e-300)))
    grad = p.copy()
    grad[np.arange(n), labels] -= 1
    return loss, (grad / n).astype(logits.dtype)
