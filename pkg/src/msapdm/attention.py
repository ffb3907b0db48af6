"""Efficient Channel Attention: adaptive odd kernel size, a k-tap 1D
convolution across the channel descriptor, sigmoid gating, channel rescale.

The whole parameter budget of one instance is its k kernel taps (no bias).
"""

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .layers import Layer, Param, ShapeError, glorot_uniform, sigmoid


def eca_kernel_size(channels, gamma=2, b=1, rounding="floor-odd"):
    """Adaptive kernel size k from the channel count.

    t = |log2(C)/gamma + b/gamma|. "floor-odd" takes the largest odd
    integer <= t (floored at 1); "nearest-odd-up" bumps an even floor up
    instead, the convention common in published ECA code.
    """
    if channels < 1:
        raise ValueError(f"channels must be >= 1, got {channels}")
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    t = abs(math.log2(channels) / gamma + b / gamma)
    k = math.floor(t)
    if k % 2 == 0:
        k += 1 if rounding == "nearest-odd-up" else -1
    return max(k, 1)


def channel_conv(d, w):
    """Same-padded 1D convolution of a (B, C) descriptor along channels."""
    k = w.shape[0]
    p = k // 2
    dp = np.pad(d, ((0, 0), (p, p)))
    return np.einsum("bck,k->bc", sliding_window_view(dp, k, axis=1), w)


def channel_conv_backward(ga, d, w):
    k = w.shape[0]
    p = k // 2
    dp = np.pad(d, ((0, 0), (p, p)))
    gw = np.einsum("bc,bck->k", ga, sliding_window_view(dp, k, axis=1))
    gap = np.pad(ga, ((0, 0), (p, p)))
    gd = np.einsum("bck,k->bc", sliding_window_view(gap, k, axis=1), w[::-1])
    return gd, gw


class EcaGate(Layer):
    """Descriptor (B, C) -> gate (B, C) in (0, 1).

    force_gate, when set to a float, overrides the computed gate (debug /
    ablation-equivalence hook); backward then treats the gate as constant.
    """

    def __init__(self, channels, gamma=2, b=1, rounding="floor-odd",
                 rng=None, dtype=np.float32):
        self.channels = channels
        self.k = eca_kernel_size(channels, gamma, b, rounding)
        rng = rng or np.random.default_rng(0)
        self.weight = Param(glorot_uniform(rng, (self.k,), self.k, self.k, dtype))
        self.force_gate = None
        self._d = None

    def forward(self, d):
        if d.ndim != 2 or d.shape[1] != self.channels:
            raise ShapeError(
                f"ECA gate expects descriptor with {self.channels} channels, "
                f"got shape {d.shape}")
        self._d = d
        if self.force_gate is not None:
            self._gate = np.full_like(d, self.force_gate)
        else:
            self._gate = sigmoid(channel_conv(d, self.weight.value))
        return self._gate

    def backward(self, g_gate):
        if self.force_gate is not None:
            return np.zeros_like(self._d)
        ga = g_gate * self._gate * (1 - self._gate)
        gd, gw = channel_conv_backward(ga, self._d, self.weight.value)
        self.weight.grad += gw
        return gd

    def parameters(self):
        return [("weight", self.weight)]


class EcaAttention(Layer):
    """Full ECA over a (B, C, T) tensor: pool, gate, rescale.

    After forward, last_gate holds the (B, C) gate values.
    """

    def __init__(self, channels, gamma=2, b=1, rounding="floor-odd",
                 rng=None, dtype=np.float32):
        self.channels = channels
        self.gate = EcaGate(channels, gamma, b, rounding, rng, dtype)
        self.last_gate = None

    def forward(self, x):
        if x.ndim != 3 or x.shape[1] != self.channels:
            raise ShapeError(
                f"ECA expects {self.channels} channels, got shape {x.shape}")
        self._x = x
        d = x.mean(axis=2)
        self.last_gate = self.gate.forward(d)
        return x * self.last_gate[:, :, None]

    def backward(self, gy):
        x = self._x
        if gy.shape != x.shape:
            raise ShapeError(f"ECA backward got grad shape {gy.shape}, "
                             f"expected {x.shape}")
        g_gate = (gy * x).sum(axis=2)
        gx = gy * self.last_gate[:, :, None]
        gd = self.gate.backward(g_gate)
        gx += gd[:, :, None] / x.shape[2]
        return gx

    def parameters(self):
        return [("gate." + n, p) for n, p in self.gate.parameters()]
