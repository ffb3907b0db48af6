"""The two architectural blocks: the multi-scale attention-purification
(MSAP) block and the DM channel-wise shrinkage block.

MSAP modes mirror the ablation variants:
  base      - independent scale branches, no attention
  connected - chained scales (each branch also receives the previous
              branch's conv output and chained output), no attention
  purified  - chained scales with an ECA gate per branch

The scale recursion (0-based subsets x[0..s-1], conv K_i and gate A_i for
i >= 1):
  y[0] = x[0]
  y[1] = A_1(K_1(x[1]))
  y[i] = A_i(K_i(x[i]) + K_{i-1}(x[i-1]) + y[i-1])    for i >= 2
With prose_chain=True the chain term y[i-1] is replaced by x[i-1].
"""

import numpy as np

from .attention import EcaAttention, EcaGate
from .layers import (Conv1d, Layer, ReLU, ShapeError, concat_channels,
                     soft_threshold, soft_threshold_backward, split_channels)

MSAP_MODES = ("base", "connected", "purified")


class MsapBlock(Layer):
    def __init__(self, in_channels, out_channels, scales, width,
                 mode="purified", prose_chain=False, residual=True,
                 eca_gamma=2, eca_b=1, eca_rounding="floor-odd",
                 rng=None, dtype=np.float32):
        if scales < 2:
            raise ValueError(f"scales must be >= 2, got {scales}")
        if mode not in MSAP_MODES:
            raise ValueError(f"mode must be one of {MSAP_MODES}, got {mode!r}")
        rng = rng or np.random.default_rng(0)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.scales = scales
        self.width = width
        self.mode = mode
        self.prose_chain = prose_chain
        self.residual = residual
        mid = scales * width
        self.fuse_in = Conv1d(in_channels, mid, 1, rng=rng, dtype=dtype)
        self.relu_in = ReLU()
        self.scale_convs = [Conv1d(width, width, 3, padding=1, rng=rng, dtype=dtype)
                            for _ in range(scales - 1)]
        self.scale_relus = [ReLU() for _ in range(scales - 1)]
        if mode == "purified":
            self.scale_attn = [EcaAttention(width, eca_gamma, eca_b, eca_rounding,
                                            rng=rng, dtype=dtype)
                               for _ in range(scales - 1)]
        else:
            self.scale_attn = []
        self.fuse_out = Conv1d(mid, out_channels, 1, rng=rng, dtype=dtype)
        if residual and in_channels != out_channels:
            self.proj = Conv1d(in_channels, out_channels, 1, rng=rng, dtype=dtype)
        else:
            self.proj = None
        self.internals = None

    def forward(self, x):
        s = self.scales
        u = self.relu_in.forward(self.fuse_in.forward(x))
        if u.shape[1] != s * self.width:
            raise ShapeError(
                f"fused features have {u.shape[1]} channels, "
                f"expected scales*width = {s * self.width}")
        xs = split_channels(u, s)
        k_out = [None] * s
        for i in range(1, s):
            k_out[i] = self.scale_relus[i - 1].forward(
                self.scale_convs[i - 1].forward(xs[i]))
        zs = [None] * s
        ys = [xs[0]]
        for i in range(1, s):
            z = k_out[i]
            if i >= 2 and self.mode != "base":
                chain = xs[i - 1] if self.prose_chain else ys[i - 1]
                z = z + k_out[i - 1] + chain
            zs[i] = z
            ys.append(self.scale_attn[i - 1].forward(z)
                      if self.mode == "purified" else z)
        cat = concat_channels(ys)
        out = self.fuse_out.forward(cat)
        if self.residual:
            out = out + (self.proj.forward(x) if self.proj is not None else x)
        self.internals = {"splits": xs, "k_out": k_out, "z": zs, "y": ys}
        self._x = x
        return out

    def backward(self, gy):
        s = self.scales
        g_cat = self.fuse_out.backward(gy)
        gys = split_channels(g_cat, s)
        gys = [g.copy() for g in gys]
        g_kout = [None] + [np.zeros_like(k) for k in self.internals["k_out"][1:]]
        g_xs = [np.zeros_like(p) for p in self.internals["splits"]]
        for i in range(s - 1, 0, -1):
            gz = (self.scale_attn[i - 1].backward(gys[i])
                  if self.mode == "purified" else gys[i])
            g_kout[i] += gz
            if i >= 2 and self.mode != "base":
                g_kout[i - 1] += gz
                if self.prose_chain:
                    g_xs[i - 1] += gz
                else:
                    gys[i - 1] += gz
        g_xs[0] += gys[0]
        for i in range(1, s):
            g_xs[i] += self.scale_convs[i - 1].backward(
                self.scale_relus[i - 1].backward(g_kout[i]))
        g_u = concat_channels(g_xs)
        gx = self.fuse_in.backward(self.relu_in.backward(g_u))
        if self.residual:
            gx = gx + (self.proj.backward(gy) if self.proj is not None else gy)
        return gx

    def parameters(self):
        out = [("fuse_in." + n, p) for n, p in self.fuse_in.parameters()]
        for i, c in enumerate(self.scale_convs):
            out += [(f"scale_convs.{i}." + n, p) for n, p in c.parameters()]
        for i, a in enumerate(self.scale_attn):
            out += [(f"scale_attn.{i}." + n, p) for n, p in a.parameters()]
        out += [("fuse_out." + n, p) for n, p in self.fuse_out.parameters()]
        if self.proj is not None:
            out += [("proj." + n, p) for n, p in self.proj.parameters()]
        return out

    def branch_signature(self):
        sig = self.relu_in.branch_signature()
        for r in self.scale_relus:
            sig += r.branch_signature()
        return sig


class DmBlock(Layer):
    """Decompose-threshold-reconstruct shrinkage block with a residual
    shortcut. With denoise=False it degrades to a plain (optionally
    strided) conv transition; otherwise per-(batch, channel) thresholds
    tau = eca_gate(d) * d with d the mean absolute activation.
    """

    def __init__(self, in_channels, out_channels, stride=1, denoise=True,
                 eca_gamma=2, eca_b=1, eca_rounding="floor-odd",
                 rng=None, dtype=np.float32):
        if stride not in (1, 2):
            raise ValueError(f"stride must be 1 or 2, got {stride}")
        rng = rng or np.random.default_rng(0)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.stride = stride
        self.denoise = denoise
        self.decompose = Conv1d(in_channels, out_channels, 3, stride=stride,
                                padding=1, rng=rng, dtype=dtype)
        self.relu = ReLU()
        self.gate = (EcaGate(out_channels, eca_gamma, eca_b, eca_rounding,
                             rng=rng, dtype=dtype) if denoise else None)
        if in_channels != out_channels or stride != 1:
            self.shortcut = Conv1d(in_channels, out_channels, 1, stride=stride,
                                   padding=0, rng=rng, dtype=dtype)
        else:
            self.shortcut = None
        self.last_tau = None

    def thresholds(self, u):
        """Per-(batch, channel) tau for decomposed features u; tau < d
        strictly for any finite gate logits."""
        d = np.abs(u).mean(axis=2)
        gate = self.gate.forward(d)
        return gate * d

    def forward(self, x):
        u = self.relu.forward(self.decompose.forward(x))
        if self.denoise:
            d = np.abs(u).mean(axis=2)
            gate = self.gate.forward(d)
            tau = gate * d
            v = soft_threshold(u, tau)
            self._u, self._d, self._gate = u, d, gate
            self._live = np.abs(u) > tau[:, :, None]
            self.last_tau = tau
        else:
            v = u
        self._x = x
        sc = self.shortcut.forward(x) if self.shortcut is not None else x
        return v + sc

    def backward(self, gy):
        if self.denoise:
            u, d, gate, tau = self._u, self._d, self._gate, self.last_tau
            g_u, g_tau = soft_threshold_backward(gy, u, tau)
            g_gate = g_tau * d
            g_d = g_tau * gate + self.gate.backward(g_gate)
            g_u = g_u + (g_d / u.shape[2])[:, :, None] * np.sign(u)
        else:
            g_u = gy
        gx = self.decompose.backward(self.relu.backward(g_u))
        if self.shortcut is not None:
            gx = gx + self.shortcut.backward(gy)
        else:
            gx = gx + gy
        return gx

    def parameters(self):
        out = [("decompose." + n, p) for n, p in self.decompose.parameters()]
        if self.gate is not None:
            out += [("gate." + n, p) for n, p in self.gate.parameters()]
        if self.shortcut is not None:
            out += [("shortcut." + n, p) for n, p in self.shortcut.parameters()]
        return out

    def branch_signature(self):
        sig = self.relu.branch_signature()
        if self.denoise and self.last_tau is not None:
            sig = sig + [self._live]
        return sig
