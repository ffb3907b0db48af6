"""Pure-numpy implementations of the hot convolution kernels.

These are the fallback used when the compiled extension is unavailable,
and the reference the extension is tested against. Cross-correlation
convention (no kernel flip), zero padding.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _windows(x, kernel, stride, padding):
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding)))
    return sliding_window_view(x, kernel, axis=2)[:, :, ::stride, :]


def conv1d_forward(x, w, b, stride, padding):
    """x (B, Cin, T), w (Cout, Cin, K), b (Cout,) or None -> (B, Cout, Tout)."""
    win = _windows(x, w.shape[2], stride, padding)
    y = np.einsum("bcok,dck->bdo", win, w, optimize=True)
    if b is not None:
        y += b[None, :, None]
    return y


def conv1d_backward(gy, x, w, stride, padding):
    """Gradients of conv1d_forward; returns (gx, gw, gb)."""
    B, Cin, T = x.shape
    Cout, _, K = w.shape
    t_out = gy.shape[2]
    win = _windows(x, K, stride, padding)
    gw = np.einsum("bdo,bcok->dck", gy, win, optimize=True)
    gb = gy.sum(axis=(0, 2))
    gxp = np.zeros((B, Cin, T + 2 * padding), dtype=x.dtype)
    contrib = np.einsum("bdo,dck->bcok", gy, w, optimize=True)
    for k in range(K):
        gxp[:, :, k : k + stride * (t_out - 1) + 1 : stride] += contrib[:, :, :, k]
    gx = gxp[:, :, padding : padding + T] if padding else gxp
    return gx, gw, gb
