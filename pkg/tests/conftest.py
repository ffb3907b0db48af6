import numpy as np
import pytest


def naive_conv1d(x, w, b, stride, padding):
    """Five-nested-loop reference convolution (cross-correlation, zero
    padding). Deliberately independent of the library kernels."""
    B, Cin, T = x.shape
    Cout, _, K = w.shape
    t_out = (T + 2 * padding - K) // stride + 1
    y = np.zeros((B, Cout, t_out), dtype=np.float64)
    for n in range(B):
        for oc in range(Cout):
            for ot in range(t_out):
                acc = 0.0 if b is None else float(b[oc])
                for ic in range(Cin):
                    for k in range(K):
                        idx = ot * stride + k - padding
                        if 0 <= idx < T:
                            acc += float(w[oc, ic, k]) * float(x[n, ic, idx])
                y[n, oc, ot] = acc
    return y


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
