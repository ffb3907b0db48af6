"""Convolution kernels vs the naive nested-loop oracle, for every
available backend."""

import numpy as np
import pytest

from msapdm.kernels import available_backends

from conftest import naive_conv1d

BACKENDS = sorted(available_backends().items())


@pytest.fixture(params=[name for name, _ in BACKENDS])
def backend(request):
    return available_backends()[request.param]


def test_identity_kernel(backend):
    x = np.array([[[1.0, 2.0, 3.0]]], dtype=np.float32)
    w = np.array([[[1.0]]], dtype=np.float32)
    y = backend.conv1d_forward(x, w, np.zeros(1, np.float32), 1, 0)
    np.testing.assert_allclose(y, x)


def test_sum_kernel_padded(backend):
    x = np.array([[[1.0, 2.0, 3.0]]], dtype=np.float32)
    w = np.ones((1, 1, 3), dtype=np.float32)
    y = backend.conv1d_forward(x, w, np.zeros(1, np.float32), 1, 1)
    np.testing.assert_allclose(y[0, 0], [3.0, 6.0, 5.0])


def test_strided_scaled(backend):
    x = np.array([[[1.0, 2.0, 3.0, 4.0]]], dtype=np.float32)
    w = np.full((1, 1, 1), 2.0, dtype=np.float32)
    b = np.ones(1, dtype=np.float32)
    y = backend.conv1d_forward(x, w, b, 2, 0)
    np.testing.assert_allclose(y[0, 0], [3.0, 7.0])


@pytest.mark.parametrize("kernel", [1, 3, 5])
@pytest.mark.parametrize("stride", [1, 2])
@pytest.mark.parametrize("padding", [0, 1, 2])
def test_forward_matches_naive_grid(backend, kernel, stride, padding, rng):
    for _ in range(50):
        B = int(rng.integers(1, 3))
        Cin = int(rng.integers(1, 4))
        Cout = int(rng.integers(1, 4))
        T = int(rng.integers(kernel, kernel + 9))
        if (T + 2 * padding - kernel) // stride + 1 < 1:
            continue
        x = rng.uniform(-1, 1, (B, Cin, T)).astype(np.float32)
        w = rng.uniform(-1, 1, (Cout, Cin, kernel)).astype(np.float32)
        b = rng.uniform(-1, 1, Cout).astype(np.float32)
        y = backend.conv1d_forward(x, w, b, stride, padding)
        ref = naive_conv1d(x, w, b, stride, padding)
        assert y.shape == ref.shape
        np.testing.assert_allclose(y, ref, atol=1e-5)


def test_backward_identity_kernel(backend):
    x = np.array([[[1.0, -2.0, 3.0]]], dtype=np.float32)
    w = np.array([[[1.0]]], dtype=np.float32)
    gy = np.array([[[0.5, 1.5, -1.0]]], dtype=np.float32)
    gx, gw, gb = backend.conv1d_backward(gy, x, w, 1, 0)
    np.testing.assert_allclose(gx, gy)
    np.testing.assert_allclose(gb, [1.0])


def test_bias_gradient_is_grad_sum(backend, rng):
    x = rng.uniform(-1, 1, (3, 2, 10)).astype(np.float32)
    w = rng.uniform(-1, 1, (4, 2, 3)).astype(np.float32)
    gy = rng.uniform(-1, 1, (3, 4, 10)).astype(np.float32)
    _, _, gb = backend.conv1d_backward(gy, x, w, 1, 1)
    np.testing.assert_allclose(gb, gy.sum(axis=(0, 2)), rtol=1e-5)


def test_backward_matches_finite_differences(backend, rng):
    x = rng.uniform(-1, 1, (2, 3, 8))
    w = rng.uniform(-1, 1, (4, 3, 3))
    b = rng.uniform(-1, 1, 4)
    gy = rng.uniform(-1, 1, (2, 4, 4))
    gx, gw, gb = backend.conv1d_backward(gy, x, w, 2, 1)
    eps = 1e-3

    def loss():
        return float(np.sum(backend.conv1d_forward(x, w, b, 2, 1) * gy))

    for arr, grad in [(x, gx), (w, gw), (b, gb)]:
        for _ in range(40):
            idx = tuple(rng.integers(0, d) for d in arr.shape)
            orig = arr[idx]
            arr[idx] = orig + eps
            lp = loss()
            arr[idx] = orig - eps
            lm = loss()
            arr[idx] = orig
            numeric = (lp - lm) / (2 * eps)
            a = float(grad[idx])
            assert abs(a - numeric) / max(abs(a), abs(numeric), 1e-8) < 1e-4


def test_backends_agree(rng):
    impls = available_backends()
    if len(impls) < 2:
        pytest.skip("compiled extension not built")
    x = rng.uniform(-1, 1, (2, 3, 12)).astype(np.float32)
    w = rng.uniform(-1, 1, (5, 3, 3)).astype(np.float32)
    b = rng.uniform(-1, 1, 5).astype(np.float32)
    outs = [impl.conv1d_forward(x, w, b, 2, 1) for impl in impls.values()]
    np.testing.assert_allclose(outs[0], outs[1], atol=1e-5)
    gy = rng.uniform(-1, 1, outs[0].shape).astype(np.float32)
    grads = [impl.conv1d_backward(gy, x, w, 2, 1) for impl in impls.values()]
    for a, b_ in zip(grads[0], grads[1]):
        np.testing.assert_allclose(a, b_, atol=1e-5)
