"""Times the conv1d hot kernels (forward and backward) for every available
backend over a few representative layer shapes, and prints the speedup of
the compiled extension over the numpy fallback.

Usage: python3 benchmarks/compare_backends.py [--repeats N]
"""

import argparse
import time

import numpy as np

from msapdm.kernels import available_backends

# (tag, batch, c_in, c_out, length, kernel, stride, padding)
SHAPES = [
    ("stem 3ch->32 w90", 64, 3, 32, 90, 3, 1, 1),
    ("scale conv 10ch w171", 64, 10, 10, 171, 3, 1, 1),
    ("fuse 1x1 40ch w113", 64, 40, 48, 113, 1, 1, 0),
    ("transition stride2 32->64 w90", 64, 32, 64, 90, 3, 2, 1),
    ("wide 96ch w128", 16, 96, 96, 128, 3, 1, 1),
]


def time_call(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best * 1000.0


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5,
                        help="timed repetitions per case; best is kept")
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    header = f"{'shape':<32}{'pass':<10}" + "".join(
        f"{name + ' ms':>12}" for name in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    rng = np.random.default_rng(0)
    for tag, b, cin, cout, length, k, stride, pad in SHAPES:
        x = rng.standard_normal((b, cin, length)).astype(np.float32)
        w = rng.standard_normal((cout, cin, k)).astype(np.float32)
        bias = rng.standard_normal(cout).astype(np.float32)
        y = backends["python"].conv1d_forward(x, w, bias, stride, pad)
        gy = rng.standard_normal(y.shape).astype(np.float32)

        for pass_name, call in [
            ("forward", lambda m: m.conv1d_forward(x, w, bias, stride, pad)),
            ("backward", lambda m: m.conv1d_backward(gy, x, w, stride, pad)),
        ]:
            times = {name: time_call(call, mod, repeats=args.repeats)
                     for name, mod in backends.items()}
            row = f"{tag:<32}{pass_name:<10}" + "".join(
                f"{times[name]:>12.3f}" for name in backends)
            if "cython" in times and "python" in times:
                row += f"{times['python'] / times['cython']:>9.2f}x"
            print(row)

        outs = [mod.conv1d_forward(x, w, bias, stride, pad)
                for mod in backends.values()]
        for other in outs[1:]:
            # float32 accumulation order differs between backends
            np.testing.assert_allclose(outs[0], other, rtol=1e-4, atol=1e-4)


if __name__ == "__main__":
    main()
