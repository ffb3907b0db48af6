"""Acceptance gate: one test per release criterion, each printing a single
PASS/FAIL line. Run with `pytest tests/test_acceptance.py -v -s` to see the
lines inline."""

import json
import time

import numpy as np
import pytest

from msapdm.benchmark import CANONICAL_SHAPES, budget_ms, stream_test
from msapdm.blocks import MsapBlock
from msapdm.cli import gradcheck_suite, main, run_ablation
from msapdm.container import (BadMagicError, ManifestMismatchError,
                              TruncatedFileError, VersionMismatchError)
from msapdm.dataio import SplitSpec, split, synth_generate
from msapdm.evaluation import accuracy, confusion, f1_macro, f1_weighted
from msapdm.kernels import conv1d_forward
from msapdm.layers import soft_threshold
from msapdm.network import Model, ModelConfig, load_weights, save_weights
from msapdm.attention import eca_kernel_size
from msapdm.training import TrainConfig, fit
from conftest import naive_conv1d
from test_evaluation import brute_force_metrics


def report(n, ok, detail):
    print(f"\nACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def test_01_gradient_integrity():
    t0 = time.monotonic()
    results = gradcheck_suite(seed=0)
    elapsed = time.monotonic() - t0
    worst = max(err for _, err in results)
    ok = worst < 1e-4 and elapsed < 60 and len(results) == 10
    report(1, ok, f"10 finite-difference checks, worst rel err "
                  f"{worst:.2e} in {elapsed:.1f}s")


def test_02_convolution_oracle():
    rng = np.random.default_rng(0)
    worst = 0.0
    cases = 0
    for k in (1, 3, 5):
        for stride in (1, 2):
            for pad in (0, 1, 2):
                for _ in range(50):
                    b, cin, cout = rng.integers(1, 4, 3)
                    t = int(rng.integers(k + 2, 16))
                    x = rng.standard_normal((b, cin, t))
                    w = rng.standard_normal((cout, cin, k))
                    bias = rng.standard_normal(cout)
                    got = conv1d_forward(x, w, bias, stride, pad)
                    ref = naive_conv1d(x, w, bias, stride, pad)
                    worst = max(worst, float(np.abs(got - ref).max()))
                    cases += 1
    ok = worst < 1e-5
    report(2, ok, f"conv1d vs naive loop on {cases} cases, "
                  f"max abs err {worst:.2e}")


def test_03_soft_threshold_semantics():
    hand = [
        soft_threshold(np.array([[5.0]]), np.array([2.0]))[0, 0] == 3.0,
        soft_threshold(np.array([[0.5]]), np.array([1.0]))[0, 0] == 0.0,
        soft_threshold(np.array([[-3.0]]), np.array([1.0]))[0, 0] == -2.0,
    ]
    rng = np.random.default_rng(1)
    x = rng.standard_normal((1, 100, 100)) * 3
    tau = rng.uniform(0, 2, 100)
    y = soft_threshold(x, tau)
    non_expansive = bool(np.all(np.abs(y) <= np.abs(x) + 1e-12))
    dead_zone = bool(np.all(y[np.abs(x) <= tau[None, :, None]] == 0))
    sign_kept = bool(np.all(np.sign(y[y != 0]) == np.sign(x[y != 0])))
    ok = all(hand) and non_expansive and dead_zone and sign_kept
    report(3, ok, "piecewise branches on (5,2),(0.5,1),(-3,1); "
                  "non-expansive + dead-zone on 10^4 points")


def test_04_recursion_structure():
    rng = np.random.default_rng(2)
    bit_exact = True
    for s in (2, 4, 8):
        blk = MsapBlock(2 * s, 2 * s, s, 2, mode="connected",
                        rng=np.random.default_rng(s), dtype=np.float64)
        x = rng.standard_normal((2, 2 * s, 9))
        blk.forward(x)
        splits = blk.internals["splits"]
        k_out = blk.internals["k_out"]
        ys = blk.internals["y"]
        # independent re-evaluation of the chained recursion
        expect = [splits[0]]
        for i in range(1, s):
            z = k_out[i].copy()
            if i >= 2:
                z = z + k_out[i - 1] + expect[i - 1]
            expect.append(z)
        for got, want in zip(ys, expect):
            bit_exact = bit_exact and np.array_equal(got, want)
    # purified with unit gates must equal connected
    rngc = np.random.default_rng(7)
    conn = MsapBlock(8, 8, 4, 2, mode="connected", rng=rngc, dtype=np.float64)
    puri = MsapBlock(8, 8, 4, 2, mode="purified",
                     rng=np.random.default_rng(7), dtype=np.float64)
    for (na, pa), (nb, pb) in zip(conn.parameters(),
                                  [p for p in puri.parameters()
                                   if "scale_attn" not in p[0]]):
        pb.value[:] = pa.value
    for attn in puri.scale_attn:
        attn.gate.force_gate = 1.0
    x = rng.standard_normal((2, 8, 9))
    gate_match = float(np.abs(conn.forward(x) - puri.forward(x)).max())
    ok = bit_exact and gate_match < 1e-6
    report(4, ok, f"scale recursion bit-exact for s in (2,4,8); "
                  f"unit-gate vs connected max diff {gate_match:.2e}")


def test_05_attention_kernel_formula():
    import math
    ok = True
    for c in range(1, 4097):
        t = abs(math.log2(c) / 2 + 0.5)
        k = math.floor(t)
        if k % 2 == 0:
            k -= 1
        expected = max(k, 1)
        got = eca_kernel_size(c, 2, 1)
        ok = ok and got == expected and got % 2 == 1 and got >= 1
    report(5, ok, "adaptive kernel size matches direct formula for all "
                  "channel counts 1..4096, odd and >= 1")


def test_06_metrics_reference():
    cm = np.array([[1, 1], [0, 2]])
    hand_ok = (accuracy(cm) == pytest.approx(0.75)
               and f1_macro(cm) == pytest.approx(0.7333, abs=1e-4))
    rng = np.random.default_rng(3)
    random_ok = True
    for _ in range(1000):
        n_classes = int(rng.integers(2, 6))
        n = int(rng.integers(1, 40))
        preds = rng.integers(0, n_classes, n)
        labels = rng.integers(0, n_classes, n)
        m = confusion(preds, labels, n_classes)
        acc, macro, weighted = brute_force_metrics(
            preds.tolist(), labels.tolist(), n_classes)
        random_ok = random_ok and (
            accuracy(m) == pytest.approx(acc, abs=1e-12)
            and f1_macro(m) == pytest.approx(macro, abs=1e-12)
            and f1_weighted(m) == pytest.approx(weighted, abs=1e-12))
    ok = hand_ok and random_ok
    report(6, ok, "accuracy/F1 match per-sample reference on 1000 random "
                  "instances; [[1,1],[0,2]] -> 0.75 / 0.7333")


def test_07_desk_scale_learning():
    t0 = time.monotonic()
    ds = synth_generate(6, 3, 90, 20.0, 200, 0.5, seed=7)
    split(ds, SplitSpec((8, 1, 1), seed=7))
    from msapdm.dataio import apply_normalizer, fit_normalizer
    mean, std = fit_normalizer(ds)
    apply_normalizer(ds, mean, std)
    model = Model(ModelConfig(in_channels=3, num_classes=6, window_len=90,
                              scales=4, width=4, groups=2, seed=7))
    fit(model, ds, TrainConfig(lr=0.001, batch_size=64, epochs=12, seed=7))
    test_x, test_y = ds.subset("test")
    preds = model.predict(test_x)
    acc = accuracy(confusion(preds, test_y, 6))
    elapsed = time.monotonic() - t0
    ok = acc >= 0.95 and elapsed < 300
    report(7, ok, f"synthetic 6-class test accuracy {acc:.4f} "
                  f"in {elapsed:.0f}s (<= 30 epochs)")


def test_08_ablation_harness():
    ds = synth_generate(4, 3, 60, 20.0, 80, 0.8, seed=0)
    split(ds, SplitSpec((8, 1, 1), seed=0))
    rows = run_ablation(ds, epochs=2, seed=0, scales=4, width=4, groups=2)
    shape_ok = ([r["variant"] for r in rows]
                == ["base", "scale-connections", "attention-purification",
                    "drsn", "drsn-m"]
                and all(set(r) == {"variant", "accuracy", "f1_macro",
                                   "f1_weighted"} for r in rows))
    wins = 0
    for seed in range(5):
        dss = synth_generate(4, 3, 60, 20.0, 80, 0.8, seed=seed)
        split(dss, SplitSpec((8, 1, 1), seed=seed))
        accs = {}
        for variant in ("purified,drsn", "purified,drsn-m"):
            m = Model(ModelConfig(in_channels=3, num_classes=4, window_len=60,
                                  scales=4, width=4, groups=2,
                                  variant=variant, seed=seed))
            fit(m, dss, TrainConfig(lr=0.001, batch_size=64, epochs=3,
                                    seed=seed))
            tx, ty = dss.subset("test")
            accs[variant] = accuracy(confusion(m.predict(tx), ty, 4))
        wins += accs["purified,drsn-m"] >= accs["purified,drsn"]
    ok = shape_ok and wins >= 3
    report(8, ok, f"five-variant report well-formed; final-shrinkage variant "
                  f">= per-block variant in {wins}/5 seeds")


def test_09_deployability_math():
    expected = {"pamap2": 259.09, "wisdm": 225.0, "opportunity": 188.33,
                "uci-har": 128.0}
    math_ok = True
    for tag, (ch, _, window, rate, _, _) in CANONICAL_SHAPES.items():
        math_ok = math_ok and budget_ms(window / rate) == pytest.approx(
            expected[tag], abs=0.01)

    class Sleeper:
        def forward(self, x):
            time.sleep(1.0)
            return np.zeros((x.shape[0], 2))

        def param_count(self):
            return 0

    verdict_ok = True
    for ch, _, window, rate, _, _ in CANONICAL_SHAPES.values():
        x = np.zeros((1, ch, window), dtype=np.float32)
        rep = stream_test(Sleeper(), x, window / rate, repeats=2, warmup=0)
        verdict_ok = verdict_ok and rep.deployable is False
    ok = math_ok and verdict_ok
    report(9, ok, "budgets 259.09/225/188.33/128 ms exact to 0.01; "
                  "1s-latency model non-deployable on all four")


def test_10_serialization(tmp_path):
    rng = np.random.default_rng(10)
    roundtrip_ok = True
    for i in range(20):
        cfg = ModelConfig(
            in_channels=int(rng.integers(1, 6)),
            num_classes=int(rng.integers(2, 8)),
            window_len=int(rng.integers(16, 48)),
            scales=int(rng.choice([2, 4, 8])),
            width=int(rng.integers(1, 5)),
            groups=int(rng.integers(1, 4)),
            variant=["base,no-denoise", "connected,no-denoise",
                     "purified,drsn", "purified,drsn-m"][i % 4],
            seed=i)
        m = Model(cfg)
        path = tmp_path / f"m{i}.msap"
        save_weights(m, path)
        m2 = load_weights(path)
        roundtrip_ok = roundtrip_ok and m2.config == cfg and all(
            np.array_equal(pa.value, pb.value)
            for (_, pa), (_, pb) in zip(m.parameters(), m2.parameters()))

    path = tmp_path / "probe.msap"
    save_weights(Model(ModelConfig(in_channels=2, num_classes=2,
                                   window_len=16, scales=2, width=2,
                                   groups=1)), path)
    blob = path.read_bytes()
    errors_ok = True
    for mutate, exc in [
        (lambda b: b"XXXX" + b[4:], BadMagicError),
        (lambda b: b[:4] + b"\x63" + b[5:], VersionMismatchError),
        (lambda b: b[:10], TruncatedFileError),
        (lambda b: b[:-8], ManifestMismatchError),
    ]:
        path.write_bytes(mutate(blob))
        try:
            load_weights(path)
            errors_ok = False
        except exc:
            pass
        except Exception:
            errors_ok = False
    ok = roundtrip_ok and errors_ok
    report(10, ok, "20-config bit-exact round trip; 4 corruption modes raise "
                   "their distinct errors")


def test_11_pipeline_determinism(tmp_path, capsys):
    blobs, metrics = [], []
    for run_dir in ("r1", "r2"):
        d = tmp_path / run_dir
        d.mkdir()
        ds, mp = d / "ds.msap", d / "m.msap"
        assert main(["synth", "--classes", "3", "--channels", "2", "--window",
                     "24", "--per-class", "40", "--seed", "11", "--out",
                     str(ds)]) == 0
        assert main(["train", "--data", str(ds), "--out", str(mp),
                     "--epochs", "3", "--scales", "2", "--width", "2",
                     "--groups", "1", "--seed", "11"]) == 0
        capsys.readouterr()
        assert main(["eval", "--model", str(mp), "--data", str(ds)]) == 0
        metrics.append(json.loads(capsys.readouterr().out))
        blobs.append(mp.read_bytes())
    ok = blobs[0] == blobs[1] and metrics[0] == metrics[1]
    report(11, ok, "two seeded synth->train->eval runs: byte-identical "
                   "weights, identical metrics")
