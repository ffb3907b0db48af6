"""Command-line entry point.

Subcommands: synth, train, eval, bench, gradcheck, ablate.
Exit codes: 0 success, 1 usage error, 2 data/model error,
3 gate failure (gradcheck over tolerance or a non-deployable verdict).
"""

import argparse
import json
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .benchmark import (CANONICAL_SHAPES, burst_test, complexity_report,
                        format_table, stream_test)
from .container import ContainerError
from .dataio import (DataError, SplitSpec, apply_normalizer, fit_normalizer,
                     load_dataset, save_dataset, split, synth_generate)
from .evaluation import metrics_report
from .layers import Conv1d, Linear, ShapeError
from .attention import EcaAttention
from .blocks import DmBlock, MsapBlock
from .network import (Model, ModelConfig, load_weights, save_weights)
from .training import TrainConfig, evaluate_accuracy, fit, gradient_check

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_GATE = 3

ABLATION_VARIANTS = [
    ("base", "base,no-denoise"),
    ("scale-connections", "connected,no-denoise"),
    ("attention-purification", "purified,no-denoise"),
    ("drsn", "purified,drsn"),
    ("drsn-m", "purified,drsn-m"),
]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _now():
    return datetime.now(timezone.utc).isoformat()


def _write_manifest(out_path, command, config, seed, started, artifacts):
    config = {k: v for k, v in config.items() if not callable(v)}
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "started": started,
        "finished": _now(),
        "artifacts": artifacts,
        "tool_version": __version__,
    }
    path = str(out_path) + ".manifest.json"
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return path


def _parse_ratios(text):
    try:
        parts = tuple(int(p) for p in text.split(":"))
    except ValueError:
        raise UsageError(f"bad split ratio {text!r}, expected e.g. 8:1:1")
    if len(parts) != 3:
        raise UsageError(f"split ratio needs three parts, got {text!r}")
    return parts


def cmd_synth(args):
    started = _now()
    if args.classes < 2:
        raise UsageError(f"--classes must be >= 2, got {args.classes}")
    if args.channels < 1 or args.window < 1 or args.per_class < 1:
        raise UsageError("--channels, --window and --per-class must be >= 1")
    ds = synth_generate(args.classes, args.channels, args.window, args.rate,
                        args.per_class, args.noise, args.seed)
    split(ds, SplitSpec(_parse_ratios(args.split), seed=args.seed))
    mean, std = fit_normalizer(ds)
    apply_normalizer(ds, mean, std)
    save_dataset(ds, args.out)
    _write_manifest(args.out, "synth", vars(args).copy(), args.seed, started,
                    [args.out])
    print(f"wrote {args.out}: {len(ds)} windows, {ds.num_classes} classes")
    return EXIT_OK


def _model_config_from(args, ds):
    cfg_dict = {
        "in_channels": ds.channels,
        "num_classes": ds.num_classes,
        "window_len": ds.window_len,
        "scales": args.scales,
        "width": args.width,
        "groups": args.groups,
        "blocks_per_group": args.blocks_per_group,
        "variant": args.variant,
        "seed": args.seed,
    }
    if args.config:
        with open(args.config) as f:
            file_cfg = json.load(f)
        cfg_dict.update(file_cfg)
    return ModelConfig.from_dict(cfg_dict)


def cmd_train(args):
    started = _now()
    ds = load_dataset(args.data)
    mcfg = _model_config_from(args, ds)
    model = Model(mcfg)
    tcfg = TrainConfig(lr=args.lr, batch_size=args.batch_size,
                       epochs=args.epochs, seed=args.seed,
                       patience=args.patience)
    history = fit(model, ds, tcfg)
    save_weights(model, args.out)
    hist_path = str(args.out) + ".history.jsonl"
    with open(hist_path, "w") as f:
        for rec in history:
            f.write(json.dumps(rec) + "\n")
    _write_manifest(args.out, "train",
                    {"model": mcfg.to_dict(), "train": vars(tcfg).copy()},
                    args.seed, started, [args.out, hist_path])
    best = max(h["val_accuracy"] for h in history)
    print(f"wrote {args.out}: best val accuracy {best:.4f} "
          f"over {len(history)} epochs")
    return EXIT_OK


def cmd_eval(args):
    ds = load_dataset(args.data)
    model = load_weights(args.model)
    c = model.config
    if ds.channels != c.in_channels or ds.window_len != c.window_len:
        raise ShapeError(
            f"dataset windows ({ds.channels} ch x {ds.window_len}) do not "
            f"match model input ({c.in_channels} ch x {c.window_len})")
    windows, labels = ds.subset(args.split)
    if len(windows) == 0:
        raise DataError(f"split {args.split!r} is empty")
    preds = np.concatenate([model.predict(windows[i : i + 256])
                            for i in range(0, len(windows), 256)])
    report = metrics_report(preds, labels, c.num_classes)
    print(json.dumps(report, indent=2))
    if args.out:
        with open(args.out, "w") as f:
            json.dump(report, f, indent=2)
    return EXIT_OK


def _bench_model_and_input(args):
    if args.model:
        model = load_weights(args.model)
    else:
        if args.shape is None:
            raise UsageError("bench needs --model or --shape")
        shape = CANONICAL_SHAPES[args.shape]
        ch, classes, window, rate, width, scales = shape
        model = Model(ModelConfig(in_channels=ch, num_classes=classes,
                                  window_len=window, scales=scales,
                                  width=width, seed=args.seed))
    c = model.config
    rng = np.random.default_rng(args.seed)
    x = rng.standard_normal((1, c.in_channels, c.window_len)).astype(np.float32)
    return model, x


def cmd_bench(args):
    started = _now()
    rows = []
    reports = []
    ok = True
    if args.mode == "complexity":
        for tag, (ch, classes, window, rate, width, scales) in CANONICAL_SHAPES.items():
            model = Model(ModelConfig(in_channels=ch, num_classes=classes,
                                      window_len=window, scales=scales,
                                      width=width, seed=args.seed))
            x = np.random.default_rng(args.seed).standard_normal(
                (1, ch, window)).astype(np.float32)
            rows.append(complexity_report(model, tag, x, n=args.n,
                                          warmup=args.warmup))
    else:
        model, x = _bench_model_and_input(args)
        if args.mode == "burst":
            rep = burst_test(model, x, n=args.n, warmup=args.warmup,
                             batched=args.batched)
        else:
            window_seconds = args.window_seconds
            if window_seconds is None and args.shape:
                _, _, window, rate, _, _ = CANONICAL_SHAPES[args.shape]
                window_seconds = window / rate
            if window_seconds is None:
                raise UsageError("stream mode needs --window-seconds or --shape")
            rep = stream_test(model, x, window_seconds, repeats=args.n,
                              warmup=args.warmup)
            ok = bool(rep.deployable)
        reports.append(rep)
        rows.append(rep.to_dict())
    if args.format == "table":
        print(format_table(rows))
    else:
        print(json.dumps(rows if len(rows) > 1 else rows[0], indent=2))
    if args.out:
        with open(args.out, "w") as f:
            json.dump(rows, f, indent=2)
        _write_manifest(args.out, "bench", vars(args).copy(), args.seed,
                        started, [args.out])
    return EXIT_OK if ok else EXIT_GATE


def gradcheck_suite(tolerance=1e-4, seed=0):
    """(name, max relative error) for every layer kind, both blocks, and a
    tiny end-to-end model, all in float64 check mode."""
    rng = np.random.default_rng(seed)
    f64 = np.float64
    cases = [
        ("conv1d", Conv1d(3, 4, 3, padding=1, rng=rng, dtype=f64), (2, 3, 8)),
        ("conv1d_strided", Conv1d(3, 4, 3, stride=2, padding=1, rng=rng,
                                  dtype=f64), (2, 3, 9)),
        ("linear", Linear(6, 4, rng=rng, dtype=f64), (5, 6)),
        ("eca", EcaAttention(8, rng=rng, dtype=f64), (2, 8, 6)),
        ("msap_base", MsapBlock(8, 8, 4, 2, mode="base", rng=rng, dtype=f64),
         (2, 8, 7)),
        ("msap_connected", MsapBlock(8, 8, 4, 2, mode="connected", rng=rng,
                                     dtype=f64), (2, 8, 7)),
        ("msap_purified", MsapBlock(8, 8, 4, 2, mode="purified", rng=rng,
                                    dtype=f64), (2, 8, 7)),
        ("dm", DmBlock(4, 8, stride=2, rng=rng, dtype=f64), (2, 4, 9)),
        ("dm_plain", DmBlock(4, 8, stride=2, denoise=False, rng=rng,
                             dtype=f64), (2, 4, 9)),
        ("model", Model(ModelConfig(in_channels=2, num_classes=3,
                                    window_len=16, scales=2, width=2,
                                    groups=1, seed=1), dtype=f64), (2, 2, 16)),
    ]
    return [(name, gradient_check(comp, shape, seed=seed))
            for name, comp, shape in cases]


def cmd_gradcheck(args):
    results = gradcheck_suite(tolerance=args.tolerance, seed=args.seed)
    worst = 0.0
    for name, err in results:
        status = "ok" if err < args.tolerance else "FAIL"
        print(f"{name:<16} max_rel_err={err:.3e}  {status}")
        worst = max(worst, err)
    return EXIT_OK if worst < args.tolerance else EXIT_GATE


def run_ablation(ds, epochs, seed, lr=0.001, batch_size=64, scales=4, width=4,
                 groups=2):
    """Train all five ablation variants with a shared seed; returns one
    metrics row per variant."""
    rows = []
    for name, variant in ABLATION_VARIANTS:
        mcfg = ModelConfig(in_channels=ds.channels, num_classes=ds.num_classes,
                           window_len=ds.window_len, scales=scales,
                           width=width, groups=groups, variant=variant,
                           seed=seed)
        model = Model(mcfg)
        fit(model, ds, TrainConfig(lr=lr, batch_size=batch_size,
                                   epochs=epochs, seed=seed))
        test_x, test_y = ds.subset("test")
        preds = np.concatenate([model.predict(test_x[i : i + 256])
                                for i in range(0, len(test_x), 256)])
        rep = metrics_report(preds, test_y, ds.num_classes)
        rows.append({
            "variant": name,
            "accuracy": round(rep["accuracy"], 4),
            "f1_macro": round(rep["f1_macro"], 4),
            "f1_weighted": round(rep["f1_weighted"], 4),
        })
    return rows


def cmd_ablate(args):
    started = _now()
    ds = load_dataset(args.data)
    rows = run_ablation(ds, args.epochs, args.seed, lr=args.lr,
                        batch_size=args.batch_size, scales=args.scales,
                        width=args.width, groups=args.groups)
    print(format_table(rows))
    if args.out:
        with open(args.out, "w") as f:
            json.dump(rows, f, indent=2)
        _write_manifest(args.out, "ablate", vars(args).copy(), args.seed,
                        started, [args.out])
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="msapdm", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic HAR dataset")
    p.add_argument("--classes", type=int, default=6)
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--window", type=int, default=90)
    p.add_argument("--rate", type=float, default=20.0)
    p.add_argument("--per-class", type=int, default=200)
    p.add_argument("--noise", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", default="8:1:1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model on a dataset file")
    p.add_argument("--data", required=True)
    p.add_argument("--config", help="JSON model config; overrides flags")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--patience", type=int, default=0)
    p.add_argument("--scales", type=int, default=4)
    p.add_argument("--width", type=int, default=8)
    p.add_argument("--groups", type=int, default=3)
    p.add_argument("--blocks-per-group", type=int, default=1)
    p.add_argument("--variant", default="purified,drsn-m")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a dataset split")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="latency / complexity benchmark")
    p.add_argument("--model")
    p.add_argument("--mode", default="stream",
                   choices=["burst", "stream", "complexity"])
    p.add_argument("--shape", choices=sorted(CANONICAL_SHAPES),
                   help="canonical dataset shape when no --model is given")
    p.add_argument("--window-seconds", type=float)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--warmup", type=int, default=10)
    p.add_argument("--batched", action="store_true")
    p.add_argument("--format", default="json", choices=["json", "table"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gradcheck", help="finite-difference check suite")
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("ablate", help="train the five ablation variants")
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--scales", type=int, default=4)
    p.add_argument("--width", type=int, default=4)
    p.add_argument("--groups", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ContainerError, ShapeError, FileNotFoundError,
            ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
