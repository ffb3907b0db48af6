"""Deployment latency harness: burst throughput (100 consecutive windows),
stream stability (100 single-window inferences), and the deployability
verdict - a single inference must finish within 5% of the window's
real-time duration (p95 vs budget). Also a complexity report row
(time / memory / parameter count) per dataset shape.
"""

import time
from dataclasses import dataclass

import numpy as np

from .layers import ShapeError

CANONICAL_SHAPES = {
    # tag: (sensor channels, classes, window length, rate Hz, width, scales)
    "pamap2": (40, 12, 171, 33.0, 10, 4),
    "wisdm": (3, 6, 90, 20.0, 8, 4),
    "opportunity": (72, 18, 113, 30.0, 4, 12),
    "uci-har": (9, 6, 128, 50.0, 8, 8),
}


def budget_ms(window_seconds):
    """5% of the window's real-time duration, in milliseconds."""
    return 0.05 * window_seconds * 1000.0


def _peak_memory_bytes():
    try:
        import resource

        rss_kb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        return int(rss_kb * 1024)
    except (ImportError, OSError):
        return None


@dataclass
class LatencyReport:
    mode: str
    n: int
    total_ms: float
    mean_ms: float
    p50_ms: float
    p95_ms: float
    max_ms: float
    param_count: int
    window_seconds: float | None = None
    budget_ms: float | None = None
    deployable: bool | None = None
    peak_memory_bytes: int | None = None

    def to_dict(self):
        out = {k: v for k, v in self.__dict__.items() if v is not None}
        return out


def _time_inferences(model, x, n, warmup, batched=False):
    for _ in range(warmup):
        model.forward(x)
    times = np.empty(n)
    if batched:
        xb = np.repeat(x, n, axis=0)
        t0 = time.monotonic()
        model.forward(xb)
        total = (time.monotonic() - t0) * 1000.0
        times[:] = total / n
        return times
    for i in range(n):
        t0 = time.monotonic()
        model.forward(x)
        times[i] = (time.monotonic() - t0) * 1000.0
    return times


def _report(mode, times, model, window_seconds=None):
    budget = budget_ms(window_seconds) if window_seconds is not None else None
    p95 = float(np.percentile(times, 95))
    return LatencyReport(
        mode=mode,
        n=len(times),
        total_ms=float(times.sum()),
        mean_ms=float(times.mean()),
        p50_ms=float(np.percentile(times, 50)),
        p95_ms=p95,
        max_ms=float(times.max()),
        param_count=int(model.param_count()) if hasattr(model, "param_count") else 0,
        window_seconds=window_seconds,
        budget_ms=budget,
        deployable=(p95 <= budget) if budget is not None else None,
        peak_memory_bytes=_peak_memory_bytes(),
    )


def _check_input(model, x):
    if x.ndim != 3:
        raise ShapeError(f"benchmark input must be (1, channels, time), got {x.shape}")


def burst_test(model, x, n=100, warmup=10, batched=False):
    """Times n consecutive single-window inferences (warm-up untimed).

    batched=True instead times one n-window batch and reports the
    amortized per-window cost."""
    _check_input(model, x)
    times = _time_inferences(model, x, n, warmup, batched=batched)
    return _report("burst", times, model)


def stream_test(model, x, window_seconds, repeats=100, warmup=10):
    """100 independent single-window inferences; deployable iff the p95
    latency fits the 5% budget."""
    if window_seconds <= 0:
        raise ValueError(f"window_seconds must be positive, got {window_seconds}")
    _check_input(model, x)
    times = _time_inferences(model, x, repeats, warmup)
    return _report("stream", times, model, window_seconds=window_seconds)


def complexity_report(model, tag, x, n=100, warmup=10):
    """One summary row per model: burst time, peak memory (omitted when
    the platform has no reading), parameter count."""
    rep = burst_test(model, x, n=n, warmup=warmup)
    row = {
        "model": tag,
        "time_ms": rep.total_ms,
        "mean_ms": rep.mean_ms,
        "params": rep.param_count,
    }
    if rep.peak_memory_bytes is not None:
        row["memory_bytes"] = rep.peak_memory_bytes
    return row


def format_table(rows):
    """Aligned text rendering for a list of flat dict rows."""
    if not rows:
        return ""
    cols = list(rows[0].keys())
    for r in rows[1:]:
        for c in r:
            if c not in cols:
                cols.append(c)
    grid = [[str(r.get(c, "-")) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in grid))
              for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    for row in grid:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    return "\n".join(lines)
