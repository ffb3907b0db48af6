"""Sensor time-series ingestion: CSV loading, sliding windows, train-only
normalization, deterministic splits, and a synthetic frequency-coded
dataset generator for desk-scale experiments.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .container import ManifestMismatchError, read_container, write_container

SPLIT_NAMES = ("train", "val", "test")


class DataError(Exception):
    """Malformed input data (CSV parse problems, empty splits, ...)."""


@dataclass
class SensorSeries:
    samples: np.ndarray          # (time, channels) float32
    labels: np.ndarray           # (time,) int
    rate_hz: float
    subject: str | None = None
    label_names: list[str] | None = None

    def __post_init__(self):
        if self.rate_hz <= 0:
            raise DataError(f"rate_hz must be positive, got {self.rate_hz}")
        if len(self.labels) != len(self.samples):
            raise DataError("labels length must equal sample count")

    @property
    def channels(self):
        return self.samples.shape[1]


@dataclass
class WindowedDataset:
    windows: np.ndarray          # (n, channels, window_len) float32
    labels: np.ndarray           # (n,) int
    window_len: int
    rate_hz: float
    splits: np.ndarray | None = None   # (n,) in {0: train, 1: val, 2: test}
    label_names: list[str] | None = None
    norm_mean: np.ndarray | None = None    # fitted on train only
    norm_std: np.ndarray | None = None

    def __len__(self):
        return len(self.windows)

    @property
    def channels(self):
        return self.windows.shape[1]

    @property
    def num_classes(self):
        if self.label_names:
            return len(self.label_names)
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def split_indices(self, name):
        if self.splits is None:
            raise DataError("dataset has no split assignment")
        return np.flatnonzero(self.splits == SPLIT_NAMES.index(name))

    def subset(self, name):
        idx = self.split_indices(name)
        return self.windows[idx], self.labels[idx]


def sliding_window(series, window_len, step):
    """Fixed-stride segmentation; trailing remainder dropped. Window label
    is the majority label, ties resolved by the label at the window
    center."""
    t_total = len(series.samples)
    if window_len > t_total:
        raise DataError(
            f"window_len {window_len} exceeds series length {t_total}")
    if step < 1:
        raise DataError(f"step must be >= 1, got {step}")
    n = (t_total - window_len) // step + 1
    windows = np.empty((n, series.channels, window_len), dtype=np.float32)
    labels = np.empty(n, dtype=np.int64)
    for i in range(n):
        start = i * step
        seg = series.samples[start : start + window_len]
        windows[i] = seg.T
        lab = series.labels[start : start + window_len]
        counts = np.bincount(lab)
        winners = np.flatnonzero(counts == counts.max())
        if len(winners) == 1:
            labels[i] = winners[0]
        else:
            labels[i] = lab[window_len // 2]
    return WindowedDataset(windows, labels, window_len, series.rate_hz,
                           label_names=series.label_names)


def fit_normalizer(dataset):
    """Per-channel (mean, std) from the train split only; std floored at
    1e-8."""
    idx = dataset.split_indices("train")
    if len(idx) == 0:
        raise DataError("cannot fit normalizer: train split is empty")
    train = dataset.windows[idx]
    mean = train.mean(axis=(0, 2))
    std = np.maximum(train.std(axis=(0, 2)), 1e-8)
    return mean.astype(np.float32), std.astype(np.float32)


def apply_normalizer(dataset, mean, std):
    dataset.windows = ((dataset.windows - mean[None, :, None])
                       / std[None, :, None]).astype(np.float32)
    dataset.norm_mean = mean
    dataset.norm_std = std
    return dataset


@dataclass
class SplitSpec:
    ratios: tuple[int, int, int] = (8, 1, 1)
    seed: int = 0

    def __post_init__(self):
        if any(r < 0 for r in self.ratios) or sum(self.ratios) <= 0:
            raise DataError(f"split ratios must be non-negative with a "
                            f"positive sum, got {self.ratios}")


def split(dataset, spec):
    """Seeded shuffle, then contiguous assignment; split sizes differ from
    the exact proportion by at most 1 (largest-remainder rounding)."""
    n = len(dataset)
    total = sum(spec.ratios)
    exact = [n * r / total for r in spec.ratios]
    sizes = [int(e) for e in exact]
    rema = sorted(range(3), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in rema[: n - sum(sizes)]:
        sizes[i] += 1
    perm = np.random.default_rng(spec.seed).permutation(n)
    splits = np.empty(n, dtype=np.int8)
    start = 0
    for tag, size in enumerate(sizes):
        splits[perm[start : start + size]] = tag
        start += size
    dataset.splits = splits
    return dataset


def load_csv(path, label_col, channel_cols, rate_hz, subject_col=None):
    """CSV with a header row. String labels get a deterministic (sorted)
    vocabulary; parse errors report row numbers (1-based, header = row 1).
    """
    rows = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        missing = [c for c in [label_col, *channel_cols] if c not in reader.fieldnames]
        if missing:
            raise DataError(f"{path}: missing columns {missing}")
        for rownum, rec in enumerate(reader, start=2):
            vals = []
            for col in channel_cols:
                try:
                    vals.append(float(rec[col]))
                except (TypeError, ValueError):
                    raise DataError(
                        f"{path}: row {rownum}: non-numeric value "
                        f"{rec[col]!r} in column {col}")
            rows.append((vals, rec[label_col],
                         rec.get(subject_col) if subject_col else None))
    if not rows:
        raise DataError(f"{path}: no data rows")
    raw_labels = [r[1] for r in rows]
    vocab = sorted(set(raw_labels))
    label_ids = {name: i for i, name in enumerate(vocab)}
    samples = np.array([r[0] for r in rows], dtype=np.float32)
    labels = np.array([label_ids[l] for l in raw_labels], dtype=np.int64)
    subject = rows[0][2]
    return SensorSeries(samples, labels, rate_hz, subject=subject,
                        label_names=vocab)


def synth_generate(n_classes, channels, window_len, rate_hz, n_per_class,
                   noise_std, seed):
    """Synthetic HAR stand-in: each class is a sum of sinusoids with a
    class-specific fundamental and harmonic, random per-window phase (so
    classes are not separable by raw-space means) plus Gaussian noise.
    Fully deterministic given the seed."""
    if n_classes < 2:
        raise DataError(f"n_classes must be >= 2, got {n_classes}")
    rng = np.random.default_rng(seed)
    t = np.arange(window_len) / rate_hz
    n = n_classes * n_per_class
    windows = np.empty((n, channels, window_len), dtype=np.float32)
    labels = np.empty(n, dtype=np.int64)
    i = 0
    for c in range(n_classes):
        f0 = 0.8 + 0.9 * c
        for _ in range(n_per_class):
            phase = rng.uniform(0, 2 * np.pi)
            amp = 1.0 + 0.2 * rng.standard_normal()
            for ch in range(channels):
                off = np.pi * ch / max(channels, 1)
                sig = (np.sin(2 * np.pi * f0 * t + phase + off)
                       + 0.5 * np.sin(2 * np.pi * 2 * f0 * t + 2 * phase + ch))
                windows[i, ch] = amp * sig
            if noise_std > 0:
                windows[i] += rng.normal(0, noise_std,
                                         (channels, window_len))
            labels[i] = c
            i += 1
    names = [f"class_{c}" for c in range(n_classes)]
    return WindowedDataset(windows, labels, window_len, rate_hz,
                           label_names=names)


def save_dataset(dataset, path):
    meta = {
        "kind": "dataset",
        "window_len": dataset.window_len,
        "rate_hz": dataset.rate_hz,
        "labels": dataset.labels.tolist(),
        "splits": dataset.splits.tolist() if dataset.splits is not None else None,
        "label_names": dataset.label_names,
        "norm_mean": (dataset.norm_mean.tolist()
                      if dataset.norm_mean is not None else None),
        "norm_std": (dataset.norm_std.tolist()
                     if dataset.norm_std is not None else None),
    }
    write_container(path, meta, [("windows", dataset.windows)])


def load_dataset(path):
    meta, tensors = read_container(path)
    if meta.get("kind") != "dataset":
        raise ManifestMismatchError(
            f"{path}: container kind {meta.get('kind')!r} is not 'dataset'")
    ds = WindowedDataset(
        windows=tensors["windows"],
        labels=np.array(meta["labels"], dtype=np.int64),
        window_len=meta["window_len"],
        rate_hz=meta["rate_hz"],
        splits=(np.array(meta["splits"], dtype=np.int8)
                if meta["splits"] is not None else None),
        label_names=meta["label_names"],
    )
    if meta.get("norm_mean") is not None:
        ds.norm_mean = np.array(meta["norm_mean"], dtype=np.float32)
        ds.norm_std = np.array(meta["norm_std"], dtype=np.float32)
    return ds
