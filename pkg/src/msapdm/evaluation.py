"""Classification metrics from a confusion matrix: accuracy, F1-macro,
F1-weighted (class-proportion weights). 0/0 F1 terms count as 0.
"""

import numpy as np


def confusion(preds, labels, n_classes):
    """Rows = true class, columns = predicted class."""
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape:
        raise ValueError(
            f"preds and labels lengths differ: {preds.shape} vs {labels.shape}")
    if len(preds) and (preds.min() < 0 or preds.max() >= n_classes
                       or labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"class ids must be in [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (labels, preds), 1)
    return cm


def _check_nonempty(cm):
    if cm.sum() == 0:
        raise ValueError("metrics are undefined on an empty confusion matrix")


def accuracy(cm):
    _check_nonempty(cm)
    return float(np.trace(cm) / cm.sum())


def _per_class_f1(cm):
    tp = np.diag(cm).astype(np.float64)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(tp + fp > 0, tp / (tp + fp), 0.0)
        recall = np.where(tp + fn > 0, tp / (tp + fn), 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2 * precision * recall / np.where(pr > 0, pr, 1), 0.0)
    return f1


def f1_macro(cm):
    _check_nonempty(cm)
    return float(_per_class_f1(cm).mean())


def f1_weighted(cm):
    _check_nonempty(cm)
    weights = cm.sum(axis=1) / cm.sum()
    return float((_per_class_f1(cm) * weights).sum())


def metrics_report(preds, labels, n_classes):
    """The JSON-facing report: accuracy, F1s, and the raw matrix."""
    cm = confusion(preds, labels, n_classes)
    return {
        "accuracy": accuracy(cm),
        "f1_macro": f1_macro(cm),
        "f1_weighted": f1_weighted(cm),
        "confusion": cm.tolist(),
    }
