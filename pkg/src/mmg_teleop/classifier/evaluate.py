"""Offline evaluation: confusion matrix, accuracy, per-class F1.

Error structure matters as much as the headline number here: confusing two
force levels of the same gesture is benign compared with confusing gestures,
so the intra-category error fraction is reported alongside accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..signals import normalize
from .checkpoint import Checkpoint
from .network import forward, softmax


def predict(ckpt: Checkpoint, windows: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Class indices for raw (unnormalized) windows."""
    windows = np.asarray(windows)
    if windows.ndim != 3:
        raise ValidationError("windows must be (N, len, channels)")
    out = np.empty(windows.shape[0], dtype=np.int64)
    for b0 in range(0, windows.shape[0], batch_size):
        chunk = windows[b0 : b0 + batch_size]
        normed = np.stack([normalize(w, ckpt.norm_stats) for w in chunk])
        logits = forward(ckpt.params, ckpt.config, normed)
        out[b0 : b0 + chunk.shape[0]] = softmax(logits).argmax(axis=1)
    return out


def confusion_matrix(true: np.ndarray, pred: np.ndarray, n_classes: int) -> np.ndarray:
    true = np.asarray(true, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if true.shape != pred.shape:
        raise ValidationError("true/pred length mismatch")
    if true.size and (true.min() < 0 or true.max() >= n_classes or pred.min() < 0 or pred.max() >= n_classes):
        raise ValidationError("labels out of range")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (true, pred), 1)
    return cm


@dataclass(frozen=True)
class EvalReport:
    confusion: np.ndarray
    accuracy: float
    per_class_f1: np.ndarray
    macro_f1: float
    intra_category_error_fraction: float
    n: int


def _gesture_of(label: str) -> str:
    return label.split("_")[0]


def evaluate_predictions(
    true: np.ndarray, pred: np.ndarray, label_order: tuple[str, ...]
) -> EvalReport:
    k = len(label_order)
    cm = confusion_matrix(true, pred, k)
    n = int(cm.sum())
    acc = float(np.trace(cm)) / n if n else float("nan")
    f1 = np.zeros(k)
    for c in range(k):
        tp = cm[c, c]
        fp = cm[:, c].sum() - tp
        fn = cm[c, :].sum() - tp
        denom = 2 * tp + fp + fn
        f1[c] = 2.0 * tp / denom if denom else 0.0
    errors = 0
    intra = 0
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            errors += cm[i, j]
            if _gesture_of(label_order[i]) == _gesture_of(label_order[j]):
                intra += cm[i, j]
    # With zero errors the structural fraction is vacuously perfect.
    intra_frac = intra / errors if errors else 1.0
    return EvalReport(
        confusion=cm,
        accuracy=acc,
        per_class_f1=f1,
        macro_f1=float(f1.mean()),
        intra_category_error_fraction=float(intra_frac),
        n=n,
    )


def evaluate(ckpt: Checkpoint, windows: np.ndarray, labels: np.ndarray) -> EvalReport:
    pred = predict(ckpt, windows)
    return evaluate_predictions(np.asarray(labels), pred, ckpt.label_order)
