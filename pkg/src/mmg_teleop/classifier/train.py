"""Training loop: Adam-style adaptive moments plus plateau LR decay.

The optimizer keeps first/second moment estimates per parameter with bias
correction. After every epoch the validation loss is checked; when it fails
to improve for `plateau_patience` epochs the learning rate is halved. The
returned parameters are the snapshot with the best validation loss.

Training aborts with a diagnostic naming the first offending tensor if the
loss or any gradient goes non-finite.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingDivergedError, ValidationError
from ..signals import NormStats, compute_norm_stats, normalize
from .network import ModelConfig, init_params, loss_and_grads, param_count, softmax, forward


@dataclass(frozen=True)
class TrainSpec:
    epochs: int = 24
    batch_size: int = 64
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    plateau_patience: int = 5
    plateau_factor: float = 0.5
    min_learning_rate: float = 1e-5
    val_fraction: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValidationError("epochs and batch_size must be >= 1")
        if not 0.0 < self.plateau_factor < 1.0:
            raise ValidationError("plateau_factor must be in (0, 1)")
        if not 0.0 <= self.val_fraction < 0.5:
            raise ValidationError("val_fraction must be in [0, 0.5)")


@dataclass
class TrainResult:
    params: dict[str, np.ndarray]
    config: ModelConfig
    norm_stats: NormStats
    label_order: tuple[str, ...]
    class_weights: np.ndarray
    history: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    param_count: int = 0
    train_seconds: float = 0.0


def class_weights_for(labels: np.ndarray, n_classes: int) -> np.ndarray:
    """Inverse-frequency weights normalized to mean 1 (all ones if balanced)."""
    counts = np.bincount(labels, minlength=n_classes).astype(np.float64)
    if np.any(counts == 0):
        raise ValidationError("every class needs at least one training sample")
    w = counts.sum() / (n_classes * counts)
    return w / w.mean()


def _check_finite(loss: float, grads: dict, params: dict, epoch: int, batch: int):
    if np.isfinite(loss):
        return
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingDivergedError(f"grad:{name}", epoch, batch)
    for name, p in params.items():
        if not np.all(np.isfinite(p)):
            raise TrainingDivergedError(f"param:{name}", epoch, batch)
    raise TrainingDivergedError("loss", epoch, batch)


def _stratified_val_split(labels: np.ndarray, fraction: float, rng: np.random.Generator):
    train_idx, val_idx = [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        n_val = max(1, int(round(idx.size * fraction))) if fraction > 0 else 0
        val_idx.extend(idx[:n_val])
        train_idx.extend(idx[n_val:])
    return np.sort(np.array(train_idx, dtype=np.int64)), np.sort(
        np.array(val_idx, dtype=np.int64)
    )


def train(
    windows: np.ndarray,
    labels: np.ndarray,
    label_order: tuple[str, ...],
    config: ModelConfig,
    spec: TrainSpec,
    log=None,
) -> TrainResult:
    """Fit the classifier on labeled windows.

    Normalization statistics are computed here, on the training split only,
    and travel with the result so inference reuses them verbatim.
    """
    windows = np.asarray(windows)
    labels = np.asarray(labels, dtype=np.int64)
    if windows.ndim != 3 or windows.shape[0] != labels.shape[0]:
        raise ValidationError("windows must be (N, len, channels) matching labels")
    if len(label_order) != config.n_classes:
        raise ValidationError("label_order length must equal n_classes")

    t_start = time.monotonic()
    rng = np.random.default_rng(spec.seed)
    fit_idx, val_idx = _stratified_val_split(labels, spec.val_fraction, rng)
    stats = compute_norm_stats(windows[fit_idx])
    normed = np.empty(windows.shape, dtype=config.np_dtype)
    for i in range(windows.shape[0]):
        normed[i] = normalize(windows[i], stats)

    params = init_params(config, seed=spec.seed)
    weights = class_weights_for(labels[fit_idx], config.n_classes)
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(v_) for k, v_ in params.items()}
    lr = spec.learning_rate
    step = 0
    best_val = np.inf
    best_params = {k: p.copy() for k, p in params.items()}
    best_epoch = -1
    stale = 0
    history: list[dict] = []

    for epoch in range(spec.epochs):
        order = fit_idx[rng.permutation(fit_idx.size)]
        epoch_loss = 0.0
        n_batches = 0
        for b0 in range(0, order.size, spec.batch_size):
            batch = order[b0 : b0 + spec.batch_size]
            loss, grads, _ = loss_and_grads(
                params, config, normed[batch], labels[batch], weights
            )
            _check_finite(loss, grads, params, epoch, n_batches)
            step += 1
            bc1 = 1.0 - spec.beta1**step
            bc2 = 1.0 - spec.beta2**step
            for name, g in grads.items():
                m[name] = spec.beta1 * m[name] + (1.0 - spec.beta1) * g
                v[name] = spec.beta2 * v[name] + (1.0 - spec.beta2) * (g * g)
                update = (m[name] / bc1) / (np.sqrt(v[name] / bc2) + spec.adam_eps)
                params[name] -= (lr * update).astype(params[name].dtype)
            epoch_loss += loss
            n_batches += 1

        val_loss, val_acc = _evaluate_split(params, config, normed, labels, val_idx, weights)
        history.append(
            {
                "epoch": epoch,
                "train_loss": epoch_loss / max(1, n_batches),
                "val_loss": val_loss,
                "val_acc": val_acc,
                "lr": lr,
            }
        )
        if log:
            log(history[-1])
        if val_loss < best_val - 1e-6:
            best_val = val_loss
            best_params = {k: p.copy() for k, p in params.items()}
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= spec.plateau_patience:
                lr = max(spec.min_learning_rate, lr * spec.plateau_factor)
                stale = 0

    return TrainResult(
        params=best_params,
        config=config,
        norm_stats=stats,
        label_order=tuple(label_order),
        class_weights=weights,
        history=history,
        best_epoch=best_epoch,
        param_count=param_count(best_params),
        train_seconds=time.monotonic() - t_start,
    )


def _evaluate_split(params, config, normed, labels, idx, weights):
    if idx.size == 0:
        return float("nan"), float("nan")
    total, correct, loss_sum = 0, 0, 0.0
    for b0 in range(0, idx.size, 256):
        batch = idx[b0 : b0 + 256]
        logits = forward(params, config, normed[batch])
        p = softmax(logits)
        py = np.clip(p[np.arange(batch.size), labels[batch]], 1e-12, None)
        loss_sum += float(np.sum(-weights[labels[batch]] * np.log(py)))
        correct += int(np.sum(p.argmax(axis=1) == labels[batch]))
        total += batch.size
    return loss_sum / total, correct / total
