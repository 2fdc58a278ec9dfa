"""Gesture/force classifier: from-scratch CNN-LSTM with swappable kernels."""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .evaluate import evaluate, evaluate_predictions, predict
from .network import ModelConfig, forward, init_params, param_count, softmax
from .train import TrainResult, TrainSpec, class_weights_for, train

__all__ = [
    "Checkpoint",
    "ModelConfig",
    "TrainResult",
    "TrainSpec",
    "class_weights_for",
    "evaluate",
    "evaluate_predictions",
    "forward",
    "init_params",
    "load_checkpoint",
    "param_count",
    "predict",
    "save_checkpoint",
    "softmax",
    "train",
]
