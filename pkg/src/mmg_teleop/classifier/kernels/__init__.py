"""Kernel backend selection.

The recurrent sequence kernels exist twice: a compiled Cython extension
(_core, built at install time) and a numpy fallback (pure). The extension is
picked automatically when importable; set MMG_TELEOP_KERNELS=py to force the
fallback or =cy to require the extension.
"""

import os

from . import pure

_requested = os.environ.get("MMG_TELEOP_KERNELS", "auto").lower()
if _requested not in ("auto", "py", "cy"):
    raise RuntimeError(f"MMG_TELEOP_KERNELS must be auto, py or cy, not {_requested!r}")

BACKEND = "python"
if _requested in ("auto", "cy"):
    try:
        from . import _core  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cy":
            raise
if BACKEND == "cython":
    lstm_seq_forward = _core.lstm_seq_forward
    lstm_seq_backward = _core.lstm_seq_backward
else:
    lstm_seq_forward = pure.lstm_seq_forward
    lstm_seq_backward = pure.lstm_seq_backward

__all__ = ["BACKEND", "lstm_seq_forward", "lstm_seq_backward", "pure"]
