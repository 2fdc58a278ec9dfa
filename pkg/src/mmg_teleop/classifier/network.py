"""CNN-LSTM gesture/force classifier, implemented from scratch.

Architecture: 1-D convolution over the raw 5-channel window (same padding),
ReLU, non-overlapping temporal max-pool, a stack of LSTM layers, then a dense
softmax head fed by the final hidden state. Forward and backward passes are
hand-derived; the recurrent inner loop runs on the selected kernel backend.

Parameters live in a flat dict keyed by stable names so the optimizer and
checkpoint code can treat them uniformly.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ValidationError
from . import kernels


@dataclass(frozen=True)
class ModelConfig:
    n_channels: int = 5
    window_len: int = 2600
    n_classes: int = 6
    conv_filters: int = 128
    kernel_size: int = 5
    pool: int = 26
    lstm_hidden: int = 256
    lstm_layers: int = 5
    dtype: str = "float32"

    def __post_init__(self):
        if self.kernel_size % 2 != 1:
            raise ValidationError("kernel_size must be odd (same padding)")
        if self.window_len % self.pool != 0:
            raise ValidationError("window_len must be divisible by pool")
        if min(
            self.n_channels,
            self.n_classes,
            self.conv_filters,
            self.pool,
            self.lstm_hidden,
            self.lstm_layers,
        ) < 1:
            raise ValidationError("all size fields must be >= 1")
        if self.dtype not in ("float32", "float64"):
            raise ValidationError("dtype must be float32 or float64")

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64

    @property
    def seq_len(self) -> int:
        return self.window_len // self.pool

    def to_dict(self) -> dict:
        return asdict(self)


def param_names(cfg: ModelConfig) -> list[str]:
    names = ["conv_w", "conv_b"]
    for l in range(cfg.lstm_layers):
        names += [f"lstm{l}_w_ih", f"lstm{l}_w_hh", f"lstm{l}_b"]
    names += ["out_w", "out_b"]
    return names


def init_params(cfg: ModelConfig, seed: int = 0) -> dict[str, np.ndarray]:
    """Seeded initialization.

    Conv uses He scaling for the ReLU that follows; LSTM and head weights use
    the usual 1/sqrt(H) uniform range. Forget-gate biases start at 1 so early
    training does not wash out the cell state.
    """
    rng = np.random.default_rng(seed)
    dt = cfg.np_dtype
    H = cfg.lstm_hidden
    p: dict[str, np.ndarray] = {}
    fan_in = cfg.n_channels * cfg.kernel_size
    p["conv_w"] = rng.normal(
        0.0, np.sqrt(2.0 / fan_in), size=(cfg.conv_filters, cfg.n_channels, cfg.kernel_size)
    ).astype(dt)
    p["conv_b"] = np.zeros(cfg.conv_filters, dtype=dt)
    bound = 1.0 / np.sqrt(H)
    for l in range(cfg.lstm_layers):
        in_dim = cfg.conv_filters if l == 0 else H
        p[f"lstm{l}_w_ih"] = rng.uniform(-bound, bound, size=(in_dim, 4 * H)).astype(dt)
        p[f"lstm{l}_w_hh"] = rng.uniform(-bound, bound, size=(H, 4 * H)).astype(dt)
        b = np.zeros(4 * H, dtype=dt)
        b[H : 2 * H] = 1.0
        p[f"lstm{l}_b"] = b
    p["out_w"] = rng.uniform(-bound, bound, size=(H, cfg.n_classes)).astype(dt)
    p["out_b"] = np.zeros(cfg.n_classes, dtype=dt)
    return p


def param_count(params: dict[str, np.ndarray]) -> int:
    return int(sum(v.size for v in params.values()))


def _conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    # x (B, C, L), w (F, C, K) -> y (B, F, L), same padding
    B, C, L = x.shape
    F, _, K = w.shape
    pad = (K - 1) // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    win = np.lib.stride_tricks.sliding_window_view(xp, K, axis=2)  # (B, C, L, K)
    cols = win.transpose(0, 2, 1, 3).reshape(B * L, C * K)
    y = cols @ w.reshape(F, C * K).T + b
    return y.reshape(B, L, F).transpose(0, 2, 1), cols


def _conv1d_backward(dy: np.ndarray, cols: np.ndarray, w: np.ndarray, x_shape):
    B, C, L = x_shape
    F, _, K = w.shape
    dy_flat = dy.transpose(0, 2, 1).reshape(B * L, F)
    dw = (dy_flat.T @ cols).reshape(F, C, K)
    db = dy_flat.sum(axis=0)
    dcols = (dy_flat @ w.reshape(F, C * K)).reshape(B, L, C, K).transpose(0, 2, 1, 3)
    pad = (K - 1) // 2
    dxp = np.zeros((B, C, L + 2 * pad), dtype=dy.dtype)
    for k in range(K):
        dxp[:, :, k : k + L] += dcols[:, :, :, k]
    dx = dxp[:, :, pad : pad + L]
    return dx, dw, db


def forward(
    params: dict[str, np.ndarray],
    cfg: ModelConfig,
    x: np.ndarray,
    want_cache: bool = False,
):
    """Forward pass.

    Args:
        x: (B, window_len, n_channels) normalized windows.

    Returns:
        logits (B, n_classes), and the backward cache when requested.
    """
    x = np.ascontiguousarray(np.asarray(x, dtype=cfg.np_dtype))
    if x.ndim != 3 or x.shape[1] != cfg.window_len or x.shape[2] != cfg.n_channels:
        raise ValidationError(
            f"expected (B, {cfg.window_len}, {cfg.n_channels}) input, got {x.shape}"
        )
    B = x.shape[0]
    H = cfg.lstm_hidden
    xc = x.transpose(0, 2, 1)  # (B, C, L)
    conv_out, cols = _conv1d_forward(xc, params["conv_w"], params["conv_b"])
    relu_mask = conv_out > 0
    act = conv_out * relu_mask
    T = cfg.seq_len
    pooled_view = act.reshape(B, cfg.conv_filters, T, cfg.pool)
    pool_arg = pooled_view.argmax(axis=3)
    pooled = np.take_along_axis(pooled_view, pool_arg[..., None], axis=3)[..., 0]
    seq = np.ascontiguousarray(pooled.transpose(2, 0, 1))  # (T, B, F)

    layer_caches = []
    inp = seq
    for l in range(cfg.lstm_layers):
        w_ih = params[f"lstm{l}_w_ih"]
        xp = (inp.reshape(T * B, -1) @ w_ih).reshape(T, B, 4 * H) + params[f"lstm{l}_b"]
        hs, gates, cs = kernels.lstm_seq_forward(np.ascontiguousarray(xp), params[f"lstm{l}_w_hh"])
        layer_caches.append((inp, gates, cs, hs))
        inp = hs
    h_last = inp[-1]  # (B, H)
    logits = h_last @ params["out_w"] + params["out_b"]
    if not want_cache:
        return logits
    cache = {
        "x_shape": xc.shape,
        "cols": cols,
        "relu_mask": relu_mask,
        "pool_arg": pool_arg,
        "layers": layer_caches,
        "h_last": h_last,
    }
    return logits, cache


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for stability."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def loss_and_grads(
    params: dict[str, np.ndarray],
    cfg: ModelConfig,
    x: np.ndarray,
    y: np.ndarray,
    class_weights: np.ndarray | None = None,
):
    """Weighted cross-entropy loss and gradients for one batch.

    Loss per sample is -w_y * log(p_y) with the probability clamped at 1e-12
    before the log; the batch loss is the mean. Returns (loss, grads, logits).
    """
    y = np.asarray(y, dtype=np.int64)
    if class_weights is None:
        class_weights = np.ones(cfg.n_classes)
    w = np.asarray(class_weights, dtype=np.float64)
    if w.shape != (cfg.n_classes,) or np.any(w < 0):
        raise ValidationError("class_weights must be non-negative with one entry per class")
    if y.ndim != 1 or np.any(y < 0) or np.any(y >= cfg.n_classes):
        raise ValidationError("labels must be class indices")

    logits, cache = forward(params, cfg, x, want_cache=True)
    B = logits.shape[0]
    p = softmax(logits)
    py = np.clip(p[np.arange(B), y], 1e-12, None)
    loss = float(np.mean(-w[y] * np.log(py)))

    dlogits = p.copy()
    dlogits[np.arange(B), y] -= 1.0
    dlogits *= (w[y] / B)[:, None]
    dlogits = dlogits.astype(cfg.np_dtype)

    grads: dict[str, np.ndarray] = {}
    h_last = cache["h_last"]
    grads["out_w"] = h_last.T @ dlogits
    grads["out_b"] = dlogits.sum(axis=0)
    dh_last = dlogits @ params["out_w"].T

    T = cfg.seq_len
    H = cfg.lstm_hidden
    dhs = np.zeros((T, B, H), dtype=cfg.np_dtype)
    dhs[-1] = dh_last
    for l in range(cfg.lstm_layers - 1, -1, -1):
        inp, gates, cs, hs = cache["layers"][l]
        da, dw_hh = kernels.lstm_seq_backward(
            params[f"lstm{l}_w_hh"], gates, cs, hs, np.ascontiguousarray(dhs)
        )
        in_dim = inp.shape[2]
        da_flat = da.reshape(T * B, 4 * H)
        grads[f"lstm{l}_w_hh"] = dw_hh
        grads[f"lstm{l}_w_ih"] = inp.reshape(T * B, in_dim).T @ da_flat
        grads[f"lstm{l}_b"] = da_flat.sum(axis=0)
        dhs = (da_flat @ params[f"lstm{l}_w_ih"].T).reshape(T, B, in_dim)

    # dhs now holds the gradient wrt the pooled sequence (T, B, F)
    dpool = dhs.transpose(1, 2, 0)  # (B, F, T)
    B_, F, _ = dpool.shape
    dact = np.zeros((B_, F, T, cfg.pool), dtype=cfg.np_dtype)
    np.put_along_axis(dact, cache["pool_arg"][..., None], dpool[..., None], axis=3)
    dact = dact.reshape(B_, F, cfg.window_len)
    dact *= cache["relu_mask"]
    _, grads["conv_w"], grads["conv_b"] = _conv1d_backward(
        dact, cache["cols"], params["conv_w"], cache["x_shape"]
    )
    return loss, grads, logits
