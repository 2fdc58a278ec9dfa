"""Numpy reference kernels for the recurrent core.

The compiled extension (_core) implements the same two functions; this module
is the always-available fallback and the ground truth for parity tests.

Gate layout along the last axis is [input, forget, cell, output], each of
width H. `xp` is the pre-computed input projection x @ W_ih + b for the whole
sequence, so the kernel only carries the recurrent term.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit


def lstm_seq_forward(xp: np.ndarray, w_hh: np.ndarray):
    """Run one LSTM layer over a full sequence from zero initial state.

    Args:
        xp: (T, B, 4H) input projections plus bias.
        w_hh: (H, 4H) recurrent weights.

    Returns:
        hs: (T, B, H) hidden states.
        gates: (T, B, 4H) post-activation gate values (i, f, g, o).
        cs: (T, B, H) cell states.
    """
    T, B, H4 = xp.shape
    H = H4 // 4
    dt = xp.dtype
    hs = np.empty((T, B, H), dtype=dt)
    gates = np.empty((T, B, H4), dtype=dt)
    cs = np.empty((T, B, H), dtype=dt)
    h = np.zeros((B, H), dtype=dt)
    c = np.zeros((B, H), dtype=dt)
    for t in range(T):
        a = xp[t] + h @ w_hh
        i = expit(a[:, :H])
        f = expit(a[:, H : 2 * H])
        g = np.tanh(a[:, 2 * H : 3 * H])
        o = expit(a[:, 3 * H :])
        c = f * c + i * g
        h = o * np.tanh(c)
        gates[t, :, :H] = i
        gates[t, :, H : 2 * H] = f
        gates[t, :, 2 * H : 3 * H] = g
        gates[t, :, 3 * H :] = o
        cs[t] = c
        hs[t] = h
    return hs, gates, cs


def lstm_seq_backward(
    w_hh: np.ndarray,
    gates: np.ndarray,
    cs: np.ndarray,
    hs: np.ndarray,
    dhs: np.ndarray,
):
    """Backpropagate through lstm_seq_forward.

    Args:
        w_hh: (H, 4H) recurrent weights.
        gates, cs, hs: forward caches.
        dhs: (T, B, H) loss gradient wrt every hidden state.

    Returns:
        da: (T, B, 4H) gradient wrt pre-activation gates (for the hoisted
            input-projection/bias gradients computed by the caller).
        dw_hh: (H, 4H) recurrent weight gradient.
    """
    T, B, H = dhs.shape
    dt = dhs.dtype
    da = np.empty((T, B, 4 * H), dtype=dt)
    dw_hh = np.zeros_like(w_hh)
    dh = np.zeros((B, H), dtype=dt)
    dc = np.zeros((B, H), dtype=dt)
    for t in range(T - 1, -1, -1):
        i = gates[t, :, :H]
        f = gates[t, :, H : 2 * H]
        g = gates[t, :, 2 * H : 3 * H]
        o = gates[t, :, 3 * H :]
        tc = np.tanh(cs[t])
        dh = dh + dhs[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        if t > 0:
            df = dc * cs[t - 1]
        else:
            df = np.zeros_like(dc)  # c0 = 0
        da[t, :, :H] = di * i * (1.0 - i)
        da[t, :, H : 2 * H] = df * f * (1.0 - f)
        da[t, :, 2 * H : 3 * H] = dg * (1.0 - g * g)
        da[t, :, 3 * H :] = do * o * (1.0 - o)
        if t > 0:
            dw_hh += hs[t - 1].T @ da[t]
            dh = da[t] @ w_hh.T
            dc = dc * f
    return da, dw_hh
