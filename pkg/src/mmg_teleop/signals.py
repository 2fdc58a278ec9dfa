"""Muscle-signal conditioning chain.

Implements the preprocessing used by the wearable pipeline: Savitzky-Golay
smoothing, zero-phase band-pass filtering, one-sided FFT spectra, peak
detection, channel normalization and overlapping window segmentation.

Sampled traces are arrays of shape (n_samples, n_channels) in raw sensor
units (10-bit ADC counts, so nominally 0..1023 around a ~128 baseline).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .errors import ValidationError

DEFAULT_SAMPLE_RATE_HZ = 2600.0
DEFAULT_SG_WINDOW = 51
DEFAULT_SG_POLYORDER = 3
DEFAULT_BAND_HZ = (20.0, 1200.0)
DEFAULT_BAND_ORDER = 4
DEFAULT_WINDOW_S = 1.0
DEFAULT_OVERLAP = 0.5


@dataclass(frozen=True)
class SignalWindow:
    """A fixed-length slice of a multichannel trace.

    Attributes:
        samples: float array (n_samples, n_channels).
        sample_rate_hz: sampling rate of the slice.
        t0_us: timestamp of the first sample, microseconds.
    """

    samples: np.ndarray
    sample_rate_hz: float
    t0_us: int


@dataclass(frozen=True)
class Spectrum:
    """One-sided magnitude spectrum of a single channel."""

    freqs_hz: np.ndarray
    magnitudes: np.ndarray
    fft_length: int
    bin_hz: float


@dataclass(frozen=True)
class NormStats:
    """Per-channel normalization statistics, fixed at training time.

    Channels whose standard deviation vanished in the training data are
    flagged in `degenerate` and normalized with std 1 instead.
    """

    mean: np.ndarray
    std: np.ndarray
    degenerate: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.degenerate is None:
            object.__setattr__(
                self, "degenerate", np.zeros(self.mean.shape, dtype=bool)
            )


def _as_float_2d(x: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValidationError(f"{name} must be a non-empty 1-D or 2-D array")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def savgol_smooth(
    x: np.ndarray,
    window_length: int = DEFAULT_SG_WINDOW,
    polyorder: int = DEFAULT_SG_POLYORDER,
) -> np.ndarray:
    """Savitzky-Golay smoothing along the time axis, per channel.

    Each output sample is the value at the window center of a least-squares
    polynomial fit over the surrounding `window_length` samples; edges are
    handled by mirror padding. Polynomials of degree <= polyorder pass
    through unchanged away from the edges.

    Args:
        x: (n, c) or (n,) signal in sensor units.
        window_length: odd number of samples per fit window.
        polyorder: polynomial degree, must be < window_length.

    Returns:
        Smoothed array with the input shape.
    """
    arr = _as_float_2d(x, "signal")
    if window_length % 2 != 1 or window_length < 3:
        raise ValidationError("window_length must be odd and >= 3")
    if not 0 <= polyorder < window_length:
        raise ValidationError("polyorder must satisfy 0 <= polyorder < window_length")
    if arr.shape[0] < window_length:
        raise ValidationError("signal shorter than the smoothing window")
    out = sps.savgol_filter(
        arr, window_length, polyorder, axis=0, mode="mirror"
    )
    return out if np.asarray(x).ndim == 2 else out[:, 0]


def bandpass(
    x: np.ndarray,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    band_hz: tuple[float, float] = DEFAULT_BAND_HZ,
    order: int = DEFAULT_BAND_ORDER,
) -> np.ndarray:
    """Zero-phase Butterworth band-pass along the time axis.

    Applied forward and backward (sosfiltfilt), so the effective attenuation
    is twice the design order and the output has no phase lag.
    """
    arr = _as_float_2d(x, "signal")
    low, high = band_hz
    nyq = sample_rate_hz / 2.0
    if not (0.0 < low < high < nyq):
        raise ValidationError(
            f"band edges must satisfy 0 < low < high < fs/2; got {band_hz} at fs {sample_rate_hz}"
        )
    sos = sps.butter(order, [low, high], btype="bandpass", fs=sample_rate_hz, output="sos")
    # sosfiltfilt needs a minimum padding length; reject traces too short to pad.
    padlen = 3 * (2 * sos.shape[0] + 1)
    if arr.shape[0] <= padlen:
        raise ValidationError(f"signal must be longer than {padlen} samples for this filter")
    out = sps.sosfiltfilt(sos, arr, axis=0)
    return out if np.asarray(x).ndim == 2 else out[:, 0]


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def fft_spectrum(x: np.ndarray, sample_rate_hz: float) -> Spectrum:
    """One-sided magnitude spectrum, zero-padded to the next power of two.

    Returns raw |rfft| magnitudes of the padded signal; Parseval's identity
    holds against the padded time series (DC and Nyquist bins counted once,
    interior bins twice).
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 2:
        raise ValidationError("spectrum input must be 1-D with at least 2 samples")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("spectrum input contains non-finite values")
    if sample_rate_hz <= 0:
        raise ValidationError("sample rate must be positive")
    n = _next_pow2(arr.shape[0])
    mags = np.abs(np.fft.rfft(arr, n=n))
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate_hz)
    return Spectrum(freqs_hz=freqs, magnitudes=mags, fft_length=n, bin_hz=sample_rate_hz / n)


def detect_peaks(
    x: np.ndarray,
    min_prominence: float,
    min_separation: int,
) -> np.ndarray:
    """Indices of local maxima filtered by prominence and separation.

    Candidates are accepted greedily in order of descending height; a
    candidate within `min_separation` samples of an already accepted peak is
    discarded. Equal heights break toward the earlier index.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError("peak detection expects a 1-D signal")
    if min_prominence < 0 or min_separation < 0:
        raise ValidationError("min_prominence and min_separation must be >= 0")
    candidates, _ = sps.find_peaks(arr, prominence=min_prominence)
    if candidates.size == 0:
        return candidates
    order = np.lexsort((candidates, -arr[candidates]))
    accepted: list[int] = []
    for idx in candidates[order]:
        if all(abs(int(idx) - a) >= min_separation for a in accepted):
            accepted.append(int(idx))
    return np.array(sorted(accepted), dtype=np.int64)


def compute_norm_stats(stack: np.ndarray) -> NormStats:
    """Per-channel mean/std over a training stack.

    Args:
        stack: (n_windows, n_samples, n_channels) or (n_samples, n_channels).

    Returns:
        NormStats with zero-variance channels flagged and their std replaced
        by 1.0 so normalization stays defined.
    """
    arr = np.asarray(stack, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.size == 0:
        raise ValidationError("stats input must be (windows, samples, channels)")
    flat = arr.reshape(-1, arr.shape[-1])
    mean = flat.mean(axis=0)
    std = flat.std(axis=0)
    degenerate = std == 0.0
    std = np.where(degenerate, 1.0, std)
    return NormStats(mean=mean, std=std, degenerate=degenerate)


def normalize(x: np.ndarray, stats: NormStats) -> np.ndarray:
    """Apply stored training statistics: (x - mean) / std per channel.

    Inference-time windows must use the stats captured at training time;
    nothing is recomputed here.
    """
    arr = _as_float_2d(x, "signal")
    if arr.shape[1] != stats.mean.shape[0]:
        raise ValidationError(
            f"channel count {arr.shape[1]} does not match stats ({stats.mean.shape[0]})"
        )
    return (arr - stats.mean) / stats.std


def segment_windows(
    samples: np.ndarray,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    window_s: float = DEFAULT_WINDOW_S,
    overlap: float = DEFAULT_OVERLAP,
    t0_us: int = 0,
) -> list[SignalWindow]:
    """Split a trace into fixed-length windows with fractional overlap.

    A trace shorter than one window yields no windows; the tail that does not
    fill a whole hop is dropped. Timestamps are preserved per window.
    """
    arr = _as_float_2d(samples, "trace")
    if not 0.0 <= overlap < 1.0:
        raise ValidationError("overlap must be in [0, 1)")
    if window_s <= 0 or sample_rate_hz <= 0:
        raise ValidationError("window_s and sample_rate_hz must be positive")
    win = int(round(window_s * sample_rate_hz))
    hop = max(1, int(round(win * (1.0 - overlap))))
    out: list[SignalWindow] = []
    for start in range(0, arr.shape[0] - win + 1, hop):
        t = t0_us + int(round(start * 1e6 / sample_rate_hz))
        out.append(
            SignalWindow(samples=arr[start : start + win], sample_rate_hz=sample_rate_hz, t0_us=t)
        )
    return out
