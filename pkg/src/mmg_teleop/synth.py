"""Synthetic muscle-signal generation.

Produces traces that mimic the recorded forearm patterns: a ~128-unit
baseline per channel, Gaussian activation bumps on the muscles that dominate
each gesture, white measurement noise, and 10-bit clipping. Profiles encode
how peak count and amplitude fall off from strong to light effort, which is
what the classifier has to pick up on.

All generation is deterministic given (profile, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .traces import N_CHANNELS

MUSCLES = ("FCR", "FCU", "ED", "ECRL", "ECRB")
GESTURES = ("GRIP", "WRIST")
LEVEL_NAMES = {1: "strong", 2: "moderate", 3: "light"}
LABELS = (
    "GRIP_L1",
    "GRIP_L2",
    "GRIP_L3",
    "WRIST_L1",
    "WRIST_L2",
    "WRIST_L3",
)

ADC_MAX = 1023.0
BASELINE = 128.0

# Active burst geometry shared by dataset windows and live-style trials.
ACTIVE_SPAN_S = 0.45
_EDGE_MARGIN_S = 0.05
_CENTER_JITTER_S = 0.015


@dataclass(frozen=True)
class PeakPattern:
    """Activation peaks on the dominant channels of a gesture."""

    channels: tuple[str, ...]
    count_range: tuple[int, int]
    amplitude_range: tuple[float, float]  # absolute units at the peak
    width_ms_range: tuple[float, float]  # full width at half maximum


@dataclass(frozen=True)
class GestureProfile:
    label: str
    gesture: str
    level: int
    pattern: PeakPattern
    baseline: float = BASELINE
    noise_std: float = 3.0


def default_profiles() -> dict[str, GestureProfile]:
    """Profiles for the six gesture/force classes.

    Gripping engages FCU/ECRL/ECRB; wrist flexion engages FCR/ECRL. Strong
    effort shows more and sharper peaks at higher amplitude; light effort a
    single broad low peak. Amplitudes are absolute sensor units.
    """
    grip = ("FCU", "ECRL", "ECRB")
    wrist = ("FCR", "ECRL")
    specs = {
        "GRIP_L1": PeakPattern(grip, (3, 4), (258.0, 270.0), (30.0, 60.0)),
        "GRIP_L2": PeakPattern(grip, (2, 2), (250.0, 260.0), (40.0, 90.0)),
        "GRIP_L3": PeakPattern(grip, (1, 1), (230.0, 240.0), (50.0, 120.0)),
        "WRIST_L1": PeakPattern(wrist, (1, 2), (264.0, 276.0), (30.0, 60.0)),
        "WRIST_L2": PeakPattern(wrist, (2, 2), (250.0, 260.0), (40.0, 90.0)),
        "WRIST_L3": PeakPattern(wrist, (1, 1), (245.0, 255.0), (50.0, 120.0)),
    }
    out = {}
    for label, pattern in specs.items():
        gesture, lvl = label.split("_L")
        out[label] = GestureProfile(
            label=label, gesture=gesture, level=int(lvl), pattern=pattern
        )
    return out


def _rng_of(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def generate_trace(
    profile: GestureProfile,
    seed,
    duration_s: float = 1.0,
    sample_rate_hz: float = 2600.0,
    active_start_s: float | None = None,
    active_span_s: float = ACTIVE_SPAN_S,
    amp_scale: float = 1.0,
) -> np.ndarray:
    """Synthesize one (n_samples, 5) trace for a gesture profile.

    The activation burst occupies [active_start_s, active_start_s + span];
    when active_start_s is None it is placed uniformly at random inside the
    trace. Peak heights scale with `amp_scale` around the baseline, modeling
    subject-to-subject amplitude differences.
    """
    if duration_s <= 0 or sample_rate_hz <= 0:
        raise ValidationError("duration and sample rate must be positive")
    if amp_scale <= 0:
        raise ValidationError("amp_scale must be positive")
    if active_span_s <= 2 * _EDGE_MARGIN_S:
        raise ValidationError("active span too short for peak placement")
    rng = _rng_of(seed)
    n = int(round(duration_s * sample_rate_hz))
    latest_start = duration_s - active_span_s
    if latest_start < 0:
        raise ValidationError("trace shorter than the activation span")
    if active_start_s is None:
        active_start_s = rng.uniform(0.0, latest_start)
    elif not 0.0 <= active_start_s <= latest_start:
        raise ValidationError("activation span must lie inside the trace")

    t = np.arange(n) / sample_rate_hz
    out = np.full((n, N_CHANNELS), profile.baseline, dtype=np.float64)
    pat = profile.pattern
    lo, hi = pat.count_range
    for ch_name in pat.channels:
        ch = MUSCLES.index(ch_name)
        k = int(rng.integers(lo, hi + 1))
        left = active_start_s + _EDGE_MARGIN_S
        right = active_start_s + active_span_s - _EDGE_MARGIN_S
        if k == 1:
            centers = np.array([(left + right) / 2.0])
        else:
            centers = np.linspace(left, right, k)
        centers = centers + rng.uniform(-_CENTER_JITTER_S, _CENTER_JITTER_S, size=k)
        # snap to the sample grid so a peak's center sample carries its full
        # amplitude (max of a clean single-peak trace equals the drawn value)
        centers = np.round(centers * sample_rate_hz) / sample_rate_hz
        amps = rng.uniform(*pat.amplitude_range, size=k)
        widths = rng.uniform(*pat.width_ms_range, size=k) / 1000.0
        for c, a, w in zip(centers, amps, widths):
            sigma = w / 2.3548200450309493  # FWHM -> sigma
            height = (a - profile.baseline) * amp_scale
            out[:, ch] += height * np.exp(-0.5 * ((t - c) / sigma) ** 2)
    if profile.noise_std > 0:
        out += rng.normal(0.0, profile.noise_std, size=out.shape)
    return np.clip(out, 0.0, ADC_MAX)


def scaled_profile(profile: GestureProfile, noise_std: float) -> GestureProfile:
    """Copy of a profile with a different noise level."""
    if noise_std < 0:
        raise ValidationError("noise_std must be >= 0")
    return replace(profile, noise_std=noise_std)


@dataclass(frozen=True)
class DatasetSpec:
    """Recipe for a balanced labeled window set."""

    windows_per_class: int = 100
    seed: int = 0
    window_s: float = 1.0
    sample_rate_hz: float = 2600.0
    train_fraction: float = 0.8
    amp_jitter: float = 0.05  # per-window uniform amplitude scale half-width

    def __post_init__(self):
        if self.windows_per_class < 1:
            raise ValidationError("windows_per_class must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError("train_fraction must be in (0, 1)")
        if not 0.0 <= self.amp_jitter < 1.0:
            raise ValidationError("amp_jitter must be in [0, 1)")


@dataclass(frozen=True)
class Dataset:
    """Labeled windows plus a stratified train/test split."""

    windows: np.ndarray  # (N, n_samples, 5)
    labels: np.ndarray  # (N,) int indices into label_order
    label_order: tuple[str, ...]
    train_idx: np.ndarray
    test_idx: np.ndarray
    sample_rate_hz: float
    spec: DatasetSpec | None = None


def generate_dataset(spec: DatasetSpec) -> Dataset:
    """Balanced synthetic dataset with a stratified 80/20-style split.

    Window i of class c is generated from a seed derived from (spec.seed, c,
    i), so the set is reproducible and grows stably with windows_per_class.
    """
    profiles = default_profiles()
    root = np.random.SeedSequence(spec.seed)
    class_seqs = root.spawn(len(LABELS))
    split_rng = np.random.default_rng(root.spawn(1)[0])

    windows = []
    labels = []
    train_idx: list[int] = []
    test_idx: list[int] = []
    n_train = int(round(spec.windows_per_class * spec.train_fraction))
    for c, label in enumerate(LABELS):
        rng = np.random.default_rng(class_seqs[c])
        order = split_rng.permutation(spec.windows_per_class)
        for i in range(spec.windows_per_class):
            scale = 1.0 + rng.uniform(-spec.amp_jitter, spec.amp_jitter)
            windows.append(
                generate_trace(
                    profiles[label],
                    rng,
                    duration_s=spec.window_s,
                    sample_rate_hz=spec.sample_rate_hz,
                    amp_scale=scale,
                )
            )
            labels.append(c)
        base = c * spec.windows_per_class
        for pos, j in enumerate(order):
            (train_idx if pos < n_train else test_idx).append(base + int(j))
    return Dataset(
        windows=np.stack(windows),
        labels=np.array(labels, dtype=np.int64),
        label_order=LABELS,
        train_idx=np.array(sorted(train_idx), dtype=np.int64),
        test_idx=np.array(sorted(test_idx), dtype=np.int64),
        sample_rate_hz=spec.sample_rate_hz,
        spec=spec,
    )


def buzzer_trace(
    freq_hz: float = 1000.0,
    sample_rate_hz: float = 2600.0,
    duration_s: float = 1.0,
    seed: int = 0,
    amplitude: float = 40.0,
    noise_std: float = 0.5,
) -> np.ndarray:
    """Bench-validation tone: a zero-mean sine plus a little sensor noise.

    Used to sanity-check the spectral path against a known reference
    frequency (AC-coupled, so no DC component to dominate the spectrum).
    """
    if not 0 < freq_hz < sample_rate_hz / 2:
        raise ValidationError("tone frequency must be below Nyquist")
    if duration_s <= 0:
        raise ValidationError("duration must be positive")
    rng = _rng_of(seed)
    n = int(round(duration_s * sample_rate_hz))
    t = np.arange(n) / sample_rate_hz
    x = amplitude * np.sin(2.0 * np.pi * freq_hz * t)
    if noise_std > 0:
        x = x + rng.normal(0.0, noise_std, size=n)
    return x


def save_dataset(path, ds: Dataset) -> None:
    """Persist a dataset as compressed npz (arrays plus the generating spec)."""
    spec = ds.spec or DatasetSpec()
    np.savez_compressed(
        path,
        windows=ds.windows,
        labels=ds.labels,
        label_order=np.array(ds.label_order),
        train_idx=ds.train_idx,
        test_idx=ds.test_idx,
        sample_rate_hz=ds.sample_rate_hz,
        windows_per_class=spec.windows_per_class,
        seed=spec.seed,
        window_s=spec.window_s,
        train_fraction=spec.train_fraction,
        amp_jitter=spec.amp_jitter,
    )


def load_dataset(path) -> Dataset:
    with np.load(path, allow_pickle=False) as z:
        spec = DatasetSpec(
            windows_per_class=int(z["windows_per_class"]),
            seed=int(z["seed"]),
            window_s=float(z["window_s"]),
            sample_rate_hz=float(z["sample_rate_hz"]),
            train_fraction=float(z["train_fraction"]),
            amp_jitter=float(z["amp_jitter"]),
        )
        return Dataset(
            windows=z["windows"],
            labels=z["labels"],
            label_order=tuple(str(s) for s in z["label_order"]),
            train_idx=z["train_idx"],
            test_idx=z["test_idx"],
            sample_rate_hz=float(z["sample_rate_hz"]),
            spec=spec,
        )
