"""Drivers for the three studies: recognition, navigation, transfer.

All randomness flows from SeedSequence(entropy=seed, spawn_key=(stream,
trial)), so every trial is reproducible in isolation, results do not depend
on execution order or trial count, and the transfer ablation can reuse the
same spawn keys in both arms to give paired trials identical draws (same
scenario, same misjudgments, same tremor) with only the feedback flag
flipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..classifier import Checkpoint
from ..control import classify_and_command
from ..synth import LABELS, default_profiles, generate_trace
from ..sim import transfer_combos, navigation_scenario, transfer_scenario
from .config import AppConfig
from .metrics import navigation_metrics, transfer_metrics
from .operator import NavOperator, TransferOperator, run_trial
from .session import SimSession

_STREAM_RECOGNITION = 0
_STREAM_NAVIGATION = 1
_STREAM_TRANSFER = 2
_STREAM_SUBJECTS = 3


def trial_seeds(app_seed: int, stream: int, trial: int) -> tuple[int, np.random.Generator]:
    """(simulation seed, operator rng) for one trial of one experiment."""
    ss = np.random.SeedSequence(entropy=app_seed, spawn_key=(stream, trial))
    sim_child, op_child = ss.spawn(2)
    return int(sim_child.generate_state(1)[0]), np.random.default_rng(op_child)


def subject_scales(app_seed: int, subjects: int, sigma: float) -> np.ndarray:
    """Per-subject amplitude factors, one draw per subject, order-stable."""
    out = np.empty(subjects)
    for s in range(subjects):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=app_seed, spawn_key=(_STREAM_SUBJECTS, s))
        )
        out[s] = 1.0 + sigma * rng.standard_normal()
    return np.clip(out, 0.5, 1.5)


# -- recognition --------------------------------------------------------------


@dataclass(frozen=True)
class RecognitionTrial:
    subject: int
    true_label: str
    predicted: str | None
    latency_ms: float  # nan when nothing was commanded

    @property
    def correct(self) -> bool:
        return self.predicted == self.true_label


@dataclass
class RecognitionResult:
    trials: list[RecognitionTrial] = field(default_factory=list)
    label_order: tuple[str, ...] = LABELS

    @property
    def accuracy(self) -> float:
        if not self.trials:
            return float("nan")
        return sum(t.correct for t in self.trials) / len(self.trials)

    @property
    def none_fraction(self) -> float:
        if not self.trials:
            return float("nan")
        return sum(t.predicted is None for t in self.trials) / len(self.trials)

    def confusion(self) -> np.ndarray:
        """Rows true, columns predicted; the extra last column is 'none'."""
        k = len(self.label_order)
        cm = np.zeros((k, k + 1), dtype=np.int64)
        idx = {lab: i for i, lab in enumerate(self.label_order)}
        for t in self.trials:
            j = idx[t.predicted] if t.predicted is not None else k
            cm[idx[t.true_label], j] += 1
        return cm

    def per_class_accuracy(self) -> np.ndarray:
        cm = self.confusion()
        totals = cm.sum(axis=1)
        with np.errstate(invalid="ignore"):
            return np.where(totals > 0, np.diag(cm[:, :-1]) / totals, np.nan)

    @property
    def mean_latency_ms(self) -> float:
        lat = [t.latency_ms for t in self.trials if t.correct]
        return float(np.mean(lat)) if lat else float("nan")


def run_recognition(
    config: AppConfig, ckpt: Checkpoint, seed: int | None = None
) -> RecognitionResult:
    """Stream synthetic gesture trials through the online pipeline.

    Each trial is a fresh pre-roll + burst trace for one subject/class pair;
    the trial is correct when the first emitted command matches the class.
    Latency runs from burst onset to the command, so it includes windowing
    and voting delay, not just inference.
    """
    p = config.recognition
    app_seed = config.seed if seed is None else seed
    profiles = default_profiles()
    scales = subject_scales(app_seed, p.subjects, p.subject_amp_sigma)
    onset_ms = p.pre_roll_s * 1000.0

    result = RecognitionResult()
    trial_idx = 0
    for s in range(p.subjects):
        for label in LABELS:
            for _ in range(p.trials_per_class):
                _, rng = trial_seeds(app_seed, _STREAM_RECOGNITION, trial_idx)
                trial_idx += 1
                trace = generate_trace(
                    profiles[label],
                    rng,
                    duration_s=p.trial_len_s,
                    sample_rate_hz=config.dataset.sample_rate_hz,
                    active_start_s=p.pre_roll_s,
                    amp_scale=float(scales[s]),
                )
                cmd_trace = classify_and_command(
                    trace,
                    config.dataset.sample_rate_hz,
                    ckpt,
                    config.control,
                    overlap=p.window_overlap,
                )
                if cmd_trace.commands:
                    first = cmd_trace.commands[0]
                    result.trials.append(
                        RecognitionTrial(s, label, first.label, first.t_ms - onset_ms)
                    )
                else:
                    result.trials.append(RecognitionTrial(s, label, None, float("nan")))
    return result


# -- navigation ---------------------------------------------------------------


@dataclass
class NavigationResult:
    trials: list[dict] = field(default_factory=list)

    def _completed(self) -> list[dict]:
        return [t for t in self.trials if np.isfinite(t["completion_s"])]

    @property
    def success_rate(self) -> float:
        return sum(t["success"] for t in self.trials) / len(self.trials)

    @property
    def collision_free(self) -> int:
        return sum(t["collisions"] == 0 for t in self.trials)

    @property
    def mean_completion_s(self) -> float:
        done = self._completed()
        return float(np.mean([t["completion_s"] for t in done])) if done else float("nan")

    @property
    def mean_deviation_m(self) -> float:
        done = self._completed()
        return float(np.mean([t["mean_deviation_m"] for t in done])) if done else float("nan")


def run_navigation(
    config: AppConfig,
    seed: int | None = None,
    trials: int | None = None,
    log_dir: str | Path | None = None,
) -> NavigationResult:
    """Out-and-back course runs with scripted drivers; metrics from records."""
    p = config.navigation
    app_seed = config.seed if seed is None else seed
    n = p.trials if trials is None else trials
    result = NavigationResult()
    for i in range(n):
        sim_seed, rng = trial_seeds(app_seed, _STREAM_NAVIGATION, i)
        scen = navigation_scenario(seed=sim_seed)
        log_path = Path(log_dir) / f"nav_{i:04d}.jsonl" if log_dir else None
        sess = SimSession(scen, config, log_path=log_path)
        op = NavOperator(sess, rng)
        run_trial(sess, op, p.time_limit_s)
        m = navigation_metrics(sess.records, scen.waypoints, p.finish_tolerance_m)
        m["trial"] = i
        result.trials.append(m)
    return result


# -- transfer -----------------------------------------------------------------


@dataclass
class TransferResult:
    slip_feedback: bool = True
    trials: list[dict] = field(default_factory=list)

    def rate(self, key: str) -> float:
        """Success fraction for one phase over the trials that attempted it."""
        attempted = [t for t in self.trials if t[key] is not None]
        if not attempted:
            return float("nan")
        return sum(bool(t[key]) for t in attempted) / len(attempted)

    @property
    def grip_rate(self) -> float:
        return self.rate("grip_ok")

    @property
    def transport_rate(self) -> float:
        return self.rate("transport_ok")

    @property
    def release_rate(self) -> float:
        return self.rate("release_ok")

    @property
    def full_rate(self) -> float:
        return sum(t["full_ok"] for t in self.trials) / len(self.trials)

    def denominators(self) -> dict[str, int]:
        return {
            "grip": len(self.trials),
            "transport": sum(t["transport_ok"] is not None for t in self.trials),
            "release": sum(t["release_ok"] is not None for t in self.trials),
            "full": len(self.trials),
        }


def run_transfer(
    config: AppConfig,
    seed: int | None = None,
    trials_per_combo: int | None = None,
    slip_feedback: bool | None = None,
    log_dir: str | Path | None = None,
) -> TransferResult:
    """Pick-and-place over every object x surface combo.

    The trial index (combo, repeat) maps to a fixed spawn key, so running
    this twice with slip_feedback True and False produces exactly paired
    trials: same parking error, same misjudged grip, same jerky turn, same
    tremor. Any outcome difference is attributable to the feedback path.
    """
    p = config.transfer
    app_seed = config.seed if seed is None else seed
    n = p.trials_per_combo if trials_per_combo is None else trials_per_combo
    feedback = p.slip_feedback if slip_feedback is None else slip_feedback

    result = TransferResult(slip_feedback=feedback)
    combos = transfer_combos()
    for ci, (obj_name, grit) in enumerate(combos):
        for j in range(n):
            trial_idx = ci * n + j
            sim_seed, rng = trial_seeds(app_seed, _STREAM_TRANSFER, trial_idx)
            scen = transfer_scenario(obj_name, grit, seed=sim_seed)
            tag = "fb" if feedback else "nofb"
            log_path = (
                Path(log_dir) / f"transfer_{tag}_{trial_idx:04d}.jsonl" if log_dir else None
            )
            sess = SimSession(scen, config, log_path=log_path)
            op = TransferOperator(
                sess,
                rng,
                scen.objects[obj_name],
                scen.stations[obj_name],
                use_feedback=feedback,
            )
            run_trial(sess, op, p.time_limit_s + 20.0)
            m = transfer_metrics(sess.records, p.time_limit_s)
            m["trial"] = trial_idx
            m["object"] = obj_name
            m["grit"] = grit
            result.trials.append(m)
    return result


def run_transfer_ablation(
    config: AppConfig, seed: int | None = None, trials_per_combo: int | None = None
) -> tuple[TransferResult, TransferResult]:
    """(with slip feedback, without) over identical paired trials."""
    with_fb = run_transfer(config, seed, trials_per_combo, slip_feedback=True)
    without = run_transfer(config, seed, trials_per_combo, slip_feedback=False)
    return with_fb, without
