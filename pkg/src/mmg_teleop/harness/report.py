"""Plain-text and CSV rendering for experiment results.

Rendering is deliberately boring: fixed float formats, stable iteration
order, no timestamps, LF line endings. Two runs with the same config and
seed must produce byte-identical files, and that property is part of the
test surface.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from .experiments import NavigationResult, RecognitionResult, TransferResult


def _f(x: float, nd: int = 4) -> str:
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return "nan"
    return f"{x:.{nd}f}"


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


def _grit_name(grit) -> str:
    return "smooth" if grit is None else f"{grit}-grit"


# -- recognition ---------------------------------------------------------------


def recognition_report(result: RecognitionResult) -> dict[str, str]:
    labels = result.label_order
    per_class = result.per_class_accuracy()
    cm = result.confusion()
    n_sub = len({t.subject for t in result.trials})

    lines = [
        "gesture recognition report",
        "==========================",
        f"trials: {len(result.trials)} across {n_sub} subjects",
        f"overall accuracy: {_f(result.accuracy)}",
        f"no-command fraction: {_f(result.none_fraction)}",
        f"mean latency over correct trials: {_f(result.mean_latency_ms, 1)} ms",
        "",
        "class      trials  correct  accuracy",
    ]
    for i, lab in enumerate(labels):
        row = cm[i]
        lines.append(f"{lab:<10s} {row.sum():6d} {row[i]:8d}  {_f(per_class[i])}")
    lines += ["", "confusion matrix (rows true, columns predicted, last column none)"]
    head = " ".join(f"{lab:>8s}" for lab in labels) + f" {'none':>8s}"
    lines.append(f"{'':10s} {head}")
    for i, lab in enumerate(labels):
        cells = " ".join(f"{int(v):8d}" for v in cm[i])
        lines.append(f"{lab:<10s} {cells}")
    lines.append("")

    rows = [
        [t.subject, t.true_label, t.predicted, int(t.correct), _f(t.latency_ms, 1)]
        for t in result.trials
    ]
    return {
        "recognition.txt": "\n".join(lines),
        "recognition.csv": _csv(
            ["subject", "true_label", "predicted", "correct", "latency_ms"], rows
        ),
    }


# -- navigation ----------------------------------------------------------------


def navigation_report(result: NavigationResult) -> dict[str, str]:
    trials = result.trials
    done = [t for t in trials if math.isfinite(t["completion_s"])]
    comp = np.array([t["completion_s"] for t in done]) if done else np.zeros(0)
    dev = np.array([t["mean_deviation_m"] for t in done]) if done else np.zeros(0)

    lines = [
        "navigation report",
        "=================",
        f"trials: {len(trials)}",
        f"round trips completed: {len(done)}",
        f"collision-free: {result.collision_free}/{len(trials)}",
        f"success rate: {_f(result.success_rate)}",
        "",
        f"completion time: mean {_f(comp.mean() if comp.size else float('nan'), 2)} s"
        f"  min {_f(comp.min() if comp.size else float('nan'), 2)}"
        f"  max {_f(comp.max() if comp.size else float('nan'), 2)}",
        f"path deviation:  mean {_f(dev.mean() if dev.size else float('nan'))} m"
        f"  worst trial {_f(dev.max() if dev.size else float('nan'))} m",
        "",
        "deviation is the mean distance of driven telemetry positions from",
        "the raw waypoint polyline, measured from the switch into MOVEMENT",
        "until the base stops back inside the finish tolerance.",
        "",
    ]
    rows = [
        [
            t["trial"],
            int(t["success"]),
            _f(t["completion_s"], 2),
            _f(t["mean_deviation_m"]),
            _f(t["max_deviation_m"]),
            t["collisions"],
            t["failure"],
        ]
        for t in trials
    ]
    return {
        "navigation.txt": "\n".join(lines),
        "navigation.csv": _csv(
            [
                "trial",
                "success",
                "completion_s",
                "mean_deviation_m",
                "max_deviation_m",
                "collisions",
                "failure",
            ],
            rows,
        ),
    }


# -- transfer ------------------------------------------------------------------


def _combo_rows(result: TransferResult) -> list[tuple]:
    by_combo: dict[tuple, list[dict]] = {}
    for t in result.trials:
        by_combo.setdefault((t["object"], t["grit"]), []).append(t)
    rows = []
    for (obj, grit), ts in by_combo.items():  # insertion order = combo order
        rows.append(
            (
                obj,
                _grit_name(grit),
                len(ts),
                sum(bool(t["grip_ok"]) for t in ts),
                sum(bool(t["transport_ok"]) for t in ts),
                sum(bool(t["release_ok"]) for t in ts),
                sum(bool(t["full_ok"]) for t in ts),
            )
        )
    return rows


def transfer_report(with_fb: TransferResult, without: TransferResult) -> dict[str, str]:
    lines = [
        "object transfer report",
        "======================",
        "",
        "slip feedback ON (per combo: successes out of trials)",
        "object     surface    trials  grip  transport  release  full",
    ]
    for obj, grit, n, g, tr, rel, full in _combo_rows(with_fb):
        lines.append(f"{obj:<10s} {grit:<10s} {n:6d} {g:5d} {tr:10d} {rel:8d} {full:5d}")

    def _totals(res: TransferResult, tag: str) -> list[str]:
        d = res.denominators()
        released = sum(bool(t["release_ok"]) for t in res.trials)
        return [
            "",
            f"totals, slip feedback {tag}",
            f"  grip success:      {_f(res.grip_rate)}  ({sum(bool(t['grip_ok']) for t in res.trials)}/{d['grip']})",
            f"  transport success: {_f(res.transport_rate)}  ({sum(bool(t['transport_ok']) for t in res.trials)}/{d['transport']})",
            f"  release success:   {_f(res.release_rate)}  ({released}/{d['release']})",
            f"  full task:         {_f(res.full_rate)}  ({sum(t['full_ok'] for t in res.trials)}/{d['full']})",
            f"  release over all trials: {_f(released / d['grip'])}  ({released}/{d['grip']})",
            f"  corrective adjustments: {sum(t['adjustments'] for t in res.trials)}",
        ]

    lines += _totals(with_fb, "ON")
    lines += _totals(without, "OFF (ablation, paired seeds)")
    lines += [
        "",
        f"ablation grip delta: {_f(with_fb.grip_rate - without.grip_rate)}"
        f" (feedback {_f(with_fb.grip_rate)} vs ablation {_f(without.grip_rate)})",
        "",
        "denominators chain: grip is judged over all trials; transport only",
        "over trials whose grip succeeded; release only over trials whose",
        "transport succeeded; full task over all trials against the time",
        "limit. 'release over all trials' restates release success against",
        "the unchained trial count for comparison with aggregate summaries.",
        "",
    ]

    def _rows(res: TransferResult, arm: str) -> list[list]:
        return [
            [
                arm,
                t["trial"],
                t["object"],
                _grit_name(t["grit"]),
                t["level"],
                t["adjustments"],
                int(bool(t["grip_ok"])),
                "" if t["transport_ok"] is None else int(t["transport_ok"]),
                "" if t["release_ok"] is None else int(t["release_ok"]),
                int(t["full_ok"]),
                _f(t["duration_s"], 2),
                t["failure"],
            ]
            for t in res.trials
        ]

    header = [
        "arm",
        "trial",
        "object",
        "surface",
        "level",
        "adjustments",
        "grip_ok",
        "transport_ok",
        "release_ok",
        "full_ok",
        "duration_s",
        "failure",
    ]
    return {
        "transfer.txt": "\n".join(lines),
        "transfer.csv": _csv(header, _rows(with_fb, "feedback") + _rows(without, "ablation")),
    }


def write_reports(files: dict[str, str], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(files):
        path = out / name
        path.write_text(files[name], encoding="utf-8")
        written.append(path)
    return written
