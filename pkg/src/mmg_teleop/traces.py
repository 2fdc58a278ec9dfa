"""Trace CSV I/O.

Format (documented in docs/trace_format.md): a header row
`t_us,ch1,ch2,ch3,ch4,ch5` optionally followed by `,label`, then one row per
sample. Timestamps are strictly increasing integer microseconds; channel
values are finite decimals in sensor units; the label column, when present,
carries the class name active at that sample (empty for unlabeled spans).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

N_CHANNELS = 5
_HEADER = ["t_us"] + [f"ch{i}" for i in range(1, N_CHANNELS + 1)]


@dataclass(frozen=True)
class Trace:
    """A recorded multichannel trace with per-sample timestamps."""

    t_us: np.ndarray
    samples: np.ndarray
    labels: list[str] | None = None

    @property
    def sample_rate_hz(self) -> float:
        """Mean rate inferred from the first and last timestamp."""
        n = self.t_us.shape[0]
        if n < 2:
            raise ValidationError("rate is undefined for traces shorter than 2 samples")
        span_us = float(self.t_us[-1] - self.t_us[0])
        return (n - 1) * 1e6 / span_us


def timestamps_for(n: int, sample_rate_hz: float, t0_us: int = 0) -> np.ndarray:
    """Integer-microsecond timestamps for n samples at a nominal rate."""
    if n < 1 or sample_rate_hz <= 0:
        raise ValidationError("need n >= 1 and a positive sample rate")
    return t0_us + np.round(np.arange(n) * 1e6 / sample_rate_hz).astype(np.int64)


def write_trace_csv(path: str | Path, trace: Trace) -> None:
    if trace.samples.ndim != 2 or trace.samples.shape[1] != N_CHANNELS:
        raise ValidationError(f"trace must have exactly {N_CHANNELS} channels")
    if trace.t_us.shape[0] != trace.samples.shape[0]:
        raise ValidationError("timestamp/sample length mismatch")
    if trace.labels is not None and len(trace.labels) != trace.samples.shape[0]:
        raise ValidationError("label/sample length mismatch")
    if np.any(np.diff(trace.t_us) <= 0):
        raise ValidationError("timestamps must be strictly increasing")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = _HEADER + (["label"] if trace.labels is not None else [])
    writer.writerow(header)
    for i in range(trace.samples.shape[0]):
        row = [int(trace.t_us[i])] + [f"{v:.6g}" for v in trace.samples[i]]
        if trace.labels is not None:
            row.append(trace.labels[i])
        writer.writerow(row)
    Path(path).write_text(buf.getvalue())


def read_trace_csv(path: str | Path) -> Trace:
    """Parse and validate a trace CSV.

    Rejects wrong headers, non-monotone timestamps and non-finite values.
    """
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"trace file not found: {p}")
    with p.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{p}: empty file") from None
        has_label = header == _HEADER + ["label"]
        if not has_label and header != _HEADER:
            raise ValidationError(f"{p}: unexpected header {header!r}")
        t_list: list[int] = []
        rows: list[list[float]] = []
        labels: list[str] = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValidationError(f"{p}:{lineno}: expected {len(header)} fields")
            try:
                t_list.append(int(row[0]))
                rows.append([float(v) for v in row[1 : 1 + N_CHANNELS]])
            except ValueError as exc:
                raise ValidationError(f"{p}:{lineno}: {exc}") from None
            if has_label:
                labels.append(row[-1])
    if not rows:
        raise ValidationError(f"{p}: no samples")
    t_us = np.array(t_list, dtype=np.int64)
    samples = np.array(rows, dtype=np.float64)
    if np.any(np.diff(t_us) <= 0):
        raise ValidationError(f"{p}: timestamps not strictly increasing")
    if not np.all(np.isfinite(samples)):
        raise ValidationError(f"{p}: non-finite sample values")
    return Trace(t_us=t_us, samples=samples, labels=labels if has_label else None)
