"""Time-course containers, CSV ingestion, resampling, and dataset indexing.

The canonical dataset holds joystick-reported phosphene brightness for nine
implant users under five pulse-train conditions, sampled on a uniform 0.25 s
grid with t = 0 at stimulus onset.  Brightness stays in raw joystick units
(roughly 0-10); no normalization is applied on load.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import DataError, FormatError

CANONICAL_DT = 0.25
CSV_COLUMNS = ("subject_id", "freq_pps", "duration_s", "time_s", "brightness")

# A digitized trace counts as "returned to 0" when its last sample is below
# this fraction of the trace peak; only then is the tail zero-padded.
_RETURNED_TO_ZERO_FRACTION = 0.01
_TRAILING_WINDOW_S = 10.0
_TIME_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class TimeCourse:
    """Uniformly sampled brightness trajectory.

    The grid is implicit: sample i sits at ``t0 + i * dt``.
    """

    t0: float
    dt: float
    samples: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeCourse):
            return NotImplemented
        return (
            self.t0 == other.t0
            and self.dt == other.dt
            and np.array_equal(self.samples, other.samples)
        )

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (self.samples.size - 1)


@dataclass(frozen=True)
class Grid:
    """Sampling grid for model predictions (no brightness attached)."""

    t0: float
    dt: float
    n: int

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n < 1:
            raise ValueError("grid needs at least one sample")

    @classmethod
    def of(cls, tc: TimeCourse) -> "Grid":
        return cls(tc.t0, tc.dt, len(tc))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (self.n - 1)


@dataclass(frozen=True)
class Stimulus:
    """Pulse-train descriptor: rate in pulses per second and duration."""

    freq_pps: float
    duration_s: float
    amplitude_label: str | None = None

    def __post_init__(self):
        if not self.freq_pps > 0:
            raise ValueError(f"freq_pps must be positive, got {self.freq_pps}")
        if not self.duration_s > 0:
            raise ValueError(f"duration_s must be positive, got {self.duration_s}")

    @property
    def condition(self) -> tuple[float, float]:
        return (self.freq_pps, self.duration_s)


@dataclass(frozen=True)
class Trial:
    """One subject's brightness report for one stimulus condition."""

    subject_id: int
    stimulus: Stimulus
    observed: TimeCourse

    @property
    def key(self) -> tuple[int, float, float]:
        return (self.subject_id, self.stimulus.freq_pps, self.stimulus.duration_s)


class Dataset:
    """Immutable collection of trials, indexed by subject and condition."""

    def __init__(self, trials: Sequence[Trial]):
        trials = tuple(trials)
        if not trials:
            raise DataError("no trials")
        dt0 = trials[0].observed.dt
        for tr in trials:
            if abs(tr.observed.dt - dt0) > _TIME_EPS:
                raise DataError(
                    f"all trials must share dt; got {tr.observed.dt} and {dt0}"
                )
        seen = set()
        for tr in trials:
            if tr.key in seen:
                raise DataError(f"duplicate trial for subject/condition {tr.key}")
            seen.add(tr.key)
        self._trials = tuple(sorted(trials, key=lambda t: t.key))
        self._by_subject: dict[int, list[Trial]] = {}
        self._by_condition: dict[tuple[float, float], list[Trial]] = {}
        for tr in self._trials:
            self._by_subject.setdefault(tr.subject_id, []).append(tr)
            self._by_condition.setdefault(tr.stimulus.condition, []).append(tr)

    def __len__(self) -> int:
        return len(self._trials)

    def __iter__(self) -> Iterator[Trial]:
        return iter(self._trials)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self._trials == other._trials

    @property
    def dt(self) -> float:
        return self._trials[0].observed.dt

    @property
    def subjects(self) -> list[int]:
        return sorted(self._by_subject)

    @property
    def conditions(self) -> list[tuple[float, float]]:
        return sorted(self._by_condition)

    def trials_for_subject(self, subject_id: int) -> list[Trial]:
        return list(self._by_subject.get(subject_id, []))

    def trials_for_condition(self, condition: tuple[float, float]) -> list[Trial]:
        return list(self._by_condition.get(condition, []))

    def get(self, subject_id: int, freq_pps: float, duration_s: float) -> Trial | None:
        for tr in self._by_subject.get(subject_id, []):
            if tr.stimulus.condition == (freq_pps, duration_s):
                return tr
        return None

    def select(
        self,
        subject: int | None = None,
        freq: float | None = None,
        dur: float | None = None,
    ) -> list[Trial]:
        out = []
        for tr in self._trials:
            if subject is not None and tr.subject_id != subject:
                continue
            if freq is not None and tr.stimulus.freq_pps != freq:
                continue
            if dur is not None and tr.stimulus.duration_s != dur:
                continue
            out.append(tr)
        return out


def resample(tc: TimeCourse, dt_out: float) -> TimeCourse:
    """Linear interpolation onto a new uniform grid over the same span."""
    if not dt_out > 0:
        raise ValueError(f"dt_out must be positive, got {dt_out}")
    span = tc.t_end - tc.t0
    n_out = int(math.floor(span / dt_out + _TIME_EPS)) + 1
    t_new = tc.t0 + dt_out * np.arange(n_out)
    samples = np.interp(t_new, tc.times, tc.samples)
    return TimeCourse(tc.t0, dt_out, samples)


def _uniform_dt(times: np.ndarray) -> float | None:
    """Spacing if the time grid is uniform, else None."""
    if times.size < 2:
        return None
    diffs = np.diff(times)
    d0 = diffs[0]
    if np.all(np.abs(diffs - d0) <= 1e-6 * max(1.0, abs(d0))):
        return float(d0)
    return None


def _apply_trailing_window(tc: TimeCourse, duration_s: float) -> TimeCourse:
    """Extend the grid to >= 10 s past stimulus offset when the trace has
    visibly returned to zero; otherwise leave the digitized span alone."""
    target_end = duration_s + _TRAILING_WINDOW_S
    if tc.t_end >= target_end - _TIME_EPS:
        return tc
    peak = float(np.max(np.abs(tc.samples)))
    last = abs(float(tc.samples[-1]))
    if peak > 0 and last > _RETURNED_TO_ZERO_FRACTION * peak:
        return tc
    n_pad = int(math.ceil((target_end - tc.t_end) / tc.dt - _TIME_EPS))
    padded = np.concatenate([tc.samples, np.zeros(n_pad)])
    return TimeCourse(tc.t0, tc.dt, padded)


def load_dataset(path: str | Path) -> Dataset:
    """Read the canonical CSV into a Dataset.

    Expected header: ``subject_id,freq_pps,duration_s,time_s,brightness``.
    Rows are grouped by (subject, frequency, duration); within a trial the
    times must appear in strictly increasing order (rows of different trials
    may interleave freely).
    """
    path = Path(path)
    groups: dict[tuple[int, float, float], list[tuple[float, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file, expected header row") from None
        if tuple(h.strip() for h in header) != CSV_COLUMNS:
            raise FormatError(
                f"{path}: bad header {header!r}, expected {','.join(CSV_COLUMNS)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(CSV_COLUMNS):
                raise FormatError(
                    f"{path}:{lineno}: expected {len(CSV_COLUMNS)} columns, got {len(row)}"
                )
            try:
                subject = int(row[0])
                freq = float(row[1])
                dur = float(row[2])
                t = float(row[3])
                b = float(row[4])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: unparsable value ({exc})") from None
            if not (math.isfinite(t) and math.isfinite(b)):
                raise DataError(f"{path}:{lineno}: non-finite brightness or time")
            key = (subject, freq, dur)
            rows = groups.setdefault(key, [])
            if rows:
                t_prev = rows[-1][0]
                if t == t_prev:
                    raise DataError(
                        f"{path}:{lineno}: duplicate sample at t={t} for trial {key}"
                    )
                if t < t_prev:
                    raise DataError(
                        f"{path}:{lineno}: non-monotonic time within trial {key}"
                    )
            rows.append((t, b))

    if not groups:
        raise DataError(f"{path}: no trials")

    trials = []
    for (subject, freq, dur), rows in groups.items():
        times = np.array([r[0] for r in rows])
        values = np.array([r[1] for r in rows])
        if times[0] > _TIME_EPS:
            raise DataError(
                f"{path}: trial {(subject, freq, dur)} starts at t={times[0]}, "
                "after stimulus onset (grids must start at or before t=0)"
            )
        dt = _uniform_dt(times)
        if dt is None:
            # Digitized points on an irregular grid: put them on the canonical step.
            n = int(math.floor((times[-1] - times[0]) / CANONICAL_DT + _TIME_EPS)) + 1
            t_new = times[0] + CANONICAL_DT * np.arange(n)
            tc = TimeCourse(float(times[0]), CANONICAL_DT, np.interp(t_new, times, values))
        else:
            tc = TimeCourse(float(times[0]), dt, values)
        tc = _apply_trailing_window(tc, dur)
        trials.append(Trial(subject, Stimulus(freq, dur), tc))
    return Dataset(trials)


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write a Dataset back out in the canonical CSV format.

    Times ascend within each trial; numbers use 6 significant digits, which
    makes save -> load -> save a fixed point.
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for tr in dataset:
            freq = _fmt(tr.stimulus.freq_pps)
            dur = _fmt(tr.stimulus.duration_s)
            for t, b in zip(tr.observed.times, tr.observed.samples):
                writer.writerow([tr.subject_id, freq, dur, _fmt(t), _fmt(b)])


def _fmt(x: float) -> str:
    return format(float(x), ".6g")
