"""Baseline brightness model: paired persistence and fading exponentials.

Brightness jumps to a normalized plateau at stimulus onset, fades
exponentially from t_pfo during stimulation, persists from the offset value
for t_per seconds after stimulation ends, and is zero afterwards.  The decay
constants are defined so each named period spans a fixed 50:1 intensity
ratio (2% background convention); a scale k maps the normalized curve to
rated brightness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Grid, Stimulus, TimeCourse
from .fitting import FitConfig, FitResult, check_trials, guard
from .metrics import mse
from .optim import Box, minimize_bounded

I0 = 1.0
IE = 0.02


@dataclass(frozen=True)
class BaselineParams:
    t_per: float  # persistence duration, s
    t_pfo: float  # fading onset, s
    t_pfd: float  # fading duration, s
    k: float      # brightness scale

    def __post_init__(self):
        if not self.t_per > 0 or not self.t_pfd > 0:
            raise ValueError(
                f"t_per and t_pfd must be positive, got {self.t_per}, {self.t_pfd}")
        if self.t_pfo < 0:
            raise ValueError(f"t_pfo must be >= 0, got {self.t_pfo}")
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k}")

    def to_json_dict(self) -> dict:
        return {"t_per": self.t_per, "t_pfo": self.t_pfo, "t_pfd": self.t_pfd, "k": self.k}

    @classmethod
    def from_json_dict(cls, d: dict) -> "BaselineParams":
        return cls(d["t_per"], d["t_pfo"], d["t_pfd"], d["k"])


def tau(duration: float, i0: float, ie: float) -> float:
    """Decay constant such that exp decay covers the i0 -> ie ratio in
    exactly `duration` seconds."""
    if not duration > 0:
        raise ValueError(f"duration must be positive, got {duration}")
    if not i0 > ie > 0:
        raise ValueError(f"need i0 > ie > 0, got i0={i0}, ie={ie}")
    return duration / (math.log(i0) - math.log(ie))


def baseline_predict(params: BaselineParams, stimulus: Stimulus, grid: Grid) -> TimeCourse:
    t = grid.times
    d = stimulus.duration_s
    tau_pfd = tau(params.t_pfd, I0, IE)
    tau_per = tau(params.t_per, I0, IE)

    g = np.zeros(grid.n)
    plateau = (t >= 0.0) & (t < params.t_pfo) & (t < d)
    fading = (t >= params.t_pfo) & (t < d)
    persisting = (t >= d) & (t < d + params.t_per)
    g[plateau] = I0
    g[fading] = I0 * np.exp(-(t[fading] - params.t_pfo) / tau_pfd)
    at_offset = I0 if params.t_pfo >= d else I0 * math.exp(-(d - params.t_pfo) / tau_pfd)
    g[persisting] = at_offset * np.exp(-(t[persisting] - d) / tau_per)
    return TimeCourse(grid.t0, grid.dt, params.k * g)


def _vector_to_params(v: np.ndarray) -> BaselineParams:
    return BaselineParams(float(v[0]), float(v[1]), float(v[2]), float(v[3]))


def baseline_fit(trials, config: FitConfig | None = None,
                 extra_starts=None) -> FitResult:
    """Minimize mean MSE across trials over (t_per, t_pfo, t_pfd, k)."""
    config = config or FitConfig()
    trials = list(trials)
    check_trials(trials)
    grids = [Grid.of(tr.observed) for tr in trials]
    dur_max = max(tr.stimulus.duration_s for tr in trials)
    dur_mean = float(np.mean([tr.stimulus.duration_s for tr in trials]))
    peak = max(float(np.max(tr.observed.samples)) for tr in trials)

    lo = np.array([1e-3, 0.0, 1e-3, 1e-3])
    hi = np.array([dur_max + 10.0, dur_max + 5.0, dur_max + 10.0, max(2.0 * peak, 1.0)])
    box = Box(lo, hi)

    def fn(v):
        p = _vector_to_params(np.clip(v, lo, hi))
        total = 0.0
        for tr, grid in zip(trials, grids):
            pred = baseline_predict(p, tr.stimulus, grid)
            total += mse(pred.samples, tr.observed.samples)
        return guard(total / len(trials))

    starts = [np.array([2.0, 1.0, dur_mean, max(peak, 1e-2)])]
    starts.append(_data_start(trials, dur_mean, peak))
    for p in extra_starts or []:
        starts.append(np.array([p.t_per, p.t_pfo, p.t_pfd, p.k]))
    rng = np.random.default_rng(config.seed)
    for _ in range(config.restarts):
        starts.append(rng.uniform(lo, hi))

    best = None
    for x0 in starts:
        res = minimize_bounded(fn, x0, box, config.opt_options())
        if best is None or res.f_best < best.f_best:
            best = res
    return FitResult("baseline", _vector_to_params(best.x_best), best.f_best,
                     best, len(trials))


def _data_start(trials, dur_mean: float, peak: float) -> np.ndarray:
    """Read rough phase boundaries off the first trial's shape."""
    tr = trials[0]
    s = tr.observed.samples
    times = tr.observed.times
    d = tr.stimulus.duration_s
    p = float(np.max(s))
    if p <= 0:
        return np.array([2.0, 1.0, dur_mean, max(peak, 1e-2)])
    peak_i = int(np.argmax(s))
    in_stim = np.nonzero((times > times[peak_i]) & (times < d) & (s < 0.95 * p))[0]
    t_pfo = float(times[in_stim[0]]) if in_stim.size else d
    nonzero = np.nonzero(s)[0]
    t_last = float(times[nonzero[-1]]) if nonzero.size else d
    t_per = max(t_last - d, 0.5)
    t_pfd = max(d - t_pfo, 0.5)
    return np.array([t_per, max(t_pfo, 0.0), t_pfd, p])
