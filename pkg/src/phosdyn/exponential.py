"""Exponential brightness model.

Six time segments evaluated recursively on the sampling grid: a linear rise,
a stimulation-frequency-coupled exponential decay, a second decay, a
sinusoidal post-offset rebound, and a final decay.  Each sample multiplies
the previous one, so the decay factors compound step by step rather than
forming a closed-form exponential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Grid, Stimulus, TimeCourse
from .fitting import FitConfig, FitResult, check_trials, guard
from .metrics import mse
from .optim import Box, minimize_bounded


@dataclass(frozen=True)
class ExpParams:
    k1: float  # rise slope, brightness/s
    k2: float  # first decay rate, 1/(s * pps^(1/4))
    k3: float  # second and final decay rate, 1/s
    k4: float  # rebound magnitude
    k5: float  # rebound frequency, rad/s
    t1: float
    t2: float
    t3: float
    t4: float
    t5: float

    def __post_init__(self):
        ts = (self.t1, self.t2, self.t3, self.t4, self.t5)
        if not all(a <= b for a, b in zip(ts, ts[1:])) or self.t1 < 0:
            raise ValueError(f"segment boundaries must satisfy 0 <= t1 <= ... <= t5, got {ts}")
        if not self.k1 > 0:
            raise ValueError(f"k1 must be positive, got {self.k1}")
        if self.k2 < 0 or self.k3 < 0:
            raise ValueError(f"decay rates must be >= 0, got k2={self.k2}, k3={self.k3}")

    def to_json_dict(self) -> dict:
        return {
            "k": [self.k1, self.k2, self.k3, self.k4, self.k5],
            "t": [self.t1, self.t2, self.t3, self.t4, self.t5],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ExpParams":
        k, t = d["k"], d["t"]
        return cls(k[0], k[1], k[2], k[3], k[4], t[0], t[1], t[2], t[3], t[4])


def _snap(x: float, t0: float, dt: float, n: int) -> int:
    """Nearest grid index, ties toward the earlier sample, clipped to [0, n]."""
    i = math.ceil((x - t0) / dt - 0.5)
    return min(max(i, 0), n)


def _chain(prev: float, factors: np.ndarray) -> np.ndarray:
    """Sequential products prev*f0, prev*f0*f1, ... (same order of operations
    as the sample-by-sample recursion)."""
    return np.cumprod(np.concatenate(([prev], factors)))[1:]


def exp_predict(params: ExpParams, stimulus: Stimulus, grid: Grid) -> TimeCourse:
    """Run the six-segment recursion on the grid.

    Each half-open segment [t_i, t_{i+1}) owns its left endpoint's nearest
    grid sample; samples are clamped at 0 after every step, and a clamped 0
    propagates through the remaining multiplicative segments.
    """
    t = grid.times
    n = grid.n
    p = params
    b1, b2, b3, b4, b5 = (_snap(x, grid.t0, grid.dt, n)
                          for x in (p.t1, p.t2, p.t3, p.t4, p.t5))
    out = np.zeros(n)

    if b1 < b2:
        out[b1:b2] = np.maximum(p.k1 * (t[b1:b2] - p.t1), 0.0)

    if b2 < b3:
        prev = out[b2 - 1] if b2 > 0 else 0.0
        f_quarter = stimulus.freq_pps ** 0.25
        out[b2:b3] = _chain(prev, np.exp(-p.k2 * (t[b2:b3] - p.t2) * f_quarter))

    if b3 < b4:
        prev = out[b3 - 1] if b3 > 0 else 0.0
        out[b3:b4] = _chain(prev, np.exp(-p.k3 * (t[b3:b4] - p.t3)))

    if b4 < b5:
        prev = out[b4 - 1] if b4 > 0 else 0.0
        seg = _chain(prev, p.k4 * np.sin(p.k5 * (t[b4:b5] - p.t4)))
        nonpos = np.nonzero(seg <= 0.0)[0]
        if nonpos.size:
            seg[nonpos[0]:] = 0.0
        out[b4:b5] = seg

    if b5 < n:
        prev = out[b5 - 1] if b5 > 0 else 0.0
        out[b5:] = _chain(prev, np.exp(-p.k3 * (t[b5:] - p.t5)))

    return TimeCourse(grid.t0, grid.dt, out)


# Restart draw boxes: scaling parameters bounded by plausible brightness
# dynamics, segment lengths by the longest stimulus plus a 10 s tail.
_K_LO = [1.0, 0.0, 0.0, 0.0, 0.1]
_K_HI = [20.0, 5.0, 5.0, 3.0, 6.3]


def _vector_to_params(v: np.ndarray) -> ExpParams:
    k1, k2, k3, k4, k5, t1 = v[:6]
    d = np.maximum(v[6:], 0.0)
    t2 = t1 + d[0]
    t3 = t2 + d[1]
    t4 = t3 + d[2]
    t5 = t4 + d[3]
    return ExpParams(float(k1), float(k2), float(k3), float(max(k4, 0.0)), float(k5),
                     float(t1), float(t2), float(t3), float(t4), float(t5))


def _params_to_vector(p: ExpParams) -> np.ndarray:
    return np.array([p.k1, p.k2, p.k3, p.k4, p.k5,
                     p.t1, p.t2 - p.t1, p.t3 - p.t2, p.t4 - p.t3, p.t5 - p.t4])


def exp_fit(trials, config: FitConfig | None = None,
            extra_starts=None) -> FitResult:
    """Minimize mean MSE across trials over all ten parameters.

    Segment ordering is kept by optimizing t1 plus four nonnegative
    increments.  One heuristic start (rise over 1 s, decay through the
    stimulus, no rebound) plus seeded uniform restarts; callers may supply
    extra_starts as known-good ExpParams.
    """
    config = config or FitConfig()
    trials = list(trials)
    check_trials(trials)
    grids = [Grid.of(tr.observed) for tr in trials]
    dur_max = max(tr.stimulus.duration_s for tr in trials)
    dur_mean = float(np.mean([tr.stimulus.duration_s for tr in trials]))
    d_hi = dur_max + 10.0

    lo = np.array(_K_LO + [0.0] * 5)
    hi = np.array(_K_HI + [d_hi] * 5)
    box = Box(lo, hi)

    def fn(v):
        p = _vector_to_params(v)
        total = 0.0
        for tr, grid in zip(trials, grids):
            pred = exp_predict(p, tr.stimulus, grid)
            total += mse(pred.samples, tr.observed.samples)
        return guard(total / len(trials))

    starts = [np.array([10.0, 0.5, 0.2, 0.0, 1.0,
                        0.0, 1.0, max(dur_mean - 1.0, 0.0), 0.0, 0.0])]
    for p in extra_starts or []:
        starts.append(_params_to_vector(p))
    rng = np.random.default_rng(config.seed)
    for _ in range(config.restarts):
        starts.append(rng.uniform(lo, hi))

    best = None
    for x0 in starts:
        res = minimize_bounded(fn, x0, box, config.opt_options())
        if best is None or res.f_best < best.f_best:
            best = res
    return FitResult("exponential", _vector_to_params(best.x_best), best.f_best,
                     best, len(trials))
