"""Spectral brightness model.

The predicted time course is piecewise: a linear rise to peak brightness
k1 = 10 at t1 = 1 s, a linear connector to the first local maximum of the
decay curve, a truncated cosine series plus bias over the decay window, and
a hard zero from the extinction time t3 onward.  The series components come
from the largest-magnitude DFT bins of the observed decay window; in
predictive mode they are free parameters (continuous frequency, amplitude,
phase) refined together with k2 and t3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .data import Grid, Stimulus, TimeCourse, Trial
from .errors import FitError
from .fitting import FitConfig, FitResult, check_trials, guard
from .metrics import mse
from .optim import Box, minimize_bounded

DEFAULT_K1 = 10.0
DEFAULT_T1 = 1.0
MAX_COMPONENTS = 8

# Extinction-time initialization: the trace has "flatlined" once it stays
# below this fraction of its peak for the rest of the trial.
FLATLINE_FRACTION = 0.02

_EPS = 1e-9


def wrap_phase(phi: float) -> float:
    """Map an angle into [-pi, pi)."""
    return float((phi + math.pi) % (2.0 * math.pi) - math.pi)


@dataclass(frozen=True)
class SpectrumComponent:
    """One retained cosine: k2 + sum_i a_i * cos(2*pi*f_i*t + phi_i)."""

    freq_hz: float
    amplitude: float
    phase: float

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        if self.freq_hz < 0:
            raise ValueError(f"freq_hz must be >= 0, got {self.freq_hz}")
        if not (-math.pi <= self.phase < math.pi):
            raise ValueError(f"phase must lie in [-pi, pi), got {self.phase}")


@dataclass(frozen=True)
class SpectralParams:
    components: tuple[SpectrumComponent, ...]
    k2: float
    t3: float
    k1: float = DEFAULT_K1
    t1: float = DEFAULT_T1
    # When True, t3 is an offset from stimulus offset rather than an absolute
    # time; the effective extinction time is clamped to [t1 + dt, grid end].
    t3_relative: bool = False

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        m = len(self.components)
        if not 1 <= m <= MAX_COMPONENTS:
            raise ValueError(f"component count must be in [1, {MAX_COMPONENTS}], got {m}")
        if not self.k1 > 0:
            raise ValueError(f"k1 must be positive, got {self.k1}")
        if not self.t1 >= 0:
            raise ValueError(f"t1 must be >= 0, got {self.t1}")
        if not self.t3_relative and not self.t3 > self.t1:
            raise ValueError(f"t3 must exceed t1, got t3={self.t3}, t1={self.t1}")

    @property
    def m(self) -> int:
        return len(self.components)

    def to_json_dict(self) -> dict:
        return {
            "k1": self.k1,
            "t1": self.t1,
            "k2": self.k2,
            "t3": self.t3,
            "t3_relative": self.t3_relative,
            "components": [
                {"freq_hz": c.freq_hz, "amplitude": c.amplitude, "phase": c.phase}
                for c in self.components
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SpectralParams":
        comps = tuple(
            SpectrumComponent(c["freq_hz"], c["amplitude"], c["phase"])
            for c in d["components"]
        )
        return cls(
            components=comps,
            k2=d["k2"],
            t3=d["t3"],
            k1=d.get("k1", DEFAULT_K1),
            t1=d.get("t1", DEFAULT_T1),
            t3_relative=d.get("t3_relative", False),
        )


def dft(samples) -> np.ndarray:
    """Forward DFT: bin k holds frequency k / (n * dt) against a grid of
    spacing dt."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError("dft needs a 1-D sequence of length >= 2")
    return np.fft.fft(arr)


def top_m_components(spectrum, m: int, dt: float) -> list[SpectrumComponent]:
    """The m positive-frequency bins of greatest magnitude, as real cosines.

    The DC bin is excluded (its offset belongs to the bias term k2); conjugate
    pairs count once; magnitude ties resolve toward the lower frequency.
    Components come back in descending-magnitude order.
    """
    spectrum = np.asarray(spectrum)
    n = spectrum.size
    n_bins = n // 2
    if not 1 <= m <= n_bins:
        raise ValueError(f"m must be in [1, {n_bins}] for a length-{n} spectrum, got {m}")
    ks = np.arange(1, n_bins + 1)
    mags = np.abs(spectrum[ks])
    order = np.lexsort((ks, -mags))
    out = []
    for k in ks[order[:m]]:
        x = spectrum[k]
        scale = 1.0 if (n % 2 == 0 and k == n_bins) else 2.0
        out.append(
            SpectrumComponent(
                freq_hz=k / (n * dt),
                amplitude=scale * abs(x) / n,
                phase=wrap_phase(float(np.angle(x))),
            )
        )
    return out


def eval_series(components, k2: float, t):
    """k2 + sum of retained cosines, with t in seconds since the decay
    window start."""
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, float(k2))
    for c in components:
        out += c.amplitude * np.cos(2.0 * math.pi * c.freq_hz * t + c.phase)
    return float(out) if out.ndim == 0 else out


def first_local_max(samples, start_index: int) -> int:
    """Smallest interior i >= start_index with samples[i] >= both neighbors
    (a plateau resolves to its first sample); start_index if none exists."""
    s = np.asarray(samples, dtype=float)
    if not 0 <= start_index < s.size:
        raise ValueError(f"start_index {start_index} out of bounds for length {s.size}")
    if s.size < 3:
        return start_index
    interior = (s[1:-1] >= s[:-2]) & (s[1:-1] >= s[2:])
    idx = np.nonzero(interior)[0] + 1
    idx = idx[idx >= max(start_index, 1)]
    return int(idx[0]) if idx.size else start_index


def spectral_predict(params: SpectralParams, stimulus: Stimulus, grid: Grid) -> TimeCourse:
    """Assemble the piecewise curve on the given grid."""
    t = grid.times
    n = grid.n
    k1, t1 = params.k1, params.t1
    if params.t3_relative:
        eff_t3 = stimulus.duration_s + params.t3
        eff_t3 = min(max(eff_t3, t1 + grid.dt), grid.t_end)
    else:
        eff_t3 = params.t3
        if eff_t3 <= t1:
            raise ValueError(f"t3 must exceed t1, got t3={eff_t3}, t1={t1}")

    i1 = int(np.searchsorted(t, t1 - _EPS, side="left"))
    i3 = int(np.searchsorted(t, eff_t3 - _EPS, side="left"))

    out = np.zeros(n)
    onset = (t >= -_EPS) & (np.arange(n) < i1)
    out[onset] = k1 * t[onset] / t1

    decay = eval_series(params.components, params.k2, t - t1)
    if i1 < i3:
        i2 = first_local_max(decay[:i3], i1)
        if i2 > i1:
            t2 = t[i2]
            seg = slice(i1, i2)
            out[seg] = k1 + (decay[i2] - k1) * (t[seg] - t1) / (t2 - t1)
        out[i2:i3] = decay[i2:i3]

    np.maximum(out, 0.0, out=out)
    out[i3:] = 0.0
    return TimeCourse(grid.t0, grid.dt, out)


def flatline_time(tc: TimeCourse) -> float:
    """First time after the peak from which the trace stays below 2% of its
    maximum; the end of the grid if it never settles."""
    s = tc.samples
    peak_idx = int(np.argmax(s))
    threshold = FLATLINE_FRACTION * s[peak_idx]
    if threshold <= 0:
        return tc.t_end
    suffix_max = np.maximum.accumulate(s[::-1])[::-1]
    for_candidates = suffix_max[peak_idx + 1:] < threshold
    if not np.any(for_candidates):
        return tc.t_end
    q = peak_idx + 1 + int(np.argmax(for_candidates))
    return tc.t0 + q * tc.dt


def _pad_components(comps, m: int) -> tuple[SpectrumComponent, ...]:
    comps = tuple(comps)
    if len(comps) > m:
        raise ValueError(f"cannot pad {len(comps)} components down to {m}")
    filler = (SpectrumComponent(0.0, 0.0, 0.0),) * (m - len(comps))
    return comps + filler


def _decay_window(samples: np.ndarray, i1: int) -> np.ndarray:
    nonzero = np.nonzero(samples)[0]
    if nonzero.size == 0 or nonzero[-1] <= i1:
        raise FitError("degenerate trial: no signal beyond the onset rise")
    return samples[i1: nonzero[-1] + 1]


def spectral_fit_descriptive(trial: Trial, m: int, config: FitConfig | None = None) -> FitResult:
    """Fit one trial: components fixed from the trial's own decay DFT, then
    k2 and t3 refined to minimize MSE.

    Initialization nests across m (the m-1 solution padded with a
    zero-amplitude component is kept as a candidate), so the achieved
    objective never increases with m.
    """
    config = config or FitConfig()
    check_trials([trial])
    obs = trial.observed
    grid = Grid.of(obs)
    dt = obs.dt
    t1 = DEFAULT_T1

    i1 = int(np.searchsorted(obs.times, t1 - _EPS, side="left"))
    if i1 >= len(obs) - 1:
        raise FitError(f"insufficient data: trial {trial.key} ends before the onset rise completes")
    window = _decay_window(obs.samples, i1)
    if window.size // 2 < m:
        raise ValueError(
            f"m={m} exceeds the {window.size // 2} usable bins of a "
            f"{window.size}-sample decay window"
        )

    comps0 = tuple(top_m_components(dft(window), m, dt))
    k2_0 = float(window.mean())
    t3_0 = flatline_time(obs)

    peak = float(np.max(np.abs(obs.samples)))
    k2_hi = max(2.0 * peak, 1.0)
    box = Box([-k2_hi, t1 + dt], [k2_hi, obs.t_end + dt])

    def objective_for(comps):
        def fn(v):
            p = SpectralParams(comps, k2=float(v[0]), t3=float(v[1]))
            pred = spectral_predict(p, trial.stimulus, grid)
            return guard(mse(pred.samples, obs.samples))
        return fn

    fn = objective_for(comps0)
    res = minimize_bounded(fn, [k2_0, t3_0], box, config.opt_options())
    best = FitResult("spectral", SpectralParams(comps0, float(res.x_best[0]), float(res.x_best[1])),
                     res.f_best, res, 1)

    if m > 1:
        prev = spectral_fit_descriptive(trial, m - 1, config)
        padded = _pad_components(prev.params.components, m)
        fn_prev = objective_for(padded)
        raw_obj = fn_prev(np.array([prev.params.k2, prev.params.t3]))
        res_warm = minimize_bounded(fn_prev, [prev.params.k2, prev.params.t3], box,
                                    config.opt_options())
        if res_warm.f_best < best.objective:
            best = FitResult("spectral",
                             SpectralParams(padded, float(res_warm.x_best[0]), float(res_warm.x_best[1])),
                             res_warm.f_best, res_warm, 1)
        if raw_obj < best.objective:
            best = FitResult("spectral",
                             SpectralParams(padded, prev.params.k2, prev.params.t3),
                             raw_obj, prev.opt, 1)
    return best


def _common_dt(trials) -> float:
    dt = trials[0].observed.dt
    for tr in trials:
        if abs(tr.observed.dt - dt) > _EPS:
            raise ValueError("training trials must share a sampling step")
    return dt


def _mean_onset_curve(trials, dt: float) -> np.ndarray:
    """Average the trials aligned at t = 0; shorter curves simply stop
    contributing beyond their length."""
    tails = []
    for tr in trials:
        onset = int(round(-tr.observed.t0 / dt))
        tails.append(tr.observed.samples[onset:])
    n = max(len(s) for s in tails)
    acc = np.zeros(n)
    cnt = np.zeros(n)
    for s in tails:
        acc[: len(s)] += s
        cnt[: len(s)] += 1.0
    return acc / np.maximum(cnt, 1.0)


def _params_from_vector(v: np.ndarray, m: int) -> SpectralParams:
    comps = []
    for i in range(m):
        f, a, ph = v[3 * i: 3 * i + 3]
        comps.append(SpectrumComponent(float(f), float(max(a, 0.0)), wrap_phase(float(ph))))
    return SpectralParams(tuple(comps), k2=float(v[3 * m]), t3=float(v[3 * m + 1]),
                          t3_relative=True)


def _vector_from_params(p: SpectralParams) -> np.ndarray:
    v = []
    for c in p.components:
        v.extend([c.freq_hz, c.amplitude, c.phase])
    v.extend([p.k2, p.t3])
    return np.array(v)


def spectral_fit_predictive(training, m: int, config: FitConfig | None = None,
                            warm: SpectralParams | None = None) -> FitResult:
    """One parameter set for many trials: free components initialized from
    the DFT of the training-mean decay curve, refined together with k2 and
    the offset-relative extinction time.

    ``warm`` (a lower-m predictive fit) is both re-used as a start and kept
    as an unrefined candidate, which makes training error nonincreasing in m.
    """
    config = config or FitConfig()
    training = list(training)
    check_trials(training)
    dt = _common_dt(training)
    t1 = DEFAULT_T1

    mean_curve = _mean_onset_curve(training, dt)
    i1 = int(math.ceil(t1 / dt - _EPS))
    window = _decay_window(mean_curve, i1)
    if window.size // 2 < m:
        raise FitError(
            f"training-mean decay window has only {window.size // 2} usable bins, "
            f"cannot initialize m={m} components"
        )

    comps0 = tuple(top_m_components(dft(window), m, dt))
    k2_0 = float(window.mean())
    offsets = [flatline_time(tr.observed) - tr.stimulus.duration_s for tr in training]
    t3_off_0 = float(np.median(offsets))

    peak = max(float(np.max(np.abs(tr.observed.samples))) for tr in training)
    amp_hi = max(2.0 * peak, 1.0)
    nyquist = 1.0 / (2.0 * dt)
    lo = [0.0, 0.0, -math.pi] * m + [-amp_hi, -70.0]
    hi = [nyquist, amp_hi, math.pi] * m + [amp_hi, 15.0]
    box = Box(lo, hi)

    grids = [Grid.of(tr.observed) for tr in training]

    def fn(v):
        p = _params_from_vector(v, m)
        total = 0.0
        for tr, grid in zip(training, grids):
            pred = spectral_predict(p, tr.stimulus, grid)
            total += mse(pred.samples, tr.observed.samples)
        return guard(total / len(training))

    start0 = _vector_from_params(
        SpectralParams(comps0, k2=k2_0, t3=t3_off_0, t3_relative=True)
    )
    res = minimize_bounded(fn, start0, box, config.opt_options())
    best_params = _params_from_vector(res.x_best, m)
    best = FitResult("spectral", best_params, res.f_best, res, len(training))

    if warm is not None:
        if not warm.t3_relative:
            raise ValueError("warm start must come from a predictive fit")
        padded = replace(warm, components=_pad_components(warm.components, m))
        raw_obj = fn(_vector_from_params(padded))
        res_warm = minimize_bounded(fn, _vector_from_params(padded), box, config.opt_options())
        if res_warm.f_best < best.objective:
            best = FitResult("spectral", _params_from_vector(res_warm.x_best, m),
                             res_warm.f_best, res_warm, len(training))
        if raw_obj < best.objective:
            best = FitResult("spectral", padded, raw_obj, best.opt, len(training))
    return best
