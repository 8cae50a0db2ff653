"""Generate a synthetic stand-in for the behavioral time-course dataset.

Nine simulated subjects rate phosphene brightness over time for five
stimulus conditions (5/20/60 pps at 10 s, plus 20 pps at 1 s and 60 s).
Each subject follows one perceptual archetype: fading during stimulation,
a sustained plateau, long post-offset persistence, a post-offset rebound
bump, or erratic multi-peaked reports.  The curves are built from stretched
exponentials and Gaussian bumps, deliberately outside every model family in
the package, so fits face honest approximation error.

The output is deterministic for a given seed; the checked-in copy lives at
data/surrogate_timecourses.csv.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from phosdyn import Dataset, Stimulus, TimeCourse, Trial, save_dataset

CONDITIONS = [(5.0, 10.0), (20.0, 10.0), (60.0, 10.0), (20.0, 1.0), (20.0, 60.0)]
SUBJECTS = list(range(1, 10))
DT = 0.25
SCALE = 10.0          # rating scale ceiling
CUTOFF = 0.05         # post-offset level treated as "percept gone"

ARCHETYPES = {
    1: "fading", 2: "fading", 3: "fading",
    4: "rebound", 5: "plateau", 6: "plateau",
    7: "persistent", 8: "rebound", 9: "erratic",
}


def subject_traits(subject: int, seed: int) -> dict:
    rng = np.random.default_rng([seed, subject])
    kind = ARCHETYPES[subject]
    traits = {
        "kind": kind,
        "amp": rng.uniform(0.75, 0.95),
        "tau_rise": rng.uniform(0.25, 0.45),
        "rebound_gain": 0.0,
    }
    if kind == "fading":
        traits.update(tau_fade=rng.uniform(2.0, 6.0), p_fade=rng.uniform(1.2, 1.8),
                      level=rng.uniform(0.02, 0.08), tau_persist=rng.uniform(0.5, 1.5))
    elif kind == "plateau":
        traits.update(tau_fade=rng.uniform(20.0, 40.0), p_fade=rng.uniform(1.0, 1.5),
                      level=rng.uniform(0.55, 0.8), tau_persist=rng.uniform(1.0, 3.0))
    elif kind == "persistent":
        traits.update(tau_fade=rng.uniform(10.0, 25.0), p_fade=1.2,
                      level=rng.uniform(0.3, 0.5), tau_persist=rng.uniform(3.0, 6.0))
    elif kind == "rebound":
        traits.update(tau_fade=rng.uniform(3.0, 7.0), p_fade=1.4,
                      level=rng.uniform(0.05, 0.15), tau_persist=rng.uniform(1.0, 2.0),
                      rebound_gain=rng.uniform(2.5, 4.0),
                      rebound_delay=rng.uniform(1.5, 3.0),
                      rebound_width=rng.uniform(0.8, 1.5))
    else:  # erratic
        traits.update(tau_fade=rng.uniform(8.0, 15.0), p_fade=1.3,
                      level=rng.uniform(0.2, 0.4), tau_persist=rng.uniform(1.0, 2.0))
    return traits


def percept_curve(subject: int, freq: float, dur: float, seed: int) -> np.ndarray:
    traits = subject_traits(subject, seed)
    rng = np.random.default_rng([seed, subject, int(freq * 4), int(dur * 4)])
    t = np.arange(0.0, dur + 10.0 + DT / 2, DT)

    amp = traits["amp"] * rng.uniform(0.92, 1.05) * (0.85 + 0.3 * freq / 60.0)
    # higher pulse rates fade faster
    tau_fade = traits["tau_fade"] * rng.uniform(0.85, 1.15) / (freq / 20.0) ** 0.4

    rise = 1.0 - np.exp(-t / traits["tau_rise"])
    fade = np.exp(-(t / tau_fade) ** traits["p_fade"])
    shape = traits["level"] + (1.0 - traits["level"]) * fade

    b = SCALE * amp * rise * shape
    after = t >= dur
    b[after] = b[np.searchsorted(t, dur) - 1] * np.exp(
        -((t[after] - dur) / traits["tau_persist"]) ** 1.1)

    if traits["rebound_gain"] > 0:
        center = dur + traits["rebound_delay"] * rng.uniform(0.9, 1.1)
        width = traits["rebound_width"]
        b += traits["rebound_gain"] * np.exp(-(((t - center) / width) ** 2))

    if traits["kind"] == "erratic":
        for _ in range(3):
            center = rng.uniform(0.2, 0.9) * dur
            width = rng.uniform(0.08, 0.2) * dur + 0.5
            b += rng.uniform(1.0, 3.0) * np.exp(-(((t - center) / width) ** 2))

    b = np.clip(b, 0.0, SCALE)
    # once the percept dies after offset, keep it at exactly zero
    gone = np.logical_and.accumulate((b < CUTOFF)[::-1])[::-1]
    cut = np.nonzero(gone & after)[0]
    if cut.size:
        b[cut[0]:] = 0.0
    b[0] = 0.0
    return b


def build_dataset(seed: int) -> Dataset:
    trials = []
    for subject in SUBJECTS:
        for freq, dur in CONDITIONS:
            samples = percept_curve(subject, freq, dur, seed)
            trials.append(Trial(subject, Stimulus(freq, dur),
                                TimeCourse(0.0, DT, samples)))
    return Dataset(trials)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path,
                        default=Path(__file__).resolve().parent.parent
                        / "data" / "surrogate_timecourses.csv")
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args(argv)

    dataset = build_dataset(args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(dataset, args.out)
    print(f"wrote {args.out}: {len(dataset)} trials, "
          f"{len(dataset.subjects)} subjects, {len(dataset.conditions)} conditions")
    return 0


if __name__ == "__main__":
    sys.exit(main())
