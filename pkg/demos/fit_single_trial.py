"""Fit all three brightness models to one trial and compare them.

The default selection is subject 4 at 20 pps / 10 s from the surrogate
dataset, a trial with a post-offset rebound bump.  The spectral and
exponential models can chase that bump (cosine components, the sinusoidal
rebound segment); the baseline model only fades and persists, so its error
on this trial is visibly worse.  Fitted parameters print as JSON and the
model curves can be dumped to CSV for plotting.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from phosdyn import (
    FitConfig,
    Grid,
    baseline_fit,
    baseline_predict,
    exp_fit,
    exp_predict,
    load_dataset,
    score,
    spectral_fit_descriptive,
    spectral_predict,
)

DEFAULT_DATA = Path(__file__).resolve().parent.parent / "data" / "surrogate_timecourses.csv"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dataset", type=Path, default=DEFAULT_DATA)
    parser.add_argument("--subject", type=int, default=4)
    parser.add_argument("--freq", type=float, default=20.0)
    parser.add_argument("--dur", type=float, default=10.0)
    parser.add_argument("--m", type=int, default=4, help="spectral components")
    parser.add_argument("--restarts", type=int, default=2)
    parser.add_argument("--out", type=Path, help="directory for curve CSVs")
    args = parser.parse_args(argv)

    trial = load_dataset(args.dataset).get(args.subject, args.freq, args.dur)
    if trial is None:
        print("no such trial", file=sys.stderr)
        return 2
    grid = Grid.of(trial.observed)
    config = FitConfig(restarts=args.restarts, seed=0)

    fits = {
        "spectral": spectral_fit_descriptive(trial, args.m, config),
        "exponential": exp_fit([trial], config),
        "baseline": baseline_fit([trial], config),
    }
    predict = {
        "spectral": spectral_predict,
        "exponential": exp_predict,
        "baseline": baseline_predict,
    }

    curves = {}
    for name, fit in fits.items():
        pred = predict[name](fit.params, trial.stimulus, grid)
        s = score(trial.observed, pred)
        curves[name] = pred
        r_txt = "--" if s.r is None else f"{s.r:.3f}"
        print(f"{name:<12} mse={s.mse:7.3f}  r={r_txt}")
        print(f"  params: {json.dumps(fit.params.to_json_dict())}")

    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        for name, pred in curves.items():
            rows = "\n".join(f"{t:.6g},{b:.6g}"
                             for t, b in zip(pred.times, pred.samples))
            (args.out / f"{name}.csv").write_text("time_s,brightness\n" + rows + "\n")
        obs = "\n".join(f"{t:.6g},{b:.6g}"
                        for t, b in zip(trial.observed.times,
                                        np.asarray(trial.observed.samples)))
        (args.out / "observed.csv").write_text("time_s,brightness\n" + obs + "\n")
        print(f"curves written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
