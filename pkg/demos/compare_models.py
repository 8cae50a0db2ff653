"""Cross-validate the three brightness models and rank them.

Runs the chosen hold-out protocol (leave-one-subject-out by default) for
the spectral, exponential, and baseline models on one dataset and prints
each report table followed by a ranking on held-out Pearson r.  With the
default light optimizer settings the surrogate dataset takes a few
minutes; pass --restarts 8 --f-tol 1e-8 --x-tol 1e-8 for fits at the
quality used in the benchmark tests.
"""

import argparse
import sys
import time
from pathlib import Path

from phosdyn import FitConfig, load_dataset, loco, loso

DEFAULT_DATA = Path(__file__).resolve().parent.parent / "data" / "surrogate_timecourses.csv"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dataset", type=Path, default=DEFAULT_DATA)
    parser.add_argument("--protocol", choices=("subject", "stimulus"),
                        default="subject")
    parser.add_argument("--m", type=int, default=2, help="spectral components")
    parser.add_argument("--restarts", type=int, default=1)
    parser.add_argument("--f-tol", type=float, default=1e-6)
    parser.add_argument("--x-tol", type=float, default=1e-6)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    dataset = load_dataset(args.dataset)
    config = FitConfig(restarts=args.restarts, f_tol=args.f_tol,
                       x_tol=args.x_tol, seed=args.seed)
    runner = loso if args.protocol == "subject" else loco

    reports = {}
    for model in ("spectral", "exponential", "baseline"):
        t0 = time.time()
        kwargs = {"m": args.m} if model == "spectral" else {}
        reports[model] = runner(dataset, model, config, **kwargs)
        print(reports[model].to_table())
        print(f"({model}: {time.time() - t0:.0f}s)\n")

    ranked = sorted(reports.items(),
                    key=lambda kv: kv[1].aggregate["r_mean"], reverse=True)
    print("ranking by held-out r: "
          + "  >  ".join(f"{name} ({rep.aggregate['r_mean']:.3f})"
                         for name, rep in ranked))
    return 0 if all(rep.ok for rep in reports.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
