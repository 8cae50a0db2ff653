"""How many spectral components does prediction actually need?

Sweeps the component count m over leave-one-subject-out folds.  Training
error can only go down with m (each fit warm-starts from the previous one
and keeps it as a candidate); held-out error stops improving once the
extra cosines start memorizing the training subjects, and where that point
lands depends on the data.  Prints one line per subject with the errors at
each m and where the validation minimum lands.
"""

import argparse
import sys
from pathlib import Path

from phosdyn import FitConfig, load_dataset, sweep_m

DEFAULT_DATA = Path(__file__).resolve().parent.parent / "data" / "surrogate_timecourses.csv"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dataset", type=Path, default=DEFAULT_DATA)
    parser.add_argument("--m-min", type=int, default=1)
    parser.add_argument("--m-max", type=int, default=4)
    parser.add_argument("--restarts", type=int, default=0)
    parser.add_argument("--f-tol", type=float, default=1e-4)
    parser.add_argument("--x-tol", type=float, default=1e-4)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    dataset = load_dataset(args.dataset)
    config = FitConfig(restarts=args.restarts, f_tol=args.f_tol,
                       x_tol=args.x_tol, seed=args.seed)
    report = sweep_m(dataset, (args.m_min, args.m_max), config)

    header = "subject  " + "  ".join(f"m={m}: train/val" for m in report.m_values)
    print(header)
    for curve in report.curves:
        if curve.failed:
            print(f"{curve.subject:>7}  FAILED: {curve.error}")
            continue
        cells = "  ".join(f"{tr:6.3f}/{va:6.3f}"
                          for tr, va in zip(curve.train_mse, curve.val_mse))
        print(f"{curve.subject:>7}  {cells}  (val argmin m={curve.argmin_val})")

    done = [c for c in report.curves if not c.failed]
    if done:
        small = sum(c.argmin_val <= 2 for c in done)
        print(f"\nvalidation argmin at m<=2 for {small}/{len(done)} subjects")
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
