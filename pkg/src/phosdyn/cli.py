"""Command-line entry point.

Subcommands: fit (per-trial or pooled model fits), evaluate (leave-one-out
cross-validation tables), sweep (spectral component-count curves), and
export-plot (observed and model curves as CSV plus a small SVG overlay).

Exit codes: 0 success, 1 runtime or fit failure, 2 usage or configuration
error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .baseline import BaselineParams
from .crossval import condition_label, fit_model, loco, loso, predict_model, sweep_m
from .data import Dataset, Grid, Trial, load_dataset, save_dataset
from .errors import DataError, FitError, FormatError
from .exponential import ExpParams
from .fitting import FitConfig
from .metrics import score
from .spectral import MAX_COMPONENTS, SpectralParams, spectral_fit_descriptive

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

_PARAM_TYPES = {
    "spectral": SpectralParams,
    "exponential": ExpParams,
    "baseline": BaselineParams,
}


@dataclass(frozen=True)
class RunConfig:
    dataset: Path
    model: str
    m: int
    seed: int
    fit_config: FitConfig
    out: Path | None
    format: str


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _fit_config(args) -> FitConfig:
    return FitConfig(f_tol=args.f_tol, x_tol=args.x_tol, max_iters=args.max_iters,
                     restarts=args.restarts, seed=args.seed)


def _load(args) -> Dataset:
    path = Path(args.dataset)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    return load_dataset(path)


def _add_common(p: argparse.ArgumentParser, with_model: bool = True) -> None:
    p.add_argument("--dataset", required=True, help="canonical time-course CSV")
    if with_model:
        p.add_argument("--model", choices=sorted(_PARAM_TYPES), default="spectral")
        p.add_argument("--m", type=int, default=2,
                       help="spectral component count (spectral model only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--f-tol", type=float, default=1e-8)
    p.add_argument("--x-tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--out", type=Path, default=None)


def _add_selector(p: argparse.ArgumentParser) -> None:
    p.add_argument("--subject", type=int, default=None)
    p.add_argument("--freq", type=float, default=None)
    p.add_argument("--dur", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phosdyn",
                                     description="Phosphene brightness models: fit, "
                                                 "cross-validate, sweep, export curves.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit one model to selected trials")
    _add_common(p_fit)
    _add_selector(p_fit)
    p_fit.add_argument("--predictive", action="store_true",
                       help="one pooled fit over all selected trials instead of "
                            "one fit per trial")

    p_eval = sub.add_parser("evaluate", help="leave-one-out cross-validation report")
    _add_common(p_eval)
    p_eval.add_argument("--protocol", choices=["subject", "stimulus"], default="subject")
    p_eval.add_argument("--format", choices=["json", "table"], default="json")

    p_sweep = sub.add_parser("sweep", help="spectral component-count sweep")
    _add_common(p_sweep, with_model=False)
    p_sweep.add_argument("--m-min", type=int, default=1)
    p_sweep.add_argument("--m-max", type=int, default=MAX_COMPONENTS)
    p_sweep.add_argument("--format", choices=["csv", "json"], default="csv")

    p_plot = sub.add_parser("export-plot",
                            help="write observed + model curves and an SVG overlay")
    p_plot.add_argument("--dataset", required=True)
    _add_selector(p_plot)
    p_plot.add_argument("--params", type=Path, action="append", required=True,
                        help="fit output JSON; repeat for several models")
    p_plot.add_argument("--seed", type=int, default=0)
    p_plot.add_argument("--out", type=Path, default=Path("plot-export"))
    return parser


def _check_m(model: str, m: int) -> None:
    if model == "spectral" and not 1 <= m <= MAX_COMPONENTS:
        raise ValueError(f"--m must be in [1, {MAX_COMPONENTS}], got {m}")


def _fit_one_trial(model: str, trial: Trial, m: int, config: FitConfig):
    if model == "spectral":
        return spectral_fit_descriptive(trial, m, config)
    return fit_model(model, [trial], config)


def _score_line(model: str, trial: Trial, sc) -> str:
    r_txt = f"{sc.r:.4f}" if sc.r is not None else "--"
    return (f"{model} subject={trial.subject_id} freq={trial.stimulus.freq_pps:g} "
            f"dur={trial.stimulus.duration_s:g} mse={sc.mse:.6g} r={r_txt}")


def _fit_record(model: str, m: int, fit, trial: Trial | None, sc=None) -> dict:
    rec = {"model": model}
    if model == "spectral":
        rec["m"] = m
    if trial is not None:
        rec["subject"] = trial.subject_id
        rec["freq_pps"] = trial.stimulus.freq_pps
        rec["duration_s"] = trial.stimulus.duration_s
    rec["objective"] = fit.objective
    if sc is not None:
        rec["mse"] = sc.mse
        rec["r"] = sc.r
    rec["params"] = fit.params.to_json_dict()
    return rec


def cmd_fit(args) -> int:
    try:
        dataset = _load(args)
        _check_m(args.model, args.m)
    except (OSError, FormatError, DataError, ValueError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    trials = dataset.select(subject=args.subject, freq=args.freq, dur=args.dur)
    if not trials:
        _err("selector matched no trials")
        return EXIT_USAGE
    config = _fit_config(args)

    try:
        if args.predictive:
            fit = fit_model(args.model, trials, config, args.m)
            records = []
            for tr in trials:
                pred = predict_model(args.model, fit.params, tr.stimulus, Grid.of(tr.observed))
                sc = score(tr.observed, pred)
                print(_score_line(args.model, tr, sc))
            records.append(_fit_record(args.model, args.m, fit, None))
        else:
            records = []
            for tr in trials:
                fit = _fit_one_trial(args.model, tr, args.m, config)
                pred = predict_model(args.model, fit.params, tr.stimulus, Grid.of(tr.observed))
                sc = score(tr.observed, pred)
                print(_score_line(args.model, tr, sc))
                records.append(_fit_record(args.model, args.m, fit, tr, sc))
    except FitError as exc:
        _err(f"fit failed: {exc}")
        return EXIT_FAILURE

    _write_fit_records(records, args)
    return EXIT_OK


def _fit_record_name(rec: dict) -> str:
    parts = [f"fit_{rec['model']}"]
    if "m" in rec:
        parts.append(f"m{rec['m']}")
    if "subject" in rec:
        parts.append(f"s{rec['subject']}")
        parts.append(condition_label(rec["freq_pps"], rec["duration_s"]))
    return "_".join(parts) + ".json"


def _write_fit_records(records: list[dict], args) -> None:
    if args.out is None:
        print(json.dumps(records, indent=2))
        return
    if len(records) == 1 and args.out.suffix == ".json":
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps(records[0], indent=2) + "\n")
        print(f"wrote {args.out}")
        return
    args.out.mkdir(parents=True, exist_ok=True)
    for rec in records:
        path = args.out / _fit_record_name(rec)
        path.write_text(json.dumps(rec, indent=2) + "\n")
        print(f"wrote {path}")


def cmd_evaluate(args) -> int:
    try:
        dataset = _load(args)
        _check_m(args.model, args.m)
        config = _fit_config(args)
        if args.protocol == "subject":
            report = loso(dataset, args.model, config, args.m)
        else:
            report = loco(dataset, args.model, config, args.m)
    except (OSError, FormatError, DataError, ValueError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    text = report.to_json() if args.format == "json" else report.to_table()
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return EXIT_OK if report.ok else EXIT_FAILURE


def cmd_sweep(args) -> int:
    try:
        dataset = _load(args)
        if not 1 <= args.m_min <= args.m_max <= MAX_COMPONENTS:
            raise ValueError(
                f"need 1 <= --m-min <= --m-max <= {MAX_COMPONENTS}, "
                f"got {args.m_min}..{args.m_max}")
        config = _fit_config(args)
        report = sweep_m(dataset, (args.m_min, args.m_max), config)
    except (OSError, FormatError, DataError, ValueError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    if args.format == "json":
        text = report.to_json()
    else:
        text = _sweep_csv(report)
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return EXIT_OK if report.ok else EXIT_FAILURE


def _sweep_csv(report) -> str:
    lines = ["subject,m,train_mse,train_se,val_mse,val_se"]
    for curve in report.curves:
        if curve.failed:
            continue
        for i, m in enumerate(curve.m_values):
            lines.append(f"{curve.subject},{m},{curve.train_mse[i]:.6g},"
                         f"{curve.train_se[i]:.6g},{curve.val_mse[i]:.6g},"
                         f"{curve.val_se[i]:.6g}")
    return "\n".join(lines) + "\n"


def _load_params_file(path: Path):
    d = json.loads(path.read_text())
    try:
        kind = d["model"]
        cls = _PARAM_TYPES[kind]
        return kind, cls.from_json_dict(d["params"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FitError(f"params file {path} does not match its model kind: {exc}")


def cmd_export_plot(args) -> int:
    try:
        dataset = _load(args)
    except (OSError, FormatError, DataError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    trials = dataset.select(subject=args.subject, freq=args.freq, dur=args.dur)
    if len(trials) != 1:
        _err(f"selector must resolve to exactly one trial, matched {len(trials)}")
        return EXIT_USAGE
    trial = trials[0]

    try:
        params_list = [_load_params_file(p) for p in args.params]
    except OSError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except FitError as exc:
        _err(str(exc))
        return EXIT_FAILURE

    out_dir = args.out
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = Grid.of(trial.observed)

    observed_path = out_dir / "observed.csv"
    save_dataset(Dataset([trial]), observed_path)
    written = [observed_path]

    curves = [("observed", trial.observed)]
    seen: dict[str, int] = {}
    for kind, params in params_list:
        pred = predict_model(kind, params, trial.stimulus, grid)
        seen[kind] = seen.get(kind, 0) + 1
        stem = kind if seen[kind] == 1 else f"{kind}{seen[kind]}"
        path = out_dir / f"{stem}.csv"
        _write_curve_csv(path, pred)
        written.append(path)
        curves.append((stem, pred))

    svg_path = out_dir / "overlay.svg"
    svg_path.write_text(_overlay_svg(curves, trial.stimulus.duration_s))
    written.append(svg_path)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _write_curve_csv(path: Path, tc) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "brightness"])
        for t, b in zip(tc.times, tc.samples):
            writer.writerow([format(t, ".6g"), format(b, ".6g")])


_SVG_COLORS = {"observed": "#000000", "spectral": "#1f77b4",
               "exponential": "#d62728", "baseline": "#2ca02c"}


def _overlay_svg(curves, duration_s: float, width: int = 800, height: int = 400) -> str:
    pad = 40
    t_lo = min(tc.t0 for _, tc in curves)
    t_hi = max(tc.t_end for _, tc in curves)
    y_hi = max(10.0, max(float(tc.samples.max()) for _, tc in curves))
    span_t = max(t_hi - t_lo, 1e-9)

    def sx(t):
        return pad + (t - t_lo) / span_t * (width - 2 * pad)

    def sy(v):
        return height - pad - v / y_hi * (height - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<rect id="duration-bar" x="{sx(0):.2f}" y="{height - pad + 8:.2f}" '
             f'width="{sx(duration_s) - sx(0):.2f}" height="6" fill="#aaaaaa"/>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" '
             f'y2="{height - pad}" stroke="#333333"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" '
             f'stroke="#333333"/>']
    for name, tc in curves:
        color = _SVG_COLORS.get(name.rstrip("0123456789"), "#888888")
        pts = " ".join(f"{sx(t):.2f},{sy(v):.2f}" for t, v in zip(tc.times, tc.samples))
        parts.append(f'<polyline id="{name}" points="{pts}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"fit": cmd_fit, "evaluate": cmd_evaluate,
                "sweep": cmd_sweep, "export-plot": cmd_export_plot}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
