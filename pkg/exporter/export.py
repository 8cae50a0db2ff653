#!/usr/bin/env python3
"""Export the perezfornos2012 time courses bundled with pulse2percept.

pulse2percept ships joystick brightness-tracking curves recorded from
epiretinal-implant users under pulse-train stimulation. This script pulls
that dataset and rewrites it in the five-column CSV layout the fitting
library loads: one row per sample, stimulus onset at t=0, a uniform 0.25 s
time step, and 6-significant-digit floats so repeated exports are
byte-identical. A manifest JSON with the source version, trial counts, and
a checksum of the CSV lands next to the output file.

The source schema is adapted entirely here: column aliases, wide rows
(one array-valued cell per trial) versus long rows (one sample per row),
subject labels like "S3", and optional per-trial onset columns. Nothing in
the fitting library knows about pulse2percept.

Exit codes: 0 success, 2 usage error, 3 pulse2percept (or its data)
unavailable, 4 source schema did not match expectations.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

DT = 0.25
CSV_COLUMNS = ("subject_id", "freq_pps", "duration_s", "time_s", "brightness")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNAVAILABLE = 3
EXIT_SCHEMA = 4

# logical field -> accepted source column names, in preference order
FIELD_ALIASES = {
    "subject": ("subject", "subject_id", "Subject"),
    "freq": ("freq", "stim_freq", "frequency", "freq_pps"),
    "duration": ("stim_dur", "stim_duration", "duration", "duration_s", "dur"),
    "series": ("time_series", "brightness", "response", "rating"),
    "time": ("time", "times", "time_s", "t"),
}
ONSET_ALIASES = ("stim_onset", "onset", "t_start")

FETCH_NAMES = ("fetch_perezfornos2012", "load_perezfornos2012")


class SchemaError(Exception):
    """Source data did not look like the expected dataset."""


def _columns(frame) -> list[str]:
    cols = getattr(frame, "columns", None)
    if cols is None:
        raise SchemaError(f"source object has no columns: {type(frame)!r}")
    return [str(c) for c in cols]


def resolve_columns(frame) -> dict[str, str]:
    """Map each logical field to an actual column, or fail with a diff."""
    have = _columns(frame)
    resolved = {}
    missing = []
    for field, aliases in FIELD_ALIASES.items():
        hit = next((a for a in aliases if a in have), None)
        if hit is None:
            missing.append(f"{field} (any of {', '.join(aliases)})")
        else:
            resolved[field] = hit
    if missing:
        raise SchemaError(
            "source schema mismatch; missing fields:\n  "
            + "\n  ".join(missing)
            + f"\ncolumns present: {', '.join(have)}")
    return resolved


def parse_subject(value) -> int:
    """Subject labels arrive as ints or strings like 'S3'."""
    if isinstance(value, (int, np.integer)):
        return int(value)
    text = str(value).strip()
    if text and text[0] in "Ss" and text[1:].isdigit():
        return int(text[1:])
    if text.isdigit():
        return int(text)
    raise SchemaError(f"cannot parse subject label {value!r}")


def _is_array_cell(value) -> bool:
    return hasattr(value, "__len__") and not isinstance(value, (str, bytes))


def _clean(t, b):
    """Finite samples only, sorted by time, duplicates collapsed to first."""
    t = np.asarray(t, dtype=float)
    b = np.asarray(b, dtype=float)
    keep = np.isfinite(t) & np.isfinite(b)
    t, b = t[keep], b[keep]
    order = np.argsort(t, kind="stable")
    t, b = t[order], b[order]
    if t.size:
        first = np.concatenate(([True], np.diff(t) > 1e-9))
        t, b = t[first], b[first]
    return t, b


def raw_trials(frame) -> list[tuple[int, float, float, np.ndarray, np.ndarray]]:
    """(subject, freq, duration, times, values) per source row, unresampled."""
    cols = resolve_columns(frame)
    onset_col = next((a for a in ONSET_ALIASES if a in _columns(frame)), None)
    subjects = list(frame[cols["subject"]])
    if not subjects:
        raise SchemaError("source dataset is empty")
    freqs = list(frame[cols["freq"]])
    durs = list(frame[cols["duration"]])
    series = list(frame[cols["series"]])
    times = list(frame[cols["time"]])
    onsets = list(frame[onset_col]) if onset_col else [0.0] * len(subjects)

    wide = _is_array_cell(series[0])
    out = []
    if wide:
        for sid, f, d, b, t, on in zip(subjects, freqs, durs, series, times, onsets):
            if not _is_array_cell(t):
                raise SchemaError(
                    "series cells are arrays but time cells are scalars")
            tt, bb = _clean(np.asarray(t, float) - float(on), b)
            out.append((parse_subject(sid), float(f), float(d), tt, bb))
    else:
        groups: dict[tuple[int, float, float], list[tuple[float, float]]] = {}
        for sid, f, d, b, t, on in zip(subjects, freqs, durs, series, times, onsets):
            key = (parse_subject(sid), float(f), float(d))
            groups.setdefault(key, []).append((float(t) - float(on), float(b)))
        for (sid, f, d), pairs in groups.items():
            tt, bb = _clean([p[0] for p in pairs], [p[1] for p in pairs])
            out.append((sid, f, d, tt, bb))
    return out


def to_grid(t: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Resample one trial onto the uniform grid starting at onset.

    Pre-onset samples (negative times) are dropped; the first grid point is
    t=0 even when the source starts slightly later, holding the earliest
    value. Needs at least two usable samples.
    """
    keep = t >= -1e-9
    t, b = t[keep], b[keep]
    if t.size < 2:
        raise SchemaError("trial has fewer than 2 usable samples after onset")
    n = int(np.floor(t[-1] / DT + 1e-9))
    grid = np.arange(n + 1) * DT
    return grid, np.interp(grid, t, b)


def export_trials(frame) -> list[tuple[int, float, float, np.ndarray, np.ndarray]]:
    """Regridded trials, duplicates per (subject, condition) averaged."""
    groups: dict[tuple[int, float, float], list[tuple[np.ndarray, np.ndarray]]] = {}
    for sid, f, d, t, b in raw_trials(frame):
        groups.setdefault((sid, f, d), []).append(to_grid(t, b))
    out = []
    for key in sorted(groups):
        mem = groups[key]
        n = min(g[0].size for g in mem)
        times = mem[0][0][:n]
        values = np.mean([g[1][:n] for g in mem], axis=0)
        out.append((*key, times, values))
    return out


def _fmt(x: float) -> str:
    return format(float(x), ".6g")


def write_csv(trials, path: Path) -> bytes:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for sid, f, d, times, values in trials:
            row_f, row_d = _fmt(f), _fmt(d)
            for t, b in zip(times, values):
                writer.writerow([sid, row_f, row_d, _fmt(t), _fmt(b)])
    return path.read_bytes()


def build_manifest(trials, csv_bytes: bytes, version: str) -> dict:
    return {
        "source_package": "pulse2percept",
        "source_version": version,
        "n_trials": len(trials),
        "subjects": sorted({sid for sid, *_ in trials}),
        "conditions": [[f, d] for f, d in sorted({(f, d) for _, f, d, *_ in trials})],
        "dt_s": DT,
        "csv_sha256": hashlib.sha256(csv_bytes).hexdigest(),
    }


def run_export(frame, out: Path, version: str) -> dict:
    """Adapt, regrid, write CSV + manifest; returns the manifest dict."""
    trials = export_trials(frame)
    out.parent.mkdir(parents=True, exist_ok=True)
    csv_bytes = write_csv(trials, out)
    manifest = build_manifest(trials, csv_bytes, version)
    manifest_path = out.with_name(out.name + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
    return manifest


def load_source():
    """Import pulse2percept and fetch the dataset frame."""
    try:
        import pulse2percept
        from pulse2percept import datasets
    except ImportError as exc:
        raise RuntimeError(
            "pulse2percept is not installed; run `pip install pulse2percept` "
            f"and retry ({exc})") from exc
    fetch = next((getattr(datasets, name) for name in FETCH_NAMES
                  if hasattr(datasets, name)), None)
    if fetch is None:
        raise SchemaError(
            "pulse2percept.datasets has none of: " + ", ".join(FETCH_NAMES)
            + f"; available: {', '.join(sorted(dir(datasets)))}")
    try:
        frame = fetch()
    except Exception as exc:
        raise RuntimeError(f"fetching the dataset failed: {exc}") from exc
    return frame, getattr(pulse2percept, "__version__", "unknown")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Export the bundled behavioral time courses to CSV.")
    parser.add_argument("--out", required=True, type=Path,
                        help="output CSV path; manifest goes to <out>.manifest.json")
    args = parser.parse_args(argv)
    try:
        frame, version = load_source()
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNAVAILABLE
    try:
        manifest = run_export(frame, args.out, version)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    print(f"wrote {args.out} ({manifest['n_trials']} trials, "
          f"subjects {manifest['subjects']})")
    print(f"wrote {args.out}.manifest.json")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
