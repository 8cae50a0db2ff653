"""CLI subcommands: flags, exit codes, files written, and determinism."""

import json
import re
import subprocess
import sys

import numpy as np
import pytest

from phosdyn import Dataset, SpectralParams, Stimulus, TimeCourse, Trial, load_dataset, save_dataset
from phosdyn.cli import main

from _synth import DT, smooth_trial, spectral_draw

LIGHT = ["--restarts", "0", "--f-tol", "1e-4", "--x-tol", "1e-4"]


@pytest.fixture()
def mini_csv(tmp_path):
    trials = [smooth_trial(sid, freq, 10.0)
              for sid in (1, 2) for freq in (20.0, 60.0)]
    path = tmp_path / "mini.csv"
    save_dataset(Dataset(trials), path)
    return path


def run(args, capsys):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestFit:
    def test_descriptive_fit_prints_score_and_writes_file(self, mini_csv, tmp_path, capsys):
        out_dir = tmp_path / "fits"
        code, out, err = run(
            ["fit", "--dataset", mini_csv, "--model", "spectral", "--m", "2",
             "--subject", "1", "--freq", "20", "--dur", "10",
             "--out", out_dir, *LIGHT], capsys)
        assert code == 0
        assert re.search(r"spectral subject=1 freq=20 dur=10 mse=\S+ r=\S+", out)
        rec_path = out_dir / "fit_spectral_m2_s1_20pps-10s.json"
        assert rec_path.is_file()
        rec = json.loads(rec_path.read_text())
        assert rec["model"] == "spectral"
        assert rec["m"] == 2
        SpectralParams.from_json_dict(rec["params"])

    def test_self_generated_trial_reports_tiny_mse(self, tmp_path, capsys):
        rng = np.random.default_rng(97)
        _, trial = spectral_draw(rng, m=2)
        path = tmp_path / "gen.csv"
        save_dataset(Dataset([trial]), path)
        code, out, _ = run(
            ["fit", "--dataset", path, "--model", "spectral", "--m", "2",
             "--restarts", "0"], capsys)
        assert code == 0
        mse = float(re.search(r"mse=(\S+)", out).group(1))
        assert mse < 1e-6

    def test_unknown_model_is_usage_error(self, mini_csv, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["fit", "--dataset", str(mini_csv), "--model", "quadratic"])
        assert exc.value.code == 2

    def test_missing_dataset_is_usage_error(self, tmp_path, capsys):
        code, _, err = run(["fit", "--dataset", tmp_path / "nope.csv"], capsys)
        assert code == 2
        assert "not found" in err

    def test_empty_selector_is_usage_error(self, mini_csv, capsys):
        code, _, err = run(
            ["fit", "--dataset", mini_csv, "--subject", "99"], capsys)
        assert code == 2
        assert "no trials" in err

    def test_m_out_of_range_is_usage_error(self, mini_csv, capsys):
        code, _, err = run(
            ["fit", "--dataset", mini_csv, "--model", "spectral", "--m", "0"], capsys)
        assert code == 2

    def test_degenerate_trial_is_fit_failure(self, tmp_path, capsys):
        zero = Trial(1, Stimulus(20.0, 10.0), TimeCourse(0.0, DT, np.zeros(81)))
        path = tmp_path / "zero.csv"
        save_dataset(Dataset([zero]), path)
        code, _, err = run(
            ["fit", "--dataset", path, "--model", "baseline", *LIGHT], capsys)
        assert code == 1
        assert "degenerate" in err

    def test_predictive_writes_single_pooled_record(self, mini_csv, tmp_path, capsys):
        out_path = tmp_path / "pooled.json"
        code, out, _ = run(
            ["fit", "--dataset", mini_csv, "--model", "baseline", "--subject", "1",
             "--predictive", "--out", out_path, *LIGHT], capsys)
        assert code == 0
        assert out.count("baseline subject=1") == 2  # scored per trial
        rec = json.loads(out_path.read_text())
        assert rec["model"] == "baseline"
        assert "subject" not in rec

    def test_stdout_json_when_no_out(self, mini_csv, capsys):
        code, out, _ = run(
            ["fit", "--dataset", mini_csv, "--model", "baseline",
             "--subject", "1", "--freq", "20", *LIGHT], capsys)
        assert code == 0
        payload = out[out.index("["):]
        records = json.loads(payload)
        assert len(records) == 1
        assert records[0]["subject"] == 1


class TestEvaluate:
    def test_subject_protocol_table(self, mini_csv, tmp_path, capsys):
        out_path = tmp_path / "report.txt"
        code, out, _ = run(
            ["evaluate", "--dataset", mini_csv, "--model", "baseline",
             "--protocol", "subject", "--format", "table",
             "--out", out_path, *LIGHT], capsys)
        assert code == 0
        lines = out_path.read_text().splitlines()
        folds = [ln.split()[0] for ln in lines[2:]]
        assert folds == ["1", "2", "Average"]

    def test_stimulus_protocol_rows(self, mini_csv, capsys):
        code, out, _ = run(
            ["evaluate", "--dataset", mini_csv, "--model", "baseline",
             "--protocol", "stimulus", "--format", "json", *LIGHT], capsys)
        assert code == 0
        report = json.loads(out)
        assert report["protocol"] == "stimulus"
        assert [row["fold"] for row in report["rows"]] == ["20pps-10s", "60pps-10s"]

    def test_missing_dataset_is_usage_error(self, tmp_path, capsys):
        code, _, _ = run(
            ["evaluate", "--dataset", tmp_path / "absent.csv"], capsys)
        assert code == 2

    def test_failed_fold_exits_nonzero(self, tmp_path, capsys):
        zero = Trial(2, Stimulus(20.0, 10.0), TimeCourse(0.0, DT, np.zeros(81)))
        ds = Dataset([smooth_trial(1, 20.0, 10.0), zero])
        path = tmp_path / "bad.csv"
        save_dataset(ds, path)
        code, out, _ = run(
            ["evaluate", "--dataset", path, "--model", "baseline", *LIGHT], capsys)
        assert code == 1
        report = json.loads(out)
        assert any(row["failed"] for row in report["rows"])

    def test_repeat_runs_byte_identical(self, mini_csv, tmp_path, capsys):
        paths = [tmp_path / "a.json", tmp_path / "b.json"]
        for p in paths:
            code, _, _ = run(
                ["evaluate", "--dataset", mini_csv, "--model", "baseline",
                 "--seed", "5", "--out", p, *LIGHT], capsys)
            assert code == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_seed_recorded_in_report(self, mini_csv, capsys):
        code, out, _ = run(
            ["evaluate", "--dataset", mini_csv, "--model", "baseline",
             "--seed", "11", *LIGHT], capsys)
        assert code == 0
        assert json.loads(out)["seed"] == 11


class TestSweep:
    def test_csv_curves(self, mini_csv, tmp_path, capsys):
        out_path = tmp_path / "sweep.csv"
        code, _, _ = run(
            ["sweep", "--dataset", mini_csv, "--m-min", "1", "--m-max", "2",
             "--out", out_path, *LIGHT], capsys)
        assert code == 0
        lines = out_path.read_text().splitlines()
        assert lines[0] == "subject,m,train_mse,train_se,val_mse,val_se"
        assert len(lines) == 1 + 2 * 2  # 2 subjects x 2 m values
        by_subject = {}
        for ln in lines[1:]:
            sid, m, train, *_ = ln.split(",")
            by_subject.setdefault(sid, []).append(float(train))
        for vals in by_subject.values():
            assert vals == sorted(vals, reverse=True) or all(
                b <= a + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_empty_range_is_usage_error(self, mini_csv, capsys):
        code, _, err = run(
            ["sweep", "--dataset", mini_csv, "--m-max", "0"], capsys)
        assert code == 2
        assert "--m-max" in err

    def test_json_format(self, mini_csv, capsys):
        code, out, _ = run(
            ["sweep", "--dataset", mini_csv, "--m-min", "1", "--m-max", "1",
             "--format", "json", *LIGHT], capsys)
        assert code == 0
        report = json.loads(out)
        assert report["m_values"] == [1]
        assert len(report["curves"]) == 2


class TestExportPlot:
    def _fit_params(self, mini_csv, tmp_path, capsys, model="spectral"):
        out_path = tmp_path / f"{model}.json"
        code, _, _ = run(
            ["fit", "--dataset", mini_csv, "--model", model, "--subject", "1",
             "--freq", "20", "--dur", "10", "--out", out_path, *LIGHT], capsys)
        assert code == 0
        return out_path

    def test_writes_curves_and_overlay(self, mini_csv, tmp_path, capsys):
        p_spec = self._fit_params(mini_csv, tmp_path, capsys, "spectral")
        p_base = self._fit_params(mini_csv, tmp_path, capsys, "baseline")
        out_dir = tmp_path / "plot"
        code, out, _ = run(
            ["export-plot", "--dataset", mini_csv, "--subject", "1",
             "--freq", "20", "--dur", "10",
             "--params", p_spec, "--params", p_base, "--out", out_dir], capsys)
        assert code == 0
        assert (out_dir / "observed.csv").is_file()
        assert (out_dir / "spectral.csv").is_file()
        assert (out_dir / "baseline.csv").is_file()
        svg = (out_dir / "overlay.svg").read_text()
        assert svg.count("<polyline") == 3
        assert 'id="observed"' in svg and 'id="spectral"' in svg
        assert 'id="duration-bar"' in svg

    def test_observed_csv_round_trips(self, mini_csv, tmp_path, capsys):
        p_spec = self._fit_params(mini_csv, tmp_path, capsys)
        out_dir = tmp_path / "plot"
        run(["export-plot", "--dataset", mini_csv, "--subject", "1",
             "--freq", "20", "--dur", "10", "--params", p_spec,
             "--out", out_dir], capsys)
        ds = load_dataset(out_dir / "observed.csv")
        assert len(ds) == 1
        assert ds.get(1, 20.0, 10.0) is not None

    def test_model_csv_layout(self, mini_csv, tmp_path, capsys):
        p_spec = self._fit_params(mini_csv, tmp_path, capsys)
        out_dir = tmp_path / "plot"
        run(["export-plot", "--dataset", mini_csv, "--subject", "1",
             "--freq", "20", "--dur", "10", "--params", p_spec,
             "--out", out_dir], capsys)
        lines = (out_dir / "spectral.csv").read_text().splitlines()
        assert lines[0] == "time_s,brightness"
        n = len(load_dataset(mini_csv).get(1, 20.0, 10.0).observed)
        assert len(lines) == 1 + n

    def test_ambiguous_selector_is_usage_error(self, mini_csv, tmp_path, capsys):
        p_spec = self._fit_params(mini_csv, tmp_path, capsys)
        code, _, err = run(
            ["export-plot", "--dataset", mini_csv, "--subject", "1",
             "--params", p_spec, "--out", tmp_path / "p"], capsys)
        assert code == 2
        assert "exactly one" in err

    def test_mismatched_params_is_failure(self, mini_csv, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"model": "exponential",
                                   "params": {"k2": 1.0, "t3": 5.0}}))
        code, _, err = run(
            ["export-plot", "--dataset", mini_csv, "--subject", "1",
             "--freq", "20", "--dur", "10", "--params", bad,
             "--out", tmp_path / "p"], capsys)
        assert code == 1
        assert "does not match" in err

    def test_repeat_runs_byte_identical(self, mini_csv, tmp_path, capsys):
        p_spec = self._fit_params(mini_csv, tmp_path, capsys)
        dirs = [tmp_path / "p1", tmp_path / "p2"]
        for d in dirs:
            code, _, _ = run(
                ["export-plot", "--dataset", mini_csv, "--subject", "1",
                 "--freq", "20", "--dur", "10", "--params", p_spec,
                 "--out", d], capsys)
            assert code == 0
        for name in ("observed.csv", "spectral.csv", "overlay.svg"):
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()


class TestEntryPoint:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "phosdyn.cli", "--help"],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert "fit" in proc.stdout and "evaluate" in proc.stdout

    def test_bad_subcommand_exits_2(self):
        proc = subprocess.run(
            [sys.executable, "-m", "phosdyn.cli", "transmogrify"],
            capture_output=True, text=True)
        assert proc.returncode == 2
