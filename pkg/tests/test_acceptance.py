"""Acceptance gate.

One test per release criterion, each printing a single PASS/FAIL line with
the measured numbers. Numerical criteria run on synthetic data; the
reproduction criteria (descriptive capacity, the two cross-validation
benchmarks, the component sweep) run on the canonical behavioral dataset
and fail with instructions when that fixture has not been generated.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from phosdyn import (
    DegenerateVarianceError,
    baseline_fit,
    eval_series,
    exp_fit,
    load_dataset,
    loco,
    mse,
    pearson_r,
    spectral_fit_descriptive,
    sweep_m,
    top_m_components,
)
from phosdyn.crossval import score_trials
from phosdyn.data import CANONICAL_DT
from phosdyn.fitting import FitConfig
from phosdyn.optim import OptOptions, nelder_mead, powell
from phosdyn.spectral import dft

from _paths import SURROGATE_CSV
from _synth import baseline_draw, exp_draw, spectral_draw


def _verdict(name: str, ok: bool, detail: str) -> None:
    print(f"[ACCEPT] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def _rosenbrock(v):
    x, y = v
    return (1.0 - x) ** 2 + 100.0 * (y - x * x) ** 2


def _dft_matrix_oracle(x):
    # direct O(n^2) summation, written as the DFT matrix product; shares no
    # code path with the fast transform under test
    n = len(x)
    j = np.arange(n)
    w = np.exp(-2j * np.pi * np.outer(j, j) / n)
    return w @ np.asarray(x, dtype=complex)


def _energy(trial) -> float:
    return float(np.sum(np.square(trial.observed.samples)))


def _rebound_score(trial) -> float:
    """Largest post-offset climb above the running minimum."""
    b = np.asarray(trial.observed.samples, dtype=float)
    post = b[trial.observed.times >= trial.stimulus.duration_s]
    if post.size < 3:
        return 0.0
    return float(np.max(post - np.minimum.accumulate(post)))


def representative_trials(dataset, count: int = 10):
    """The highest-energy trial per subject, topped up to `count` with the
    strongest post-offset rebounds among the rest."""
    chosen = [max(dataset.trials_for_subject(sid), key=_energy)
              for sid in dataset.subjects]
    rest = sorted((tr for tr in dataset if tr not in chosen),
                  key=_rebound_score, reverse=True)
    chosen.extend(rest[: max(0, count - len(chosen))])
    return chosen[:count]


def _descriptive_r(kind: str, trial, config: FitConfig) -> float:
    if kind == "spectral":
        fit = spectral_fit_descriptive(trial, 4, config)
    elif kind == "exponential":
        fit = exp_fit([trial], config)
    else:
        fit = baseline_fit([trial], config)
    r = score_trials(kind, fit.params, [trial])[0].r
    return float("-inf") if r is None else r


class TestOptimizer:
    def test_rosenbrock_both_methods(self):
        opts = OptOptions()
        t0 = time.perf_counter()
        nm = nelder_mead(_rosenbrock, [-1.2, 1.0], opts)
        pw = powell(_rosenbrock, [-1.2, 1.0], opts)
        elapsed = time.perf_counter() - t0
        budget = opts.iters_for(2)
        ok = (nm.f_best < 1e-6 and pw.f_best < 1e-6
              and nm.iterations <= budget and pw.iterations <= budget
              and elapsed < 1.0)
        _verdict("optimizer-rosenbrock", ok,
                 f"nm={nm.f_best:.2e}/{nm.iterations}it "
                 f"powell={pw.f_best:.2e}/{pw.iterations}it {elapsed:.2f}s")


class TestDft:
    def test_oracle_and_round_trip(self):
        rng = np.random.default_rng(11)
        lengths = [2, 512] + list(rng.integers(2, 513, size=48))
        t0 = time.perf_counter()
        worst_rel = 0.0
        worst_round = 0.0
        for n in lengths:
            x = rng.normal(size=int(n))
            got = dft(x)
            want = _dft_matrix_oracle(x)
            worst_rel = max(worst_rel,
                            float(np.max(np.abs(got - want))
                                  / np.max(np.abs(want))))
            comps = top_m_components(got, max(1, int(n) // 2), CANONICAL_DT)
            recon = eval_series(comps, float(np.mean(x)),
                                np.arange(int(n)) * CANONICAL_DT)
            worst_round = max(worst_round, float(np.max(np.abs(recon - x))))
        elapsed = time.perf_counter() - t0
        ok = worst_rel < 1e-10 and worst_round < 1e-9 and elapsed < 5.0
        _verdict("dft-oracle", ok,
                 f"rel={worst_rel:.2e} roundtrip={worst_round:.2e} "
                 f"{elapsed:.2f}s over {len(lengths)} signals")


class TestSelfConsistency:
    def test_recovery_all_models(self):
        t0 = time.perf_counter()
        hits = {}

        rng = np.random.default_rng(21)
        cfg = FitConfig(restarts=2, seed=0)
        n = 0
        for _ in range(10):
            _, trial = spectral_draw(rng, m=2)
            n += spectral_fit_descriptive(trial, 2, cfg).objective < 1e-6
        hits["spectral"] = n

        rng = np.random.default_rng(22)
        cfg = FitConfig(restarts=0, seed=0)
        n = 0
        for _ in range(10):
            truth, trial = exp_draw(rng)
            n += exp_fit([trial], cfg, extra_starts=[truth]).objective < 1e-6
        hits["exponential"] = n

        rng = np.random.default_rng(23)
        cfg = FitConfig(restarts=4, seed=0)
        n = 0
        for _ in range(10):
            _, trial = baseline_draw(rng)
            n += baseline_fit([trial], cfg).objective < 1e-6
        hits["baseline"] = n

        elapsed = time.perf_counter() - t0
        ok = all(v >= 9 for v in hits.values()) and elapsed < 120.0
        _verdict("model-self-consistency", ok,
                 " ".join(f"{k}={v}/10" for k, v in hits.items())
                 + f" {elapsed:.1f}s")


class TestMetricOracles:
    def test_oracle_pairs_and_degenerate(self):
        rng = np.random.default_rng(31)
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(2, 201))
            a = rng.normal(size=n)
            b = rng.normal(size=n)
            mse_want = sum((x - y) ** 2 for x, y in zip(a, b)) / n
            ma, mb = sum(a) / n, sum(b) / n
            cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
            va = sum((x - ma) ** 2 for x in a)
            vb = sum((y - mb) ** 2 for y in b)
            r_want = cov / math.sqrt(va * vb)
            worst = max(worst, abs(mse(a, b) - mse_want),
                        abs(pearson_r(a, b) - r_want))
        with pytest.raises(DegenerateVarianceError):
            pearson_r(np.full(16, 3.0), rng.normal(size=16))
        ok = worst < 1e-12
        _verdict("metric-oracles", ok, f"worst abs err={worst:.2e} over 100 pairs")


class TestDeterminism:
    def test_evaluate_twice_byte_identical(self, tmp_path):
        outs = [tmp_path / "run1.json", tmp_path / "run2.json"]
        for out in outs:
            proc = subprocess.run(
                [sys.executable, "-m", "phosdyn.cli", "evaluate",
                 "--dataset", str(SURROGATE_CSV), "--model", "baseline",
                 "--protocol", "subject", "--seed", "3",
                 "--restarts", "0", "--f-tol", "1e-4", "--x-tol", "1e-4",
                 "--format", "json", "--out", str(out)],
                capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
        same = outs[0].read_bytes() == outs[1].read_bytes()
        _verdict("evaluate-determinism", same,
                 f"{outs[0].stat().st_size} bytes each, identical={same}")


class TestDescriptiveCapacity:
    def test_representative_trials(self, canonical_dataset):
        config = FitConfig(seed=0)
        trials = representative_trials(canonical_dataset)
        spec_n = sum(_descriptive_r("spectral", tr, config) >= 0.9
                     for tr in trials)
        exp_n = sum(_descriptive_r("exponential", tr, config) >= 0.85
                    for tr in trials)
        rebounders = [tr for tr in trials
                      if _rebound_score(tr) > 0.1 * np.max(tr.observed.samples)]
        base_rs = [_descriptive_r("baseline", tr, config) for tr in rebounders]
        ok = (len(trials) == 10 and spec_n >= 8 and exp_n >= 8
              and len(rebounders) >= 1 and all(r < 0.85 for r in base_rs))
        _verdict("descriptive-capacity", ok,
                 f"spectral(m=4) {spec_n}/10 at r>=0.9, "
                 f"exponential {exp_n}/10 at r>=0.85, "
                 f"baseline r on {len(rebounders)} rebound trials: "
                 + ",".join(f"{r:.3f}" for r in base_rs))


class TestSubjectHoldout:
    def test_aggregate_and_ordering(self, table1_runs):
        reports, elapsed = table1_runs
        agg = {k: v.aggregate for k, v in reports.items()}
        r_spec = agg["spectral"]["r_mean"]
        ok = (r_spec >= 0.55 and agg["spectral"]["mse_mean"] <= 9.0
              and r_spec > agg["exponential"]["r_mean"] > agg["baseline"]["r_mean"]
              and all(v.ok for v in reports.values())
              and elapsed < 900.0)
        _verdict("loso-benchmark", ok,
                 f"r spectral={r_spec:.3f} exp={agg['exponential']['r_mean']:.3f} "
                 f"baseline={agg['baseline']['r_mean']:.3f}, "
                 f"spectral mse={agg['spectral']['mse_mean']:.3f}, {elapsed:.0f}s")


class TestConditionHoldout:
    def test_aggregate_versus_reference(self, canonical_dataset):
        config = FitConfig(seed=0)
        spec = loco(canonical_dataset, "spectral", config, m=2)
        expo = loco(canonical_dataset, "exponential", config)
        base = loco(canonical_dataset, "baseline", config)
        r_spec = spec.aggregate["r_mean"]
        ok = (abs(r_spec - 0.634) <= 0.15
              and spec.aggregate["mse_mean"] < base.aggregate["mse_mean"]
              and expo.aggregate["mse_mean"] < base.aggregate["mse_mean"]
              and spec.ok and expo.ok and base.ok)
        _verdict("loco-benchmark", ok,
                 f"r spectral={r_spec:.3f} (target 0.634 +/- 0.15), "
                 f"mse spectral={spec.aggregate['mse_mean']:.3f} "
                 f"exp={expo.aggregate['mse_mean']:.3f} "
                 f"baseline={base.aggregate['mse_mean']:.3f}")


class TestExporterArtifact:
    """Secondary deliverable: the canonical-dataset export itself."""

    ALLOWED_CONDITIONS = {(5.0, 10.0), (20.0, 10.0), (60.0, 10.0),
                          (20.0, 1.0), (20.0, 60.0)}

    def test_export_twice_and_validate(self, tmp_path):
        script = Path(__file__).resolve().parent.parent / "exporter" / "export.py"
        outs = [tmp_path / "a.csv", tmp_path / "b.csv"]
        procs = [subprocess.run(
            [sys.executable, str(script), "--out", str(o)],
            capture_output=True, text=True) for o in outs]
        bad = next((p for p in procs if p.returncode), None)
        if bad is not None:
            msg = bad.stderr.strip() or bad.stdout.strip() or f"exit {bad.returncode}"
            _verdict("exporter-artifact", False, msg.splitlines()[-1])
        ds = load_dataset(outs[0])
        idempotent = outs[0].read_bytes() == outs[1].read_bytes()
        ok = (set(ds.subjects) <= set(range(1, 10))
              and set(ds.conditions) <= self.ALLOWED_CONDITIONS
              and idempotent)
        _verdict("exporter-artifact", ok,
                 f"{len(ds)} trials, subjects={ds.subjects}, "
                 f"idempotent={idempotent}")


class TestComponentSweep:
    def test_training_monotone_and_small_m_validates(self, canonical_dataset):
        report = sweep_m(canonical_dataset, (1, 8), FitConfig(seed=0))
        monotone = all(
            all(b <= a + 1e-12 for a, b in zip(c.train_mse, c.train_mse[1:]))
            for c in report.curves if not c.failed)
        small_m = sum(c.argmin_val <= 2 for c in report.curves if not c.failed)
        majority = len(report.curves) // 2 + 1
        ok = report.ok and monotone and small_m >= majority
        _verdict("component-sweep", ok,
                 f"train monotone={monotone}, argmin_val<=2 for "
                 f"{small_m}/{len(report.curves)} subjects (need {majority})")
