"""Cross-validation harness.

Leave-one-subject-out and leave-one-condition-out evaluation: fit one
parameter set per training fold with a model's predictive fit, score every
held-out trial (MSE and Pearson r), and assemble per-fold and aggregate
rows.  Also the spectral component-count sweep with per-subject training
and validation curves.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .baseline import baseline_fit, baseline_predict
from .data import Dataset, Grid, Stimulus, Trial
from .errors import FitError
from .exponential import exp_fit, exp_predict
from .fitting import FitConfig, FitResult
from .metrics import mean_sd, score
from .spectral import spectral_fit_predictive, spectral_predict

MODEL_KINDS = ("spectral", "exponential", "baseline")
MAX_SWEEP_M = 8


@dataclass(frozen=True)
class FoldSpec:
    held_out: int | str  # subject id or condition label
    train_trials: tuple[Trial, ...]
    test_trials: tuple[Trial, ...]


@dataclass
class FoldRow:
    fold: str
    n_trials: int = 0
    mse_mean: float | None = None
    mse_sd: float | None = None
    r_mean: float | None = None
    r_sd: float | None = None
    skipped: int = 0
    failed: bool = False
    error: str | None = None
    params: dict | None = None

    def to_json_dict(self) -> dict:
        return {
            "fold": self.fold,
            "n_trials": self.n_trials,
            "mse_mean": self.mse_mean,
            "mse_sd": self.mse_sd,
            "r_mean": self.r_mean,
            "r_sd": self.r_sd,
            "skipped": self.skipped,
            "failed": self.failed,
            "error": self.error,
            "params": self.params,
        }


@dataclass
class EvalReport:
    protocol: str
    model: str
    m: int | None
    seed: int
    fold_hash: str
    rows: list[FoldRow] = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(not row.failed for row in self.rows)

    def to_json_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "model": self.model,
            "m": self.m,
            "seed": self.seed,
            "fold_hash": self.fold_hash,
            "rows": [row.to_json_dict() for row in self.rows],
            "aggregate": self.aggregate,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"

    def to_table(self) -> str:
        title = f"protocol={self.protocol} model={self.model}"
        if self.m is not None:
            title += f" m={self.m}"
        title += f" seed={self.seed}"
        width = max([len("Average")] + [len(str(r.fold)) for r in self.rows])
        lines = [title,
                 f"{'Fold':<{width}}  {'MSE':>17}  {'r':>17}  {'n':>4}  {'skipped':>7}"]
        for row in self.rows:
            lines.append(_table_line(str(row.fold), width, row))
        agg = FoldRow(fold="Average", n_trials=self.aggregate.get("n_trials", 0),
                      mse_mean=self.aggregate.get("mse_mean"),
                      mse_sd=self.aggregate.get("mse_sd"),
                      r_mean=self.aggregate.get("r_mean"),
                      r_sd=self.aggregate.get("r_sd"),
                      skipped=self.aggregate.get("skipped", 0))
        lines.append(_table_line("Average", width, agg))
        return "\n".join(lines) + "\n"


def _table_line(label: str, width: int, row: FoldRow) -> str:
    if row.failed:
        return f"{label:<{width}}  FAILED: {row.error}"
    mse_part = f"{row.mse_mean:7.3f} +/- {row.mse_sd:6.3f}"
    if row.r_mean is None:
        r_part = f"{'--':>17}"
    else:
        r_part = f"{row.r_mean:7.3f} +/- {row.r_sd:6.3f}"
    return f"{label:<{width}}  {mse_part}  {r_part}  {row.n_trials:>4}  {row.skipped:>7}"


def _trial_key_str(trial: Trial) -> str:
    return f"{trial.subject_id}|{trial.stimulus.freq_pps:g}|{trial.stimulus.duration_s:g}"


def condition_label(freq_pps: float, duration_s: float) -> str:
    return f"{freq_pps:g}pps-{duration_s:g}s"


def folds_by_subject(dataset: Dataset) -> list[FoldSpec]:
    folds = []
    for sid in dataset.subjects:
        test = tuple(dataset.trials_for_subject(sid))
        train = tuple(tr for tr in dataset if tr.subject_id != sid)
        folds.append(FoldSpec(sid, train, test))
    return folds


def folds_by_condition(dataset: Dataset) -> list[FoldSpec]:
    folds = []
    for cond in dataset.conditions:
        test = tuple(dataset.trials_for_condition(cond))
        train = tuple(tr for tr in dataset if tr.stimulus.condition != cond)
        folds.append(FoldSpec(condition_label(*cond), train, test))
    return folds


def fold_hash(folds) -> str:
    payload = [
        [f.held_out,
         sorted(_trial_key_str(tr) for tr in f.train_trials),
         sorted(_trial_key_str(tr) for tr in f.test_trials)]
        for f in folds
    ]
    blob = json.dumps(payload, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def fit_model(model_kind: str, trials, config: FitConfig, m: int | None = None) -> FitResult:
    if model_kind == "spectral":
        return spectral_fit_predictive(trials, m or 2, config)
    if model_kind == "exponential":
        return exp_fit(trials, config)
    if model_kind == "baseline":
        return baseline_fit(trials, config)
    raise ValueError(f"unknown model kind: {model_kind!r}")


def predict_model(model_kind: str, params, stimulus: Stimulus, grid: Grid):
    if model_kind == "spectral":
        return spectral_predict(params, stimulus, grid)
    if model_kind == "exponential":
        return exp_predict(params, stimulus, grid)
    if model_kind == "baseline":
        return baseline_predict(params, stimulus, grid)
    raise ValueError(f"unknown model kind: {model_kind!r}")


def score_trials(model_kind: str, params, trials):
    """Per-trial (mse, r) pairs; r is None where the variance degenerates."""
    out = []
    for tr in trials:
        pred = predict_model(model_kind, params, tr.stimulus, Grid.of(tr.observed))
        out.append(score(tr.observed, pred))
    return out


def _run(folds, protocol: str, model_kind: str, config: FitConfig,
         m: int | None) -> EvalReport:
    if model_kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind: {model_kind!r}")
    report = EvalReport(protocol=protocol, model=model_kind,
                        m=m if model_kind == "spectral" else None,
                        seed=config.seed, fold_hash=fold_hash(folds))
    all_mse: list[float] = []
    all_r: list[float] = []
    for fold in folds:
        row = FoldRow(fold=fold.held_out)
        try:
            fit = fit_model(model_kind, fold.train_trials, config, m)
            scores = score_trials(model_kind, fit.params, fold.test_trials)
        except (FitError, ValueError) as exc:
            row.failed = True
            row.error = str(exc)
            report.rows.append(row)
            continue
        mses = [s.mse for s in scores]
        rs = [s.r for s in scores if s.r is not None]
        row.n_trials = len(scores)
        row.skipped = len(scores) - len(rs)
        row.mse_mean, row.mse_sd = mean_sd(mses)
        if rs:
            row.r_mean, row.r_sd = mean_sd(rs)
        row.params = fit.params.to_json_dict()
        report.rows.append(row)
        all_mse.extend(mses)
        all_r.extend(rs)

    good = [r for r in report.rows if not r.failed]
    fold_r_means = [r.r_mean for r in good if r.r_mean is not None]
    report.aggregate = {
        "mse_mean": float(np.mean([r.mse_mean for r in good])) if good else None,
        "mse_sd": mean_sd(all_mse)[1] if all_mse else None,
        "r_mean": float(np.mean(fold_r_means)) if fold_r_means else None,
        "r_sd": mean_sd(all_r)[1] if all_r else None,
        "n_trials": sum(r.n_trials for r in good),
        "skipped": sum(r.skipped for r in good),
    }
    return report


def loso(dataset: Dataset, model_kind: str, config: FitConfig | None = None,
         m: int | None = None) -> EvalReport:
    """One fold per subject: train on the others, test on the held-out one."""
    config = config or FitConfig()
    if len(dataset.subjects) < 2:
        raise ValueError("leave-one-subject-out needs at least 2 subjects")
    return _run(folds_by_subject(dataset), "subject", model_kind, config, m)


def loco(dataset: Dataset, model_kind: str, config: FitConfig | None = None,
         m: int | None = None) -> EvalReport:
    """One fold per (frequency, duration) stimulus condition."""
    config = config or FitConfig()
    if len(dataset.conditions) < 2:
        raise ValueError("leave-one-condition-out needs at least 2 conditions")
    return _run(folds_by_condition(dataset), "stimulus", model_kind, config, m)


@dataclass
class SweepCurve:
    subject: str
    m_values: list[int]
    train_mse: list[float] = field(default_factory=list)
    train_se: list[float] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)
    val_se: list[float] = field(default_factory=list)
    failed: bool = False
    error: str | None = None

    @property
    def argmin_train(self) -> int:
        return self.m_values[int(np.argmin(self.train_mse))]

    @property
    def argmin_val(self) -> int:
        return self.m_values[int(np.argmin(self.val_mse))]

    def to_json_dict(self) -> dict:
        d = {
            "subject": self.subject,
            "m_values": self.m_values,
            "train_mse": self.train_mse,
            "train_se": self.train_se,
            "val_mse": self.val_mse,
            "val_se": self.val_se,
            "failed": self.failed,
            "error": self.error,
        }
        if not self.failed:
            d["argmin_train"] = self.argmin_train
            d["argmin_val"] = self.argmin_val
        return d


@dataclass
class SweepReport:
    m_values: list[int]
    seed: int
    curves: list[SweepCurve] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(not c.failed for c in self.curves)

    def to_json_dict(self) -> dict:
        return {
            "m_values": self.m_values,
            "seed": self.seed,
            "curves": [c.to_json_dict() for c in self.curves],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"


def _se(values) -> float:
    _, sd = mean_sd(values)
    return float(sd / np.sqrt(len(values))) if values else 0.0


def sweep_m(dataset: Dataset, m_range: tuple[int, int],
            config: FitConfig | None = None) -> SweepReport:
    """Spectral component sweep over leave-one-subject-out folds.

    Each fold's fit at m warm-starts from its fit at m - 1 and keeps the
    padded lower-m solution as a candidate, so the training curve never
    increases with m.
    """
    config = config or FitConfig()
    m_lo, m_hi = m_range
    if not (isinstance(m_lo, int) and isinstance(m_hi, int)):
        raise ValueError(f"m range must be integer, got {m_range}")
    if not 1 <= m_lo <= m_hi <= MAX_SWEEP_M:
        raise ValueError(f"m range must satisfy 1 <= lo <= hi <= {MAX_SWEEP_M}, got {m_range}")
    if len(dataset.subjects) < 2:
        raise ValueError("leave-one-subject-out needs at least 2 subjects")

    m_values = list(range(m_lo, m_hi + 1))
    report = SweepReport(m_values=m_values, seed=config.seed)
    for fold in folds_by_subject(dataset):
        curve = SweepCurve(subject=fold.held_out, m_values=m_values)
        warm = None
        try:
            for m in m_values:
                fit = spectral_fit_predictive(fold.train_trials, m, config, warm=warm)
                warm = fit.params
                train_scores = score_trials("spectral", fit.params, fold.train_trials)
                val_scores = score_trials("spectral", fit.params, fold.test_trials)
                curve.train_mse.append(fit.objective)
                curve.train_se.append(_se([s.mse for s in train_scores]))
                curve.val_mse.append(float(np.mean([s.mse for s in val_scores])))
                curve.val_se.append(_se([s.mse for s in val_scores]))
        except (FitError, ValueError) as exc:
            curve.failed = True
            curve.error = str(exc)
        report.curves.append(curve)
    return report
