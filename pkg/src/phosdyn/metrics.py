"""Scoring predictions against observations: MSE and Pearson correlation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import TimeCourse
from .errors import DegenerateVarianceError


@dataclass(frozen=True)
class Score:
    """Per-trial score; r is None when the correlation is undefined."""

    mse: float
    r: float | None
    n: int


def mse(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 1:
        raise ValueError(f"mse needs equal-length 1-D inputs, got {a.shape} and {b.shape}")
    d = a - b
    return float(np.mean(d * d))


def pearson_r(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError(f"pearson_r needs equal-length 1-D inputs of size >= 2, got {a.shape} and {b.shape}")
    da = a - a.mean()
    db = b - b.mean()
    va = float(np.dot(da, da))
    vb = float(np.dot(db, db))
    if va == 0.0 or vb == 0.0:
        raise DegenerateVarianceError("degenerate variance: constant input sequence")
    r = float(np.dot(da, db) / np.sqrt(va * vb))
    return min(1.0, max(-1.0, r))


def score(observed: TimeCourse, predicted: TimeCourse) -> Score:
    """Score a prediction generated on the observation grid.

    A degenerate Pearson correlation (constant observed or predicted trace)
    is reported as missing rather than as 0.
    """
    if len(observed) != len(predicted):
        raise ValueError("observed and predicted grids differ in length")
    m = mse(observed.samples, predicted.samples)
    try:
        r = pearson_r(observed.samples, predicted.samples)
    except DegenerateVarianceError:
        r = None
    return Score(m, r, len(observed))


def mean_sd(values, ddof: int = 1) -> tuple[float, float]:
    """Mean and sample SD; SD is 0 when fewer than two values."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        return float("nan"), float("nan")
    mean = float(arr.mean())
    sd = float(arr.std(ddof=ddof)) if arr.size > ddof else 0.0
    return mean, sd
