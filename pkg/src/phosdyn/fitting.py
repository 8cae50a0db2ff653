"""Shared fitting machinery: configuration, results, and common guards."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .data import Trial
from .errors import FitError
from .optim import OptOptions, OptResult

# Objective value substituted for non-finite model output, so the simplex
# retreats instead of propagating NaNs.
PENALTY = 1e30


@dataclass(frozen=True)
class FitConfig:
    f_tol: float = 1e-8
    x_tol: float = 1e-8
    max_iters: int | None = None
    restarts: int = 8
    seed: int = 0

    def opt_options(self) -> OptOptions:
        return OptOptions(f_tol=self.f_tol, x_tol=self.x_tol, max_iters=self.max_iters)


@dataclass(frozen=True)
class FitResult:
    """Fitted parameters plus the audit trail of how they were reached."""

    model: str
    params: Any
    objective: float
    opt: OptResult | None
    n_trials: int


def check_trials(trials: Sequence[Trial]) -> None:
    """Common preconditions for every model fit."""
    if not trials:
        raise ValueError("training set is empty")
    for tr in trials:
        if len(tr.observed) < 2:
            raise FitError(f"insufficient data: trial {tr.key} has {len(tr.observed)} sample(s)")
    if all(not np.any(tr.observed.samples != 0.0) for tr in trials):
        raise FitError("degenerate trial: all observations are zero")


def guard(value: float) -> float:
    return value if np.isfinite(value) else PENALTY
