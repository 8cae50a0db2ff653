"""Models of phosphene brightness over time for retinal-implant stimulation.

Three models of the reported brightness time course (spectral, exponential,
baseline), per-trial and pooled fitting with derivative-free optimizers, and
leave-one-out cross-validation harnesses.
"""

from .baseline import BaselineParams, baseline_fit, baseline_predict, tau
from .data import (
    CANONICAL_DT,
    CSV_COLUMNS,
    Dataset,
    Grid,
    Stimulus,
    TimeCourse,
    Trial,
    load_dataset,
    resample,
    save_dataset,
)
from .errors import (
    DataError,
    DegenerateVarianceError,
    FitError,
    FormatError,
    PhosdynError,
)
from .exponential import ExpParams, exp_fit, exp_predict
from .fitting import FitConfig, FitResult
from .metrics import Score, mean_sd, mse, pearson_r, score
from .optim import Box, OptOptions, OptResult, minimize, minimize_bounded, nelder_mead, powell
from .crossval import (
    EvalReport,
    FoldSpec,
    SweepReport,
    loco,
    loso,
    sweep_m,
)
from .spectral import (
    SpectralParams,
    SpectrumComponent,
    dft,
    eval_series,
    first_local_max,
    flatline_time,
    spectral_fit_descriptive,
    spectral_fit_predictive,
    spectral_predict,
    top_m_components,
    wrap_phase,
)

__version__ = "0.1.0"

__all__ = [
    "BaselineParams",
    "Box",
    "CANONICAL_DT",
    "CSV_COLUMNS",
    "DataError",
    "Dataset",
    "DegenerateVarianceError",
    "EvalReport",
    "ExpParams",
    "FitConfig",
    "FitError",
    "FitResult",
    "FoldSpec",
    "FormatError",
    "Grid",
    "OptOptions",
    "OptResult",
    "PhosdynError",
    "Score",
    "SpectralParams",
    "SpectrumComponent",
    "Stimulus",
    "SweepReport",
    "TimeCourse",
    "Trial",
    "baseline_fit",
    "baseline_predict",
    "dft",
    "eval_series",
    "exp_fit",
    "exp_predict",
    "first_local_max",
    "flatline_time",
    "load_dataset",
    "loco",
    "loso",
    "mean_sd",
    "minimize",
    "minimize_bounded",
    "mse",
    "nelder_mead",
    "pearson_r",
    "powell",
    "resample",
    "save_dataset",
    "score",
    "spectral_fit_descriptive",
    "spectral_fit_predictive",
    "spectral_predict",
    "sweep_m",
    "tau",
    "top_m_components",
    "wrap_phase",
]
