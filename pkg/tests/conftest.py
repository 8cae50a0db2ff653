"""Shared fixtures.

Two datasets drive the tests: the checked-in surrogate (synthetic, always
available) and the canonical behavioral dataset, which must be produced by
the exporter on a machine where pulse2percept is installed and placed at
tests/fixtures/perezfornos2012.csv (or pointed to via PHOSDYN_DATASET).
Tests that need the canonical data fail with that instruction when the file
is absent; they are not skipped, because the claims they check are part of
the package's contract.
"""

import time

import pytest

from phosdyn import load_dataset, loso
from phosdyn.fitting import FitConfig

from _paths import CANONICAL_HELP, SURROGATE_CSV, canonical_dataset_path


@pytest.fixture(scope="session")
def surrogate_dataset():
    return load_dataset(SURROGATE_CSV)


@pytest.fixture(scope="session")
def canonical_dataset():
    path = canonical_dataset_path()
    if not path.is_file():
        pytest.fail(CANONICAL_HELP.format(path=path), pytrace=False)
    return load_dataset(path)


@pytest.fixture(scope="session")
def table1_runs(canonical_dataset):
    """LOSO reports for all three models on the canonical data, with the
    total wall time, computed once per session."""
    config = FitConfig(seed=0)
    t0 = time.time()
    reports = {
        "spectral": loso(canonical_dataset, "spectral", config, m=2),
        "exponential": loso(canonical_dataset, "exponential", config),
        "baseline": loso(canonical_dataset, "baseline", config),
    }
    return reports, time.time() - t0
