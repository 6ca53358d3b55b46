"""Shared fixtures for the heavy acceptance runs.

Set ROMATLAS_TEST_CACHE to a directory to cache the generated sweep datasets
between sessions; without it everything regenerates in-process.
"""

import os
from pathlib import Path

import numpy as np
import pytest

from romatlas.burgers import Grid, default_initial_condition
from romatlas.config import ExperimentConfig
from romatlas.datasets import dimension_sweep, error_model_sweep
from romatlas.parametric_map import TrueErrorModel
from romatlas.surrogates import Dataset


def _cache_dir() -> Path | None:
    value = os.environ.get("ROMATLAS_TEST_CACHE")
    if not value:
        return None
    path = Path(value)
    path.mkdir(parents=True, exist_ok=True)
    return path


@pytest.fixture(scope="session")
def full_grid() -> Grid:
    return Grid(length=1.0, t_final=1.0, n_space=201, n_time=301)


@pytest.fixture(scope="session")
def reference_u0(full_grid):
    return default_initial_condition(full_grid)


@pytest.fixture(scope="session")
def oracle(full_grid, reference_u0) -> TrueErrorModel:
    """Shared exact-error oracle; its trajectory cache is reused across tests."""
    return TrueErrorModel(grid=full_grid, u0=reference_u0, max_dim=15)


@pytest.fixture(scope="session")
def error_dataset_full(full_grid, reference_u0) -> Dataset:
    """The full (basis mu) x (query mu) x (dimension) error sweep."""
    cache = _cache_dir()
    if cache is not None and (cache / "error_dataset.csv").exists():
        return Dataset.from_csv(cache / "error_dataset.csv")
    cfg = ExperimentConfig()
    ds = error_model_sweep(
        full_grid,
        mus=cfg.error_dataset.mus,
        mu0s=cfg.error_dataset.mu0s,
        dims=cfg.error_dataset.dims,
        u0=reference_u0,
    )
    if cache is not None:
        ds.to_csv(cache / "error_dataset.csv")
    return ds


@pytest.fixture(scope="session")
def dimension_data(full_grid, reference_u0):
    """Self-error dimension sweep plus the per-trajectory spectra."""
    cache = _cache_dir()
    if cache is not None and (cache / "dimension_dataset.csv").exists():
        ds = Dataset.from_csv(cache / "dimension_dataset.csv")
        raw = np.loadtxt(
            cache / "dimension_spectra.csv", delimiter=",", skiprows=1, ndmin=2
        )
        spectra = {round(float(r[0]), 12): r[1:] for r in raw}
        return ds, spectra
    cfg = ExperimentConfig()
    mus = [
        round(float(v), 12)
        for v in np.linspace(
            cfg.dimension_dataset.mu_min,
            cfg.dimension_dataset.mu_max,
            cfg.dimension_dataset.n_mus,
        )
    ]
    ds, spectra = dimension_sweep(
        full_grid, mus=mus, dims=cfg.dimension_dataset.dims, u0=reference_u0
    )
    if cache is not None:
        ds.to_csv(cache / "dimension_dataset.csv")
        import csv

        with open(cache / "dimension_spectra.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            n = len(next(iter(spectra.values())))
            writer.writerow(["mu"] + [f"sigma_{i + 1}" for i in range(n)])
            for mu in mus:
                writer.writerow(
                    [repr(float(mu))] + [repr(float(s)) for s in spectra[mu]]
                )
    return ds, spectra
