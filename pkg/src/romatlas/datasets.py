"""Sweep generators for training the error and dimension surrogates."""

from __future__ import annotations

import math

import numpy as np

from .burgers import Grid, ModelParams, SnapshotMatrix, SolverSettings, solve
from .galerkin import ReducedNewtonError, assemble, integrate, rom_error_frobenius
from .pod import Pod
from .surrogates import Dataset

__all__ = [
    "LOG_ERROR_SENTINEL",
    "error_model_sweep",
    "dimension_sweep",
    "drop_sentinel_rows",
]

#: log-error recorded for reduced runs that diverged; filtered before training
LOG_ERROR_SENTINEL = 700.0


def _trajectories(grid, nu, settings, u0, mus) -> dict[float, SnapshotMatrix]:
    cache: dict[float, SnapshotMatrix] = {}
    for mu in mus:
        mu = float(mu)
        if mu not in cache:
            cache[mu] = solve(grid, ModelParams(mu=mu, nu=nu), settings, u0)
    return cache


def _log_error(ops, query_mu, nu, grid, settings, hf) -> float:
    try:
        sol = integrate(ops, ModelParams(mu=query_mu, nu=nu), grid, settings)
    except ReducedNewtonError:
        return LOG_ERROR_SENTINEL
    err = rom_error_frobenius(hf, sol)
    if err <= 0.0 or not math.isfinite(err):
        return LOG_ERROR_SENTINEL if not math.isfinite(err) else -LOG_ERROR_SENTINEL
    return math.log(err)


def error_model_sweep(
    grid: Grid,
    mus,
    mu0s,
    dims,
    nu: float = 1.0,
    settings: SolverSettings = SolverSettings(),
    u0: np.ndarray | None = None,
) -> Dataset:
    """Reduced-model errors over a ``(basis mu) x (query mu0) x (dimension)`` grid.

    One trajectory per distinct viscosity is solved and reused; per basis
    viscosity the operators are assembled once at the largest dimension and
    truncated. Rows are ordered by ``(mu, mu0, k)``.
    """
    mus = [float(m) for m in mus]
    mu0s = [float(m) for m in mu0s]
    dims = sorted(int(k) for k in dims)
    cache = _trajectories(grid, nu, settings, u0, sorted(set(mus) | set(mu0s)))
    if u0 is None:
        u0_vec = cache[mus[0]].states[:, 0]
    else:
        u0_vec = np.asarray(u0, dtype=float)
    rows = []
    targets = []
    k_max = dims[-1]
    for mu in mus:
        basis = Pod(n_modes=k_max).fit(cache[mu])
        ops_full = assemble(basis, grid, u0_vec)
        for mu0 in mu0s:
            hf = cache[mu0]
            for k in dims:
                log_err = _log_error(
                    ops_full.truncate(k), mu0, nu, grid, settings, hf
                )
                rows.append((mu0, mu, float(k)))
                targets.append(log_err)
    return Dataset(
        features=np.asarray(rows, dtype=float),
        targets=np.asarray(targets, dtype=float),
        feature_names=("mu0", "mu", "k"),
        target_name="log_eps",
    )


def dimension_sweep(
    grid: Grid,
    mus,
    dims,
    nu: float = 1.0,
    settings: SolverSettings = SolverSettings(),
    u0: np.ndarray | None = None,
) -> tuple[Dataset, dict[float, np.ndarray]]:
    """Self-error samples ``(mu, log_eps) -> k`` plus each trajectory's spectrum.

    The reduced model is built and evaluated at the same viscosity, so the
    recorded error combines projection and integration effects. The returned
    spectra feed the truncation baseline.
    """
    mus = [float(m) for m in mus]
    dims = sorted(int(k) for k in dims)
    k_max = dims[-1]
    rows = []
    targets = []
    spectra: dict[float, np.ndarray] = {}
    for mu in mus:
        hf = solve(grid, ModelParams(mu=mu, nu=nu), settings, u0)
        u0_vec = hf.states[:, 0]
        basis = Pod(n_modes=k_max).fit(hf)
        spectra[mu] = basis.singular_values_.copy()
        ops_full = assemble(basis, grid, u0_vec)
        for k in dims:
            log_err = _log_error(ops_full.truncate(k), mu, nu, grid, settings, hf)
            rows.append((mu, log_err))
            targets.append(float(k))
    return (
        Dataset(
            features=np.asarray(rows, dtype=float),
            targets=np.asarray(targets, dtype=float),
            feature_names=("mu", "log_eps_target"),
            target_name="k",
        ),
        spectra,
    )


def drop_sentinel_rows(data: Dataset, column: str | None = None) -> Dataset:
    """Remove rows whose log-error hit the divergence sentinel."""
    if column is None:
        values = (
            data.targets
            if data.target_name == "log_eps"
            else data.features[:, list(data.feature_names).index("log_eps_target")]
        )
    else:
        values = data.features[:, list(data.feature_names).index(column)]
    keep = np.abs(values) < LOG_ERROR_SENTINEL
    from dataclasses import replace

    return replace(data, features=data.features[keep], targets=data.targets[keep])
