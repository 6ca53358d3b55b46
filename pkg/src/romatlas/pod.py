"""Proper orthogonal decomposition basis as a fit/transform estimator."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import linalg
from ._validation import as_matrix, require_finite
from .burgers import SnapshotMatrix

__all__ = ["Pod", "energy_dimension", "save_basis", "load_basis"]


def energy_dimension(sigma, gamma: float, on_squares: bool = False) -> int:
    """Smallest ``m`` whose cumulative spectrum fraction reaches ``gamma``.

    The fraction is computed on the singular values themselves by default;
    ``on_squares`` switches to the squared-value convention.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"energy fraction must lie in (0, 1], got {gamma}")
    s = np.asarray(sigma, dtype=float)
    vals = s**2 if on_squares else s
    total = vals.sum()
    if total <= 0:
        return 1
    cumulative = np.cumsum(vals) / total
    return int(np.searchsorted(cumulative, gamma - 1e-14) + 1)


class Pod(BaseEstimator, TransformerMixin):
    """POD basis: dominant left singular vectors of a snapshot matrix.

    The estimator follows the snapshot convention: ``fit`` takes an
    ``(n_states, n_snapshots)`` matrix (or a :class:`SnapshotMatrix`) whose
    columns are states, ``transform`` projects state columns onto the basis
    and ``inverse_transform`` lifts reduced columns back.

    Parameters
    ----------
    n_modes : int, optional
        Explicit basis dimension. Mutually exclusive with ``energy``.
    energy : float, optional
        Cumulative spectrum fraction used to pick the dimension. When neither
        ``n_modes`` nor ``energy`` is given, ``energy=0.99`` is used.
    energy_on_squares : bool
        Apply the energy criterion to squared singular values instead of the
        raw ones.

    Attributes
    ----------
    modes_ : ndarray of shape (n_states, n_modes_)
        Orthonormal basis columns.
    singular_values_ : ndarray
        Full singular-value sequence of the fitted snapshots.
    n_modes_ : int
        Selected dimension.
    source_mu_ : float or None
        Viscosity of the trajectory the basis was fitted on, when known.
    """

    def __init__(self, n_modes=None, energy=None, energy_on_squares=False):
        self.n_modes = n_modes
        self.energy = energy
        self.energy_on_squares = energy_on_squares

    def fit(self, snapshots, y=None):
        if self.n_modes is not None and self.energy is not None:
            raise ValueError("pass either n_modes or energy, not both")
        source_mu = None
        if isinstance(snapshots, SnapshotMatrix):
            source_mu = snapshots.params.mu
            snapshots = snapshots.states
        x = require_finite(as_matrix(snapshots, "snapshots"), "snapshots")
        result = linalg.svd(x)
        if self.n_modes is not None:
            k = int(self.n_modes)
            if not 1 <= k <= result.sigma.size:
                raise ValueError(
                    f"n_modes must lie in [1, {result.sigma.size}], got {k}"
                )
            self.energy_used_ = None
        else:
            gamma = 0.99 if self.energy is None else float(self.energy)
            k = energy_dimension(result.sigma, gamma, self.energy_on_squares)
            self.energy_used_ = gamma
        self.modes_ = result.u[:, :k]
        self.singular_values_ = result.sigma
        self.n_modes_ = k
        self.source_mu_ = source_mu
        return self

    @classmethod
    def from_modes(cls, modes, singular_values=None, source_mu=None) -> "Pod":
        """Wrap an existing orthonormal column set as a fitted basis."""
        est = cls(n_modes=None, energy=None)
        modes = as_matrix(modes, "modes")
        est.modes_ = modes
        est.singular_values_ = (
            None if singular_values is None else np.asarray(singular_values, float)
        )
        est.n_modes_ = modes.shape[1]
        est.source_mu_ = source_mu
        est.energy_used_ = None
        return est

    def _check_fitted(self):
        if not hasattr(self, "modes_"):
            raise NotFittedError("Pod instance is not fitted yet")

    def transform(self, states) -> np.ndarray:
        """Project state columns: ``modes_.T @ states``."""
        self._check_fitted()
        states = np.asarray(states, dtype=float)
        return self.modes_.T @ states

    def inverse_transform(self, reduced) -> np.ndarray:
        """Lift reduced columns: ``modes_ @ reduced``."""
        self._check_fitted()
        reduced = np.asarray(reduced, dtype=float)
        return self.modes_ @ reduced

    def projection_error(self, states) -> float:
        """Frobenius norm of ``states - modes_ modes_.T states``."""
        self._check_fitted()
        states = as_matrix(states, "states")
        return float(np.linalg.norm(states - self.modes_ @ (self.modes_.T @ states)))


def save_basis(basis: Pod, csv_path: str | Path, extra_meta: dict | None = None) -> Path:
    """Write basis columns as CSV plus a JSON sidecar with spectrum metadata."""
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"mode_{j}" for j in range(basis.n_modes_)])
        for row in basis.modes_:
            writer.writerow([repr(float(v)) for v in row])
    meta = {
        "source_mu": basis.source_mu_,
        "n_modes": basis.n_modes_,
        "energy": basis.energy_used_,
        "singular_values": (
            None
            if basis.singular_values_ is None
            else [float(s) for s in basis.singular_values_]
        ),
    }
    if extra_meta:
        meta.update(extra_meta)
    csv_path.with_suffix(".json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n"
    )
    return csv_path


def load_basis(csv_path: str | Path) -> Pod:
    csv_path = Path(csv_path)
    modes = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    meta = json.loads(csv_path.with_suffix(".json").read_text())
    basis = Pod.from_modes(
        modes,
        singular_values=meta.get("singular_values"),
        source_mu=meta.get("source_mu"),
    )
    basis.energy_used_ = meta.get("energy")
    return basis
