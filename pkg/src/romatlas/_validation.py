"""Input validation helpers shared by the estimators and solvers."""

from __future__ import annotations

import numpy as np


def as_matrix(a, name: str = "array") -> np.ndarray:
    """Coerce to a 2-d float array with at least one row and column."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={m.ndim}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"{name} must be nonempty, got shape {m.shape}")
    return m


def as_vector(a, name: str = "array") -> np.ndarray:
    """Coerce to a 1-d float array."""
    v = np.asarray(a, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got ndim={v.ndim}")
    return v


def require_finite(a: np.ndarray, name: str = "array") -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def check_features(X, n_features: int | None = None, name: str = "X") -> np.ndarray:
    """Validate a (n_samples, n_features) feature matrix."""
    X = as_matrix(X, name)
    require_finite(X, name)
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(
            f"{name} has {X.shape[1]} features, expected {n_features}"
        )
    return X


def check_targets(y, n_samples: int, name: str = "y") -> np.ndarray:
    y = as_vector(y, name)
    require_finite(y, name)
    if y.shape[0] != n_samples:
        raise ValueError(
            f"{name} has {y.shape[0]} entries, expected {n_samples}"
        )
    return y
