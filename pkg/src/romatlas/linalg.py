"""Dense linear-algebra substrate: SVD, orthogonalization, linear solves, Lagrange weights."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._validation import as_matrix, as_vector, require_finite

__all__ = [
    "SvdResult",
    "InterpolationStencil",
    "SingularMatrixError",
    "SvdConvergenceError",
    "EmptyBasisError",
    "svd",
    "orthonormalize",
    "solve_linear",
    "solve_linear_matrix",
    "lagrange_weights",
]

#: pivot magnitude below which a square system is treated as singular
PIVOT_TOL = 1e-14

#: post-projection column norm below which a direction is discarded
DEFAULT_DROP_TOL = 1e-10


class SingularMatrixError(ValueError):
    """Square system has a pivot below the singularity tolerance."""


class SvdConvergenceError(RuntimeError):
    """The SVD iteration failed to converge."""


class EmptyBasisError(ValueError):
    """Orthogonalization discarded every column."""


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``a = u @ diag(sigma) @ vt`` with a deterministic sign convention."""

    u: np.ndarray
    sigma: np.ndarray
    vt: np.ndarray


@dataclass(frozen=True)
class InterpolationStencil:
    """Lagrange nodes and the weights evaluated at one query point."""

    nodes: np.ndarray
    query: float
    weights: np.ndarray


def svd(a) -> SvdResult:
    """Thin SVD with each left singular vector's largest-magnitude entry positive.

    Ties in magnitude resolve to the lowest row index, so repeated runs on the
    same input produce bitwise-identical factors.
    """
    m = require_finite(as_matrix(a, "matrix"), "matrix")
    try:
        u, sigma, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(
            f"SVD did not converge for a {m.shape[0]}x{m.shape[1]} matrix"
        ) from exc
    # fix signs column by column (argmax takes the lowest index on ties)
    for j in range(u.shape[1]):
        i = int(np.argmax(np.abs(u[:, j])))
        if u[i, j] < 0:
            u[:, j] = -u[:, j]
            vt[j, :] = -vt[j, :]
    return SvdResult(u=u, sigma=sigma, vt=vt)


def orthonormalize(cols, drop_tol: float = DEFAULT_DROP_TOL) -> np.ndarray:
    """Orthonormalize columns by modified Gram-Schmidt with one reorthogonalization pass.

    Columns whose post-projection norm falls below ``drop_tol`` are dropped;
    the surviving columns keep their input order.
    """
    m = require_finite(as_matrix(cols, "columns"), "columns")
    kept: list[np.ndarray] = []
    for j in range(m.shape[1]):
        v = m[:, j].copy()
        for _ in range(2):  # MGS + one reorthogonalization sweep
            for q in kept:
                v -= (q @ v) * q
        norm = float(np.linalg.norm(v))
        if norm < drop_tol:
            continue
        kept.append(v / norm)
    if not kept:
        raise EmptyBasisError(
            f"all {m.shape[1]} columns dropped at drop_tol={drop_tol:g}"
        )
    return np.column_stack(kept)


def _lu_factor_checked(a) -> tuple[np.ndarray, np.ndarray]:
    m = require_finite(as_matrix(a, "matrix"), "matrix")
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    with warnings.catch_warnings():
        # the pivot check below raises explicitly; scipy's warning is redundant
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() < PIVOT_TOL:
        raise SingularMatrixError(
            f"matrix is singular within pivot tolerance {PIVOT_TOL:g} "
            f"(smallest pivot {pivots.min():.3e})"
        )
    return lu, piv


def solve_linear(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` by partially pivoted LU factorization."""
    rhs = require_finite(as_vector(b, "rhs"), "rhs")
    lu, piv = _lu_factor_checked(a)
    if rhs.shape[0] != lu.shape[0]:
        raise ValueError(
            f"rhs length {rhs.shape[0]} does not match matrix size {lu.shape[0]}"
        )
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def solve_linear_matrix(a, b) -> np.ndarray:
    """Solve ``a @ X = B`` for a matrix right-hand side, same pivot guard."""
    rhs = require_finite(as_matrix(b, "rhs"), "rhs")
    lu, piv = _lu_factor_checked(a)
    if rhs.shape[0] != lu.shape[0]:
        raise ValueError(
            f"rhs row count {rhs.shape[0]} does not match matrix size {lu.shape[0]}"
        )
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def lagrange_weights(nodes, query: float) -> InterpolationStencil:
    """Lagrange cardinal weights ``L_j(query) = prod_{i!=j} (query-x_i)/(x_j-x_i)``."""
    x = require_finite(as_vector(nodes, "nodes"), "nodes")
    if x.size < 1:
        raise ValueError("at least one node is required")
    if np.unique(x).size != x.size:
        raise ValueError("interpolation nodes must be pairwise distinct")
    q = float(query)
    weights = np.empty(x.size)
    for j in range(x.size):
        others = np.delete(x, j)
        weights[j] = np.prod((q - others) / (x[j] - others))
    return InterpolationStencil(nodes=x, query=q, weights=weights)
