"""Building a basis for a new parameter from existing bases or trajectories.

Four routes: Lagrange interpolation of basis matrices, interpolation in a
tangent space of the subspace manifold, concatenation with
re-orthogonalization, and interpolation of the high-fidelity trajectories
followed by a fresh decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg
from .burgers import SnapshotMatrix
from .pod import Pod, energy_dimension

__all__ = [
    "TangentMatrix",
    "RankCollapseError",
    "align_column_signs",
    "interpolate_basis_matrices",
    "grassmann_log",
    "grassmann_exp",
    "interpolate_basis_grassmann",
    "concatenate_bases",
    "interpolate_solutions",
]


class RankCollapseError(RuntimeError):
    """Interpolated columns lost rank during orthogonalization."""


@dataclass(frozen=True)
class TangentMatrix:
    """Tangent-space image of a subspace relative to an anchor subspace."""

    gamma: np.ndarray
    origin_index: int = 0


def _modes_of(basis) -> np.ndarray:
    return basis.modes_ if isinstance(basis, Pod) else np.asarray(basis, dtype=float)


def _check_same_shape(bases: Sequence) -> list[np.ndarray]:
    mats = [_modes_of(b) for b in bases]
    if len(mats) < 2:
        raise ValueError("at least two bases are required")
    shape = mats[0].shape
    for m in mats[1:]:
        if m.shape != shape:
            raise ValueError(f"basis shapes differ: {m.shape} vs {shape}")
    return mats


def _source_mus(bases: Sequence) -> np.ndarray:
    mus = []
    for b in bases:
        mu = b.source_mu_ if isinstance(b, Pod) else None
        if mu is None:
            raise ValueError("every basis needs a known source viscosity")
        mus.append(mu)
    return np.asarray(mus, dtype=float)


def align_column_signs(reference: np.ndarray, other: np.ndarray) -> np.ndarray:
    """Flip columns of ``other`` whose dot product with ``reference`` is negative.

    Column-sign ambiguity of the SVD makes matrix-space averaging of bases
    meaningless without this normalization.
    """
    signs = np.sign(np.einsum("ij,ij->j", reference, other))
    signs[signs == 0] = 1.0
    return other * signs


def interpolate_basis_matrices(bases: Sequence, query_mu: float, drop_tol: float = 1e-10) -> Pod:
    """Entrywise Lagrange interpolation of basis matrices, re-orthonormalized."""
    mats = _check_same_shape(bases)
    mus = _source_mus(bases)
    stencil = linalg.lagrange_weights(mus, query_mu)
    ref = mats[0]
    combo = np.zeros_like(ref)
    for w, m in zip(stencil.weights, mats):
        combo += w * align_column_signs(ref, m)
    k = ref.shape[1]
    try:
        q = linalg.orthonormalize(combo, drop_tol=drop_tol)
    except linalg.EmptyBasisError:
        raise RankCollapseError(
            f"interpolated basis collapsed: 0 of {k} columns retained"
        ) from None
    if q.shape[1] < k:
        raise RankCollapseError(
            f"interpolated basis collapsed: {q.shape[1]} of {k} columns retained"
        )
    return Pod.from_modes(q)


def grassmann_log(origin, other, origin_index: int = 0) -> TangentMatrix:
    """Map ``other``'s subspace to the tangent space anchored at ``origin``.

    With ``M = (I - U0 U0^T) Ui (U0^T Ui)^{-1}`` and thin SVD
    ``M = R diag(s) Q^T``, the tangent image is ``R diag(atan s) Q^T``.
    """
    u0 = _modes_of(origin)
    ui = _modes_of(other)
    if u0.shape != ui.shape:
        raise ValueError(f"basis shapes differ: {u0.shape} vs {ui.shape}")
    overlap = u0.T @ ui
    try:
        inv = linalg.solve_linear_matrix(overlap, np.eye(overlap.shape[0]))
    except linalg.SingularMatrixError:
        raise ValueError(
            "subspaces are too far apart: U0^T Ui is singular"
        ) from None
    m = (ui - u0 @ overlap) @ inv
    res = linalg.svd(m)
    gamma = (res.u * np.arctan(res.sigma)) @ res.vt
    return TangentMatrix(gamma=gamma, origin_index=origin_index)


def grassmann_exp(origin, tangent: TangentMatrix | np.ndarray) -> Pod:
    """Map a tangent-space matrix back to a subspace basis.

    With thin SVD ``Gamma = R diag(s) Q^T``, returns
    ``U0 Q cos(diag(s)) + R sin(diag(s))``. ``Gamma`` must be horizontal
    (``U0^T Gamma = 0``), which holds for anything produced by
    :func:`grassmann_log` and for linear combinations thereof.
    """
    u0 = _modes_of(origin)
    gamma = tangent.gamma if isinstance(tangent, TangentMatrix) else np.asarray(tangent, float)
    if gamma.shape != u0.shape:
        raise ValueError(f"tangent shape {gamma.shape} does not match basis {u0.shape}")
    res = linalg.svd(gamma)
    q = res.vt.T
    modes = (u0 @ q) * np.cos(res.sigma) + res.u * np.sin(res.sigma)
    return Pod.from_modes(modes)


def interpolate_basis_grassmann(
    bases: Sequence, origin_index: int, query_mu: float
) -> Pod:
    """Interpolate subspaces through the tangent space at one anchor basis."""
    mats = _check_same_shape(bases)
    mus = _source_mus(bases)
    if not 0 <= origin_index < len(bases):
        raise ValueError(f"origin_index {origin_index} out of range")
    stencil = linalg.lagrange_weights(mus, query_mu)
    origin = mats[origin_index]
    combo = np.zeros_like(origin)
    for i, (w, b) in enumerate(zip(stencil.weights, bases)):
        if i == origin_index:
            continue  # tangent image of the anchor is zero
        combo += w * grassmann_log(origin, b, origin_index).gamma
    return grassmann_exp(origin, combo)


def concatenate_bases(
    b1,
    b2,
    k1: int | None = None,
    k2: int | None = None,
    energy: float = 0.99,
    drop_tol: float = 1e-10,
) -> Pod:
    """Stack leading columns of two bases and re-orthonormalize.

    When ``k1``/``k2`` are omitted they default to each basis's energy
    dimension at the given fraction (falling back to all columns when the
    source spectrum is unknown).
    """
    u1 = _modes_of(b1)
    u2 = _modes_of(b2)
    if u1.shape[0] != u2.shape[0]:
        raise ValueError("bases live in different state spaces")

    def _default_k(basis, mat):
        if isinstance(basis, Pod) and basis.singular_values_ is not None:
            return min(energy_dimension(basis.singular_values_, energy), mat.shape[1])
        return mat.shape[1]

    k1 = _default_k(b1, u1) if k1 is None else int(k1)
    k2 = _default_k(b2, u2) if k2 is None else int(k2)
    if not 1 <= k1 <= u1.shape[1] or not 1 <= k2 <= u2.shape[1]:
        raise ValueError("requested column counts exceed the available bases")
    stacked = np.hstack([u1[:, :k1], u2[:, :k2]])
    return Pod.from_modes(linalg.orthonormalize(stacked, drop_tol=drop_tol))


def interpolate_solutions(
    snaps: Sequence[SnapshotMatrix],
    query_mu: float,
    n_modes: int | None = None,
    energy: float | None = None,
) -> Pod:
    """Lagrange-interpolate trajectories, then extract a fresh basis."""
    if len(snaps) < 2:
        raise ValueError("at least two trajectories are required")
    grid = snaps[0].grid
    for s in snaps[1:]:
        if s.grid != grid:
            raise ValueError("trajectories live on different grids")
    mus = np.asarray([s.params.mu for s in snaps], dtype=float)
    stencil = linalg.lagrange_weights(mus, query_mu)
    combo = np.zeros_like(snaps[0].states)
    for w, s in zip(stencil.weights, snaps):
        combo += w * s.states
    return Pod(n_modes=n_modes, energy=energy).fit(combo)
