"""Galerkin reduced model: tensorial operators, implicit integration, error norms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_vector, require_finite
from .burgers import Grid, ModelParams, SnapshotMatrix, SolverSettings, build_operators
from .pod import Pod

__all__ = [
    "RomOperators",
    "RomSolution",
    "ReducedNewtonError",
    "assemble",
    "reduced_rhs",
    "integrate",
    "rom_error_frobenius",
    "rom_error_max_over_time",
]


class ReducedNewtonError(RuntimeError):
    """Reduced Newton iteration diverged or stalled.

    Callers running parameter sweeps usually catch this and record the sample
    with a sentinel error instead of aborting.
    """

    def __init__(self, step_index: int, residual: float, max_iters: int):
        self.step_index = step_index
        self.residual = residual
        super().__init__(
            f"reduced Newton did not converge at time step {step_index}: "
            f"residual {residual:.3e} after {max_iters} iterations"
        )


@dataclass(frozen=True)
class RomOperators:
    """Precomputed reduced operators for the quadratic Burgers right-hand side.

    ``diffusion_reduced`` stores the viscosity-free projection ``U^T A_xx U``;
    the query viscosity scales it at integration time. ``advection_tensor``
    holds ``T[i, j, l] = sum_n U[n, i] U[n, j] (A_x U)[n, l]`` so the projected
    quadratic term is ``T : (a ⊗ a)``.
    """

    modes: np.ndarray
    diffusion_reduced: np.ndarray
    advection_tensor: np.ndarray
    reduced_ic: np.ndarray
    source_mu: float | None = None

    @property
    def n_modes(self) -> int:
        return self.modes.shape[1]

    def truncate(self, k: int) -> "RomOperators":
        """Restrict to the leading ``k`` modes (modes are ordered by energy)."""
        if not 1 <= k <= self.n_modes:
            raise ValueError(f"k must lie in [1, {self.n_modes}], got {k}")
        return RomOperators(
            modes=self.modes[:, :k],
            diffusion_reduced=self.diffusion_reduced[:k, :k],
            advection_tensor=self.advection_tensor[:k, :k, :k],
            reduced_ic=self.reduced_ic[:k],
            source_mu=self.source_mu,
        )


@dataclass(frozen=True)
class RomSolution:
    """Reduced trajectory ``reduced_states[:, j]`` at time ``t_j``."""

    reduced_states: np.ndarray
    modes: np.ndarray
    query_mu: float
    basis_mu: float | None

    def lift(self) -> np.ndarray:
        """Reconstruct full states ``U @ reduced_states``."""
        return self.modes @ self.reduced_states


def assemble(basis, grid: Grid, u0: np.ndarray) -> RomOperators:
    """Project the discrete operators and initial state onto a basis.

    ``basis`` is a fitted :class:`~romatlas.pod.Pod` or a plain orthonormal
    ``(n_states, k)`` array. The advection tensor is assembled one slice at a
    time, each slice costing ``O(n_states * k^2)``.
    """
    if isinstance(basis, Pod):
        modes = basis.modes_
        source_mu = basis.source_mu_
    else:
        modes = np.asarray(basis, dtype=float)
        source_mu = None
    u0 = require_finite(as_vector(u0, "u0"), "u0")
    if modes.shape[0] != grid.n_interior or u0.shape[0] != grid.n_interior:
        raise ValueError("basis/initial state do not match the grid interior size")
    ax, axx = build_operators(grid)
    k = modes.shape[1]
    diffusion = modes.T @ axx @ modes
    w = ax @ modes
    tensor = np.empty((k, k, k))
    for l in range(k):
        tensor[:, :, l] = modes.T @ (modes * w[:, l : l + 1])
    return RomOperators(
        modes=modes,
        diffusion_reduced=diffusion,
        advection_tensor=tensor,
        reduced_ic=modes.T @ u0,
        source_mu=source_mu,
    )


def reduced_rhs(ops: RomOperators, a: np.ndarray, params: ModelParams) -> np.ndarray:
    """Projected right-hand side ``-nu * T:(a⊗a) + mu * D a``."""
    quad = np.einsum("ijl,j,l->i", ops.advection_tensor, a, a)
    return -params.nu * quad + params.mu * (ops.diffusion_reduced @ a)


def _reduced_jacobian(ops: RomOperators, a: np.ndarray, params: ModelParams) -> np.ndarray:
    """Jacobian of :func:`reduced_rhs` with respect to the reduced state."""
    t = ops.advection_tensor
    quad_jac = np.einsum("ijl,l->ij", t, a) + np.einsum("ijl,j->il", t, a)
    return -params.nu * quad_jac + params.mu * ops.diffusion_reduced


def integrate(
    ops: RomOperators,
    params: ModelParams,
    grid: Grid,
    settings: SolverSettings = SolverSettings(),
) -> RomSolution:
    """Backward Euler in the reduced space with an analytic Newton Jacobian.

    Uses the same step count and Newton tolerances as the full-order solver.
    Raises :class:`ReducedNewtonError` on divergence, which is expected for
    strong basis/query viscosity mismatches.
    """
    dt = grid.dt
    k = ops.n_modes
    states = np.empty((k, grid.n_time))
    states[:, 0] = ops.reduced_ic
    a = ops.reduced_ic.copy()
    eye = np.eye(k)
    for step in range(1, grid.n_time):
        v = a.copy()
        residual = v - a - dt * reduced_rhs(ops, v, params)
        res_norm = float(np.linalg.norm(residual))
        iters = 0
        while res_norm >= settings.newton_tol:
            if iters >= settings.max_newton_iters:
                raise ReducedNewtonError(step, res_norm, settings.max_newton_iters)
            jac = eye - dt * _reduced_jacobian(ops, v, params)
            try:
                v -= np.linalg.solve(jac, residual)
            except np.linalg.LinAlgError as exc:
                raise ReducedNewtonError(step, res_norm, settings.max_newton_iters) from exc
            residual = v - a - dt * reduced_rhs(ops, v, params)
            res_norm = float(np.linalg.norm(residual))
            if not np.isfinite(res_norm):
                raise ReducedNewtonError(step, res_norm, settings.max_newton_iters)
            iters += 1
        a = v
        states[:, step] = a
    return RomSolution(
        reduced_states=states,
        modes=ops.modes,
        query_mu=params.mu,
        basis_mu=ops.source_mu,
    )


def _check_compatible(hf: SnapshotMatrix, rom: RomSolution) -> np.ndarray:
    if isinstance(hf, SnapshotMatrix):
        x = hf.states
    else:
        x = np.asarray(hf, dtype=float)
    if x.shape[0] != rom.modes.shape[0] or x.shape[1] != rom.reduced_states.shape[1]:
        raise ValueError(
            f"trajectory shape {x.shape} incompatible with reduced solution "
            f"({rom.modes.shape[0]}, {rom.reduced_states.shape[1]})"
        )
    return x


def rom_error_frobenius(hf: SnapshotMatrix, rom: RomSolution) -> float:
    """Frobenius norm of the reconstruction mismatch over the whole trajectory."""
    x = _check_compatible(hf, rom)
    return float(np.linalg.norm(x - rom.lift()))


def rom_error_max_over_time(hf: SnapshotMatrix, rom: RomSolution) -> float:
    """Largest per-time-step 2-norm of the reconstruction mismatch."""
    x = _check_compatible(hf, rom)
    diff = x - rom.lift()
    return float(np.max(np.linalg.norm(diff, axis=0)))
