"""Charting the viscosity domain with feasible intervals of local reduced models.

An *error model* predicts ``log`` of the reduced-model error for a triple
``(query viscosity, basis viscosity, basis dimension)``. Implementations range
from trained surrogates to an exact oracle that runs the solvers. On top of
that interface this module searches feasible intervals around a basis
parameter, sweeps the domain greedily into an overlapping interval map, ranks
candidate bases for a new parameter, and picks basis dimensions for target
accuracies.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .burgers import Grid, ModelParams, SnapshotMatrix, SolverSettings
from .burgers import default_initial_condition, solve
from .galerkin import ReducedNewtonError, assemble, integrate, rom_error_frobenius
from .pod import Pod

__all__ = [
    "SurrogateErrorModel",
    "TrueErrorModel",
    "SyntheticErrorModel",
    "FeasibleInterval",
    "MapConfig",
    "ParametricMap",
    "InfeasibleCenterError",
    "MapConstructionError",
    "find_feasible_interval",
    "brute_force_feasible_interval",
    "build_map",
    "rank_bases",
    "predict_dimension",
    "spectrum_dimension_baseline",
]


# ---------------------------------------------------------------------------
# error models
# ---------------------------------------------------------------------------


class SurrogateErrorModel:
    """Adapt a fitted ``(mu0, mu, k) -> log error`` regressor to the map interface."""

    def __init__(self, estimator):
        self.estimator = estimator

    def predict_log_error(self, query_mu: float, basis_mu: float, dim: int) -> float:
        pred = self.estimator.predict(
            np.array([[float(query_mu), float(basis_mu), float(dim)]])
        )
        return float(pred[0])


class SyntheticErrorModel:
    """Wrap a plain callable ``f(query_mu, basis_mu, dim) -> log error``."""

    def __init__(self, fn):
        self.fn = fn

    def predict_log_error(self, query_mu: float, basis_mu: float, dim: int) -> float:
        return float(self.fn(query_mu, basis_mu, dim))


class TrueErrorModel:
    """Exact oracle: runs the full solver and the reduced model on demand.

    Trajectories, assembled operators and error evaluations are memoized, so
    repeated probes during a map construction stay affordable. Diverged
    reduced integrations report ``+inf``.
    """

    def __init__(
        self,
        grid: Grid | None = None,
        nu: float = 1.0,
        settings: SolverSettings | None = None,
        u0: np.ndarray | None = None,
        max_dim: int = 15,
    ):
        self.grid = grid if grid is not None else Grid()
        self.nu = nu
        self.settings = settings if settings is not None else SolverSettings()
        self.u0 = (
            u0 if u0 is not None else default_initial_condition(self.grid)
        )
        self.max_dim = max_dim
        self._trajectories: dict[float, SnapshotMatrix] = {}
        self._operators: dict[float, object] = {}
        self._errors: dict[tuple[float, float, int], float] = {}

    def trajectory(self, mu: float) -> SnapshotMatrix:
        mu = float(mu)
        if mu not in self._trajectories:
            self._trajectories[mu] = solve(
                self.grid, ModelParams(mu=mu, nu=self.nu), self.settings, self.u0
            )
        return self._trajectories[mu]

    def basis(self, mu: float) -> Pod:
        return Pod(n_modes=self.max_dim).fit(self.trajectory(mu))

    def _ops(self, mu: float):
        mu = float(mu)
        if mu not in self._operators:
            self._operators[mu] = assemble(self.basis(mu), self.grid, self.u0)
        return self._operators[mu]

    def true_error(self, query_mu: float, basis_mu: float, dim: int) -> float:
        """Frobenius trajectory error; ``inf`` when the reduced Newton diverges."""
        key = (float(query_mu), float(basis_mu), int(dim))
        if key not in self._errors:
            if not 1 <= dim <= self.max_dim:
                raise ValueError(f"dim must lie in [1, {self.max_dim}], got {dim}")
            ops = self._ops(basis_mu).truncate(int(dim))
            try:
                sol = integrate(
                    ops, ModelParams(mu=float(query_mu), nu=self.nu),
                    self.grid, self.settings,
                )
                err = rom_error_frobenius(self.trajectory(query_mu), sol)
            except ReducedNewtonError:
                err = math.inf
            self._errors[key] = err
        return self._errors[key]

    def predict_log_error(self, query_mu: float, basis_mu: float, dim: int) -> float:
        err = self.true_error(query_mu, basis_mu, dim)
        if err == 0.0:
            return -math.inf
        return math.log(err)


# ---------------------------------------------------------------------------
# feasible intervals
# ---------------------------------------------------------------------------


class InfeasibleCenterError(RuntimeError):
    """The predicted error at the center parameter already violates the threshold."""


class MapConstructionError(RuntimeError):
    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class FeasibleInterval:
    """Viscosity range where one local reduced model meets a threshold."""

    center_mu: float
    d_left: float
    d_right: float
    threshold: float
    basis_dim: int

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if not self.d_left <= self.center_mu <= self.d_right:
            raise ValueError("interval edges must bracket the center")

    @property
    def width(self) -> float:
        return self.d_right - self.d_left

    def contains(self, mu: float) -> bool:
        return self.d_left <= mu <= self.d_right

    def as_dict(self) -> dict:
        return {
            "center_mu": self.center_mu,
            "d_left": self.d_left,
            "d_right": self.d_right,
            "threshold": self.threshold,
            "basis_dim": self.basis_dim,
        }


@dataclass(frozen=True)
class MapConfig:
    """Knobs of the greedy interval sweep over ``[domain_min, domain_max]``."""

    domain_min: float = 0.01
    domain_max: float = 1.0
    eps0: float = 1e-2
    probe_step: float = 5e-3
    radius0: float = 0.5
    dim: int = 9
    threshold_growth: float = 1.2  # threshold multiplier on escalation
    radius_shrink: float = 0.9  # radius multiplier on escalation
    stride_factor: float = 1.4  # next-center stretch over the left reach
    mu_start: float = 0.87
    max_iterations: int = 500
    max_repairs: int = 50
    max_bisections: int = 100

    def __post_init__(self):
        if not self.domain_min < self.domain_max:
            raise ValueError("domain_min must be below domain_max")
        if self.probe_step <= 0 or self.radius0 <= 0 or self.eps0 <= 0:
            raise ValueError("probe_step, radius0 and eps0 must be positive")
        if self.threshold_growth <= 1:
            raise ValueError("threshold_growth must exceed 1")
        if not 0 < self.radius_shrink < 1:
            raise ValueError("radius_shrink must lie in (0, 1)")
        if self.stride_factor <= 1:
            raise ValueError("stride_factor must exceed 1")


@dataclass
class ParametricMap:
    """Ordered (right-to-left) overlapping feasible intervals covering a domain."""

    intervals: list[FeasibleInterval]
    config: MapConfig

    def covers(self, slack: float | None = None) -> bool:
        """Whether the union of intervals covers the configured domain.

        Edges are compared with one probe step of slack by default, since the
        greedy sweep resolves interval boundaries only to that resolution.
        """
        if slack is None:
            slack = self.config.probe_step
        lo, hi = self.config.domain_min, self.config.domain_max
        if not self.intervals:
            return False
        if self.intervals[0].d_right < hi - slack:
            return False
        if self.intervals[-1].d_left > lo + slack:
            return False
        for prev, nxt in zip(self.intervals, self.intervals[1:]):
            if nxt.d_right < prev.d_left - slack:  # gap between consecutive intervals
                return False
        return True

    def interval_for(self, mu: float) -> FeasibleInterval:
        """Innermost (smallest-threshold) interval containing ``mu``."""
        hits = [iv for iv in self.intervals if iv.contains(mu)]
        if not hits:
            raise KeyError(f"mu={mu} is not covered by the map")
        return min(hits, key=lambda iv: (iv.threshold, abs(mu - iv.center_mu)))

    def to_json(self, path: str | Path, basis_files: list[str] | None = None) -> Path:
        path = Path(path)
        entries = []
        for i, iv in enumerate(self.intervals):
            entry = iv.as_dict()
            entry["basis_file"] = basis_files[i] if basis_files else None
            entries.append(entry)
        doc = {
            "config": {
                "domain_min": self.config.domain_min,
                "domain_max": self.config.domain_max,
                "eps0": self.config.eps0,
                "probe_step": self.config.probe_step,
                "radius0": self.config.radius0,
                "dim": self.config.dim,
                "threshold_growth": self.config.threshold_growth,
                "radius_shrink": self.config.radius_shrink,
                "stride_factor": self.config.stride_factor,
                "mu_start": self.config.mu_start,
            },
            "intervals": entries,
        }
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def from_json(cls, path: str | Path) -> "ParametricMap":
        doc = json.loads(Path(path).read_text())
        config = MapConfig(**doc["config"])
        intervals = [
            FeasibleInterval(
                center_mu=e["center_mu"],
                d_left=e["d_left"],
                d_right=e["d_right"],
                threshold=e["threshold"],
                basis_dim=e["basis_dim"],
            )
            for e in doc["intervals"]
        ]
        return cls(intervals=intervals, config=config)


def _scan_side(model, center, dim, log_threshold, step, n_probes, direction):
    """Walk probes ``center + direction*i*step`` until the threshold is violated.

    Returns the last satisfying probe location and whether the very first
    probe already violated. Probe positions use index arithmetic so edges are
    exactly comparable across iterations.
    """
    for i in range(1, n_probes + 1):
        probe = center + direction * i * step
        if model.predict_log_error(probe, center, dim) >= log_threshold:
            return center + direction * (i - 1) * step, i == 1
    return center + direction * n_probes * step, False


def find_feasible_interval(
    model,
    mu: float,
    dim: int,
    threshold: float,
    probe_step: float,
    max_radius: float,
) -> FeasibleInterval:
    """Walk outward from ``mu`` on both sides until the prediction violates.

    The walk stops at the first violating probe (no hole skipping, since the
    error need not be monotone in the distance) or saturates at
    ``mu +- max_radius``.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    log_threshold = math.log(threshold)
    if model.predict_log_error(mu, mu, dim) >= log_threshold:
        raise InfeasibleCenterError(
            f"center mu={mu} violates threshold {threshold:g}; raise the threshold"
        )
    n_probes = int(max_radius / probe_step)
    d_right, _ = _scan_side(model, mu, dim, log_threshold, probe_step, n_probes, +1)
    d_left, _ = _scan_side(model, mu, dim, log_threshold, probe_step, n_probes, -1)
    return FeasibleInterval(
        center_mu=mu, d_left=d_left, d_right=d_right,
        threshold=threshold, basis_dim=dim,
    )


def brute_force_feasible_interval(
    model,
    mu: float,
    dim: int,
    threshold: float,
    probe_step: float,
    max_radius: float,
) -> FeasibleInterval:
    """Dense-scan reference for :func:`find_feasible_interval`.

    Evaluates every probe on both sides first, then takes the contiguous
    satisfying run around the center.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    log_threshold = math.log(threshold)
    if model.predict_log_error(mu, mu, dim) >= log_threshold:
        raise InfeasibleCenterError(
            f"center mu={mu} violates threshold {threshold:g}; raise the threshold"
        )
    n_probes = int(max_radius / probe_step)
    edges = {}
    for direction in (+1, -1):
        ok = [
            model.predict_log_error(mu + direction * i * probe_step, mu, dim)
            < log_threshold
            for i in range(1, n_probes + 1)
        ]
        run = 0
        while run < n_probes and ok[run]:
            run += 1
        edges[direction] = mu + direction * run * probe_step
    return FeasibleInterval(
        center_mu=mu, d_left=edges[-1], d_right=edges[+1],
        threshold=threshold, basis_dim=dim,
    )


def build_map(model, config: MapConfig = MapConfig()) -> ParametricMap:
    """Greedy right-to-left sweep of the domain into overlapping intervals.

    Each center is probed outward at ``probe_step`` resolution. When the very
    first probe on either side violates, the threshold is grown and the search
    radius shrunk, and the center is retried. A new interval whose right edge
    misses the previous interval's left edge pulls its center rightward
    (bisection toward the previous edge) until the overlap constraint holds.
    The next center jumps left past the current left edge by
    ``stride_factor`` and is bisected back toward it until the predicted error
    at that edge meets the threshold, which guarantees the next interval
    overlaps the covered region. The sweep stops once an interval reaches the
    left domain edge.
    """
    eps = config.eps0
    radius = config.radius0
    step = config.probe_step
    dim = config.dim
    mu = config.mu_start
    intervals: list[FeasibleInterval] = []
    iterations = 0

    def charge_iteration():
        nonlocal iterations
        iterations += 1
        if iterations > config.max_iterations:
            raise MapConstructionError(
                f"map construction exceeded {config.max_iterations} iterations",
                partial=ParametricMap(intervals=intervals, config=config),
            )

    while True:
        repairs = 0
        while True:
            charge_iteration()
            # keep at least one probe per side even after repeated shrinks;
            # the epsilon absorbs float noise in radii derived from probe
            # positions, which would otherwise drop a probe spuriously
            radius = max(radius, step)
            n_probes = int(math.floor(radius / step + 1e-9))
            log_eps = math.log(eps)
            d_right, right_failed = _scan_side(model, mu, dim, log_eps, step, n_probes, +1)
            if intervals and d_right < intervals[-1].d_left:
                # overlap repair: pull the center toward the previous left edge
                repairs += 1
                if repairs > config.max_repairs:
                    raise MapConstructionError(
                        f"overlap repair failed {config.max_repairs} times at mu={mu}",
                        partial=ParametricMap(intervals=intervals, config=config),
                    )
                mu = 0.5 * (mu + intervals[-1].d_left)
                continue
            d_left, left_failed = _scan_side(model, mu, dim, log_eps, step, n_probes, -1)
            if right_failed or left_failed:
                # the center cannot sustain this threshold: relax it, narrow the search
                eps *= config.threshold_growth
                radius *= config.radius_shrink
                continue
            break
        intervals.append(
            FeasibleInterval(
                center_mu=mu, d_left=d_left, d_right=d_right,
                threshold=eps, basis_dim=dim,
            )
        )
        if d_left <= config.domain_min or mu <= config.domain_min:
            break
        # jump left past the covered edge, then bisect back until the new
        # reduced model is predicted feasible at that edge (overlap guarantee)
        reach = mu - d_left
        next_mu = mu - config.stride_factor * reach
        if next_mu <= 0:
            next_mu = 0.5 * d_left
        attempts = 0
        while model.predict_log_error(d_left, next_mu, dim) >= math.log(eps):
            attempts += 1
            if attempts > config.max_bisections:
                raise MapConstructionError(
                    f"next-center bisection failed to find a feasible center near {d_left}",
                    partial=ParametricMap(intervals=intervals, config=config),
                )
            if d_left - next_mu <= step:
                # the edge itself cannot hold this threshold: relax it, as the
                # in-interval escalation does
                eps *= config.threshold_growth
            else:
                next_mu = 0.5 * (next_mu + d_left)
        radius = reach
        mu = next_mu
    return ParametricMap(intervals=intervals, config=config)


# ---------------------------------------------------------------------------
# basis ranking and dimension selection
# ---------------------------------------------------------------------------


def rank_bases(model, query_mu: float, candidate_mus, dim: int):
    """Candidates ordered by predicted log error (ascending).

    Ties break deterministically toward the candidate closest to the query,
    then toward the smaller viscosity.
    """
    scored = [
        (float(mu), model.predict_log_error(query_mu, mu, dim))
        for mu in candidate_mus
    ]
    scored.sort(key=lambda t: (t[1], abs(query_mu - t[0]), t[0]))
    return scored


def predict_dimension(
    estimator, mu: float, target_log_eps: float, k_min: int = 4, k_max: int = 15
) -> int:
    """Round and clamp a dimension-model prediction for ``(mu, log target)``."""
    raw = float(estimator.predict(np.array([[float(mu), float(target_log_eps)]]))[0])
    k = int(math.floor(raw + 0.5))
    return max(k_min, min(k_max, k))


def spectrum_dimension_baseline(
    sigma, target_eps: float, on_squares: bool = False
) -> int:
    """Smallest truncation rank whose spectrum tail meets the error target.

    The tail is the plain sum of the discarded singular values by default, or
    the square root of the discarded energy with ``on_squares``. Saturates at
    the full rank (with a warning) when the target is unreachable.
    """
    s = np.asarray(sigma, dtype=float)
    if s.size < 1:
        raise ValueError("empty spectrum")
    if target_eps <= 0:
        raise ValueError("target_eps must be positive")
    for k in range(1, s.size):
        tail = s[k:]
        measure = math.sqrt(float(np.sum(tail**2))) if on_squares else float(np.sum(tail))
        if measure <= target_eps:
            return k
    if s.size > 1:
        warnings.warn(
            f"no truncation reaches target {target_eps:g}; returning full rank",
            RuntimeWarning,
            stacklevel=2,
        )
    return int(s.size)
