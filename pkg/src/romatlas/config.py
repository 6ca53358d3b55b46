"""One serializable configuration record driving every command.

A bare config runs the full-size default studies. Round-tripping through JSON
is identity, and a SHA-256 fingerprint of the canonical form stamps every
artifact sidecar.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .burgers import DEFAULT_IC_AMPLITUDE


def _float_range(start: float, stop: float, step: float) -> list[float]:
    """Inclusive rounded grid, safe against float drift."""
    n = int(round((stop - start) / step))
    return [round(start + i * step, 10) for i in range(n + 1)]


@dataclass
class GridConfig:
    length: float = 1.0
    t_final: float = 1.0
    n_space: int = 201
    n_time: int = 301


@dataclass
class PhysicsConfig:
    nu: float = 1.0


@dataclass
class SolverConfig:
    max_newton_iters: int = 50
    newton_tol: float = 1e-10


@dataclass
class InitialConditionConfig:
    kind: str = "hump7"  # "hump7" (default degree-7 profile) or "zero"
    amplitude: float = DEFAULT_IC_AMPLITUDE


@dataclass
class SimulateConfig:
    mus: list[float] = field(default_factory=lambda: [0.8])


@dataclass
class ErrorDatasetConfig:
    mus: list[float] = field(default_factory=lambda: _float_range(0.1, 1.0, 0.1))
    mu0s: list[float] = field(default_factory=lambda: _float_range(0.01, 1.0, 0.01))
    dims: list[int] = field(default_factory=lambda: list(range(4, 16)))


@dataclass
class DimensionDatasetConfig:
    n_mus: int = 750
    mu_min: float = 0.01
    mu_max: float = 1.0
    dims: list[int] = field(default_factory=lambda: list(range(4, 16)))


@dataclass
class GpConfig:
    length_scale: float = 1.0
    signal_var: float | None = None
    noise_var: float | None = None
    n_restarts: int = 3
    max_iter: int = 40
    max_opt_points: int = 768
    max_train_points: int = 4000


@dataclass
class AnnConfig:
    hidden_layers: int = 6
    hidden_width: int = 40
    learning_rate: float = 0.03
    epochs: int = 5000
    optimizer: str = "adam"
    lr_schedule: str = "cosine"
    validation_fraction: float = 0.1
    patience: int = 1000


@dataclass
class KfoldConfig:
    n_folds: int = 5


@dataclass
class MapSweepConfig:
    domain_min: float = 0.01
    domain_max: float = 1.0
    eps0: float = 1e-2
    probe_step: float = 5e-3
    radius0: float = 0.5
    dim: int = 9
    threshold_growth: float = 1.2
    radius_shrink: float = 0.9
    stride_factor: float = 1.4
    mu_start: float = 0.87
    max_iterations: int = 500


@dataclass
class SelectBasisConfig:
    query_mu: float = 0.35
    candidate_mus: list[float] = field(default_factory=lambda: _float_range(0.1, 1.0, 0.1))
    dim: int = 12


@dataclass
class CombineConfig:
    query_mu: float = 0.35
    source_mus: list[float] = field(default_factory=lambda: [0.3, 0.4])
    t_finals: list[float] = field(default_factory=lambda: [0.01, 1.0])
    nus: list[float] = field(default_factory=lambda: _float_range(0.2, 1.0, 0.2))
    dims: list[int] = field(default_factory=lambda: [4, 6, 8, 10, 12, 14, 16, 18, 20])
    k_fixed: int = 14


@dataclass
class DimensionEvalConfig:
    target_eps: float = 1e-3
    # the dimension model is shallower and narrower than the error model
    hidden_layers: int = 5
    hidden_width: int = 20
    epochs: int = 2000


@dataclass
class ExperimentConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    ic: InitialConditionConfig = field(default_factory=InitialConditionConfig)
    simulate: SimulateConfig = field(default_factory=SimulateConfig)
    error_dataset: ErrorDatasetConfig = field(default_factory=ErrorDatasetConfig)
    dimension_dataset: DimensionDatasetConfig = field(default_factory=DimensionDatasetConfig)
    gp: GpConfig = field(default_factory=GpConfig)
    ann: AnnConfig = field(default_factory=AnnConfig)
    kfold: KfoldConfig = field(default_factory=KfoldConfig)
    map: MapSweepConfig = field(default_factory=MapSweepConfig)
    select_basis: SelectBasisConfig = field(default_factory=SelectBasisConfig)
    combine: CombineConfig = field(default_factory=CombineConfig)
    dimension_eval: DimensionEvalConfig = field(default_factory=DimensionEvalConfig)
    energy_on_squares: bool = False
    seed: int = 0

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        kwargs = {}
        for f in dataclasses.fields(cls):
            if f.name not in doc:
                continue
            value = doc[f.name]
            if dataclasses.is_dataclass(f.type) or f.name in _SECTION_TYPES:
                kwargs[f.name] = _SECTION_TYPES[f.name](**value)
            else:
                kwargs[f.name] = value
        return cls(**kwargs)

    def to_json(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


_SECTION_TYPES = {
    "grid": GridConfig,
    "physics": PhysicsConfig,
    "solver": SolverConfig,
    "ic": InitialConditionConfig,
    "simulate": SimulateConfig,
    "error_dataset": ErrorDatasetConfig,
    "dimension_dataset": DimensionDatasetConfig,
    "gp": GpConfig,
    "ann": AnnConfig,
    "kfold": KfoldConfig,
    "map": MapSweepConfig,
    "select_basis": SelectBasisConfig,
    "combine": CombineConfig,
    "dimension_eval": DimensionEvalConfig,
}
