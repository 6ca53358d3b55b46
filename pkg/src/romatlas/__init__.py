"""Local parametric reduced order models for the 1D viscous Burgers problem.

The package charts a viscosity domain with local POD/Galerkin reduced models:
it trains probabilistic surrogates for the reduced-model error, finds feasible
parameter intervals per basis, sweeps the domain greedily into a parametric
map, ranks and fuses existing bases for new parameters, and predicts the
minimal basis dimension for a target accuracy.
"""

from .burgers import Grid, ModelParams, SnapshotMatrix, SolverSettings, solve
from .galerkin import RomOperators, RomSolution, assemble, integrate
from .galerkin import rom_error_frobenius, rom_error_max_over_time
from .pod import Pod
from .surrogates import AnnRegressor, Dataset, FoldReport, GpRegressor, kfold_validate
from .parametric_map import (
    FeasibleInterval,
    MapConfig,
    ParametricMap,
    SurrogateErrorModel,
    TrueErrorModel,
    build_map,
    find_feasible_interval,
    rank_bases,
)

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "ModelParams",
    "SnapshotMatrix",
    "SolverSettings",
    "solve",
    "Pod",
    "RomOperators",
    "RomSolution",
    "assemble",
    "integrate",
    "rom_error_frobenius",
    "rom_error_max_over_time",
    "AnnRegressor",
    "GpRegressor",
    "Dataset",
    "FoldReport",
    "kfold_validate",
    "FeasibleInterval",
    "MapConfig",
    "ParametricMap",
    "SurrogateErrorModel",
    "TrueErrorModel",
    "build_map",
    "find_feasible_interval",
    "rank_bases",
    "__version__",
]
