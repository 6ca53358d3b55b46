"""Command-line surface: simulate, dataset, train, map, select-basis, combine,
dimension, report.

Every command is deterministic given (config, seed): re-running writes
byte-identical artifacts. Each artifact gets a JSON sidecar stamped with the
config fingerprint, which ``report`` cross-checks.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import datasets, interpolation
from .burgers import (
    Grid,
    ModelParams,
    SolverSettings,
    default_initial_condition,
    initial_condition_coefficients,
    save_snapshots,
    solve,
)
from .config import ExperimentConfig
from .galerkin import ReducedNewtonError, assemble, integrate, rom_error_frobenius
from .parametric_map import (
    MapConfig,
    SurrogateErrorModel,
    TrueErrorModel,
    build_map,
    rank_bases,
    spectrum_dimension_baseline,
)
from .pod import Pod, save_basis
from .surrogates import (
    AnnRegressor,
    Dataset,
    GpRegressor,
    kfold_validate,
    load_estimator,
    save_estimator,
)


def _fmt(x) -> str:
    return repr(float(x))


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _sidecar(path: Path, kind: str, cfg: ExperimentConfig, seed: int, **extra) -> None:
    doc = {
        "artifact": path.name,
        "kind": kind,
        "config_fingerprint": cfg.fingerprint(),
        "seed": seed,
    }
    doc.update(extra)
    _write_json(path.with_name(path.stem + ".meta.json"), doc)


def _grid(cfg: ExperimentConfig, t_final: float | None = None) -> Grid:
    g = cfg.grid
    return Grid(
        length=g.length,
        t_final=g.t_final if t_final is None else t_final,
        n_space=g.n_space,
        n_time=g.n_time,
    )


def _settings(cfg: ExperimentConfig) -> SolverSettings:
    return SolverSettings(
        max_newton_iters=cfg.solver.max_newton_iters,
        newton_tol=cfg.solver.newton_tol,
    )


def _initial_condition(cfg: ExperimentConfig, grid: Grid) -> np.ndarray:
    if cfg.ic.kind == "zero":
        return np.zeros(grid.n_interior)
    if cfg.ic.kind == "hump7":
        return default_initial_condition(grid, amplitude=cfg.ic.amplitude)
    raise ValueError(f"unknown initial condition kind {cfg.ic.kind!r}")


def _ic_coefficients(cfg: ExperimentConfig, grid: Grid):
    if cfg.ic.kind == "zero":
        return [0.0]
    return [float(c) for c in initial_condition_coefficients(grid, cfg.ic.amplitude)]


def _mu_tag(mu: float) -> str:
    return f"{mu:g}".replace(".", "p")


def _make_error_model(args, cfg: ExperimentConfig, max_dim: int):
    if args.model == "oracle":
        grid = _grid(cfg)
        return TrueErrorModel(
            grid=grid,
            nu=cfg.physics.nu,
            settings=_settings(cfg),
            u0=_initial_condition(cfg, grid),
            max_dim=max_dim,
        )
    if not args.checkpoint:
        raise ValueError("--checkpoint is required for surrogate models")
    return SurrogateErrorModel(load_estimator(args.checkpoint))


def _make_regressor(cfg: ExperimentConfig, kind: str, seed: int, task: str = "error"):
    if kind == "gp":
        g = cfg.gp
        return GpRegressor(
            length_scale=g.length_scale,
            signal_var=g.signal_var,
            noise_var=g.noise_var,
            n_restarts=g.n_restarts,
            max_iter=g.max_iter,
            max_opt_points=g.max_opt_points,
            max_train_points=g.max_train_points,
            seed=seed,
        )
    if kind == "ann":
        a = cfg.ann
        d = cfg.dimension_eval
        dim_task = task == "dimension"
        return AnnRegressor(
            hidden_layers=d.hidden_layers if dim_task else a.hidden_layers,
            hidden_width=d.hidden_width if dim_task else a.hidden_width,
            learning_rate=a.learning_rate,
            epochs=d.epochs if dim_task else a.epochs,
            optimizer=a.optimizer,
            lr_schedule=a.lr_schedule,
            validation_fraction=a.validation_fraction,
            patience=a.patience,
            seed=seed,
        )
    raise ValueError(f"unknown model kind {kind!r}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_simulate(args, cfg: ExperimentConfig, out: Path, seed: int) -> list[Path]:
    grid = _grid(cfg)
    settings = _settings(cfg)
    u0 = _initial_condition(cfg, grid)
    written = []
    for mu in cfg.simulate.mus:
        snaps = solve(grid, ModelParams(mu=mu, nu=cfg.physics.nu), settings, u0)
        path = out / f"snapshots_mu_{_mu_tag(mu)}.csv"
        save_snapshots(
            snaps,
            path,
            settings=settings,
            ic_coefficients=_ic_coefficients(cfg, grid),
            extra_meta={"config_fingerprint": cfg.fingerprint(), "seed": seed},
        )
        written.append(path)
    return written


def cmd_dataset(args, cfg: ExperimentConfig, out: Path, seed: int) -> list[Path]:
    grid = _grid(cfg)
    settings = _settings(cfg)
    u0 = _initial_condition(cfg, grid)
    if args.task == "error":
        ds = datasets.error_model_sweep(
            grid,
            mus=cfg.error_dataset.mus,
            mu0s=cfg.error_dataset.mu0s,
            dims=cfg.error_dataset.dims,
            nu=cfg.physics.nu,
            settings=settings,
            u0=u0,
        )
        path = out / "error_dataset.csv"
        ds.to_csv(path)
        _sidecar(path, "error_dataset", cfg, seed, n_samples=ds.n_samples)
        return [path]
    d = cfg.dimension_dataset
    mus = [
        round(float(v), 12)
        for v in np.linspace(d.mu_min, d.mu_max, d.n_mus)
    ]
    ds, spectra = datasets.dimension_sweep(
        grid, mus=mus, dims=d.dims, nu=cfg.physics.nu, settings=settings, u0=u0
    )
    path = out / "dimension_dataset.csv"
    ds.to_csv(path)
    _sidecar(path, "dimension_dataset", cfg, seed, n_samples=ds.n_samples)
    spec_path = out / "dimension_spectra.csv"
    with open(spec_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        n_sigma = len(next(iter(spectra.values())))
        writer.writerow(["mu"] + [f"sigma_{i + 1}" for i in range(n_sigma)])
        for mu in mus:
            writer.writerow([_fmt(mu)] + [_fmt(s) for s in spectra[mu]])
    _sidecar(spec_path, "dimension_spectra", cfg, seed)
    return [path, spec_path]


def cmd_train(args, cfg: ExperimentConfig, out: Path, seed: int) -> list[Path]:
    data_path = Path(args.data) if args.data else out / f"{args.task}_dataset.csv"
    ds = datasets.drop_sentinel_rows(Dataset.from_csv(data_path))
    def make_model():
        return _make_regressor(cfg, args.model, seed, task=args.task)

    report = kfold_validate(
        ds.features, ds.targets, make_model, n_folds=cfg.kfold.n_folds, seed=seed
    )
    model = make_model().fit(ds.features, ds.targets)
    ckpt = out / f"{args.task}_{args.model}_model.json"
    save_estimator(model, ckpt)
    _sidecar(ckpt, "checkpoint", cfg, seed, task=args.task, model=args.model)
    report_path = out / f"{args.task}_{args.model}_folds.json"
    _write_json(
        report_path,
        {
            "task": args.task,
            "model": args.model,
            "n_samples": ds.n_samples,
            "config_fingerprint": cfg.fingerprint(),
            **report.as_dict(),
        },
    )
    _sidecar(report_path, "fold_report", cfg, seed, task=args.task, model=args.model)
    return [ckpt, report_path]


def cmd_map(args, cfg: ExperimentConfig, out: Path, seed: int) -> list[Path]:
    m = cfg.map
    map_config = MapConfig(
        domain_min=m.domain_min,
        domain_max=m.domain_max,
        eps0=m.eps0,
        probe_step=m.probe_step,
        radius0=m.radius0,
        dim=m.dim,
        threshold_growth=m.threshold_growth,
        radius_shrink=m.radius_shrink,
        stride_factor=m.stride_factor,
        mu_start=m.mu_start,
        max_iterations=m.max_iterations,
    )
    model = _make_error_model(args, cfg, max_dim=max(m.dim, 15))
    chart = build_map(model, map_config)

    grid = _grid(cfg)
    settings = _settings(cfg)
    u0 = _initial_condition(cfg, grid)
    basis_files = []
    for i, iv in enumerate(chart.intervals):
        if isinstance(model, TrueErrorModel):
            snaps = model.trajectory(iv.center_mu)
        else:
            snaps = solve(
                grid, ModelParams(mu=iv.center_mu, nu=cfg.physics.nu), settings, u0
            )
        basis = Pod(n_modes=iv.basis_dim).fit(snaps)
        bpath = out / f"map_basis_{i:03d}.csv"
        save_basis(basis, bpath, extra_meta={"config_fingerprint": cfg.fingerprint()})
        basis_files.append(bpath.name)

    map_path = out / "map.json"
    chart.to_json(map_path, basis_files=basis_files)
    _sidecar(
        map_path, "parametric_map", cfg, seed,
        model=args.model, n_intervals=len(chart.intervals),
        covers=chart.covers(),
    )
    plot_path = out / "map_plot.csv"
    with open(plot_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["center_mu", "d_left", "d_right", "threshold"])
        for iv in chart.intervals:
            writer.writerow(
                [_fmt(iv.center_mu), _fmt(iv.d_left), _fmt(iv.d_right), _fmt(iv.threshold)]
            )
    _sidecar(plot_path, "map_plot", cfg, seed)
    return [map_path, plot_path]


def cmd_select_basis(args, cfg: ExperimentConfig, out: Path, seed: int) -> list[Path]:
    sb = cfg.select_basis
    query_mu = sb.query_mu if args.mu0 is None else float(args.mu0)
    model = _make_error_model(args, cfg, max_dim=max(sb.dim, 15))
    ranked = rank_bases(model, query_mu, sb.candidate_mus, sb.dim)
    path = out / "basis_ranking.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "mu", "predicted_log_eps"])
        for rank, (mu, log_eps) in enumerate(ranked, start=1):
            writer.writerow([rank, _fmt(mu), _fmt(log_eps)])
    _sidecar(path, "basis_ranking", cfg, seed, query_mu=query_mu, dim=sb.dim, model=args.model)
    return [path]


STRATEGIES = (
    "basis_mu1",
    "basis_mu2",
    "matrix_interpolation",
    "grassmann_interpolation",
    "concatenation",
    "solution_interpolation",
)


def _combine_errors(grid, nu, settings, u0, mu1, mu2, query_mu, k, cache):
    """Frobenius errors of the six basis strategies for one (grid, nu, k)."""
    def hf(mu):
        key = (grid.t_final, nu, mu)
        if key not in cache:
            cache[key] = solve(grid, ModelParams(mu=mu, nu=nu), settings, u0)
        return cache[key]

    s1, s2, target = hf(mu1), hf(mu2), hf(query_mu)
    b1 = Pod(n_modes=k).fit(s1)
    b2 = Pod(n_modes=k).fit(s2)

    def build(name):
        if name == "basis_mu1":
            return b1
        if name == "basis_mu2":
            return b2
        if name == "matrix_interpolation":
            return interpolation.interpolate_basis_matrices([b1, b2], query_mu)
        if name == "grassmann_interpolation":
            return interpolation.interpolate_basis_grassmann([b1, b2], 0, query_mu)
        if name == "concatenation":
            return interpolation.concatenate_bases(b1, b2, k1=k, k2=k)
        return interpolation.interpolate_solutions([s1, s2], query_mu, n_modes=k)

    errors = {}
    for name in STRATEGIES:
        try:
            basis = build(name)
            ops = assemble(basis, grid, u0)
            sol = integrate(ops, ModelParams(mu=query_mu, nu=nu), grid, settings)
            errors[name] = rom_error_frobenius(target, sol)
        except (ReducedNewtonError, interpolation.RankCollapseError, ValueError):
            errors[name] = math.inf
    return errors


def cmd_combine(args, cfg: ExperimentConfig, out: Path, seed: int) -> list[Path]:
    c = cfg.combine
    settings = _settings(cfg)
    mu1, mu2 = c.source_mus
    rows = []
    cache: dict = {}
    for t_final in c.t_finals:
        grid = _grid(cfg, t_final=t_final)
        u0 = _initial_condition(cfg, grid)
        for nu in c.nus:
            errors = _combine_errors(
                grid, nu, settings, u0, mu1, mu2, c.query_mu, c.k_fixed, cache
            )
            for name in STRATEGIES:
                rows.append((t_final, "nu", nu, c.k_fixed, name, errors[name]))
        for k in c.dims:
            errors = _combine_errors(
                grid, cfg.physics.nu, settings, u0, mu1, mu2, c.query_mu, k, cache
            )
            for name in STRATEGIES:
                rows.append((t_final, "dim", cfg.physics.nu, k, name, errors[name]))
    path = out / "combine.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_final", "sweep", "nu", "k", "strategy", "frobenius_error"])
        for t_final, sweep, nu, k, name, err in rows:
            writer.writerow([_fmt(t_final), sweep, _fmt(nu), k, name, _fmt(err)])
    _sidecar(
        path, "combine_comparison", cfg, seed,
        query_mu=c.query_mu, source_mus=list(c.source_mus),
    )
    return [path]


def cmd_dimension(args, cfg: ExperimentConfig, out: Path, seed: int) -> list[Path]:
    data_path = Path(args.data) if args.data else out / "dimension_dataset.csv"
    spectra_path = (
        Path(args.spectra) if args.spectra else out / "dimension_spectra.csv"
    )
    ds = datasets.drop_sentinel_rows(Dataset.from_csv(data_path))

    def make_model():
        return _make_regressor(cfg, args.model, seed, task="dimension")

    report = kfold_validate(
        ds.features, ds.targets, make_model, n_folds=cfg.kfold.n_folds, seed=seed
    )
    predicted = np.clip(np.floor(report.predictions + 0.5), 4, 15).astype(int)
    truth = ds.targets.astype(int)
    gaps = np.abs(predicted - truth)
    histogram = {
        "zero": int(np.sum(gaps == 0)),
        "one": int(np.sum(gaps == 1)),
        "two": int(np.sum(gaps == 2)),
        "three": int(np.sum(gaps == 3)),
        "four": int(np.sum(gaps == 4)),
        "more": int(np.sum(gaps > 4)),
    }

    # spectrum-truncation baseline at the configured accuracy target
    target = cfg.dimension_eval.target_eps
    spectra = {}
    if spectra_path.exists():
        raw = np.loadtxt(spectra_path, delimiter=",", skiprows=1, ndmin=2)
        for row in raw:
            spectra[round(float(row[0]), 12)] = row[1:]
    log_target = math.log(target)
    base_rows = []
    underestimates = 0
    comparable = 0
    for mu in sorted(set(round(float(v), 12) for v in ds.features[:, 0])):
        sel = np.isclose(ds.features[:, 0], mu)
        ks = ds.targets[sel].astype(int)
        log_eps = ds.features[sel, 1]
        feasible = ks[log_eps <= log_target]
        if feasible.size == 0 or mu not in spectra:
            continue
        true_k = int(feasible.min())
        with warnings.catch_warnings():
            # unreachable targets saturate at full rank; clamped below anyway
            warnings.simplefilter("ignore", RuntimeWarning)
            spec_k = spectrum_dimension_baseline(
                spectra[mu], target, on_squares=cfg.energy_on_squares
            )
        spec_k = min(spec_k, 15)
        comparable += 1
        if spec_k <= true_k:
            underestimates += 1
        base_rows.append((mu, true_k, spec_k))
    doc = {
        "task": "dimension",
        "model": args.model,
        "n_samples": ds.n_samples,
        "config_fingerprint": cfg.fingerprint(),
        "fold_error": report.error,
        "fold_variance": report.variance,
        "exact_match_rate": histogram["zero"] / ds.n_samples,
        "within_one_rate": (histogram["zero"] + histogram["one"]) / ds.n_samples,
        "discrepancy_histogram": histogram,
        "spectrum_baseline": {
            "target_eps": target,
            "n_compared": comparable,
            "underestimate_rate": (underestimates / comparable) if comparable else None,
        },
    }
    path = out / f"dimension_report_{args.model}.json"
    _write_json(path, doc)
    _sidecar(path, "dimension_report", cfg, seed, model=args.model)
    table_path = out / f"dimension_baseline_{args.model}.csv"
    with open(table_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mu", "true_k", "spectrum_k"])
        for mu, true_k, spec_k in base_rows:
            writer.writerow([_fmt(mu), true_k, spec_k])
    _sidecar(table_path, "dimension_baseline", cfg, seed)
    return [path, table_path]


def cmd_report(args, cfg: ExperimentConfig, out: Path, seed: int) -> list[Path]:
    artifacts = []
    fingerprints = set()
    for sc in sorted(out.glob("*.json")):
        if sc.name == "report.json":
            continue
        try:
            doc = json.loads(sc.read_text())
        except json.JSONDecodeError:
            continue
        if not isinstance(doc, dict) or "config_fingerprint" not in doc:
            continue
        fingerprints.add(doc["config_fingerprint"])
        artifacts.append(
            {
                "artifact": doc.get("artifact", sc.name),
                "kind": doc.get("kind", "sidecar"),
                "config_fingerprint": doc["config_fingerprint"],
            }
        )
    consistent = len(fingerprints) <= 1
    doc = {
        "n_artifacts": len(artifacts),
        "fingerprints": sorted(str(f) for f in fingerprints),
        "fingerprints_consistent": consistent,
        "artifacts": artifacts,
    }
    path = out / "report.json"
    _write_json(path, doc)
    lines = [f"{'artifact':40s} {'kind':20s} fingerprint"]
    for a in artifacts:
        lines.append(
            f"{a['artifact']:40s} {a['kind']:20s} {str(a['config_fingerprint'])[:12]}"
        )
    lines.append(
        f"{len(artifacts)} artifacts, fingerprints "
        + ("consistent" if consistent else "INCONSISTENT")
    )
    print("\n".join(lines))
    return [path]


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="romatlas",
        description="Local reduced order models over a viscosity domain.",
    )
    parser.add_argument("--config", type=str, default=None, help="config JSON path")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--out", type=str, default=".", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", help="run full-order trajectories")

    p = sub.add_parser("dataset", help="generate training datasets")
    p.add_argument("--task", choices=["error", "dimension"], default="error")

    p = sub.add_parser("train", help="train an error/dimension surrogate")
    p.add_argument("--task", choices=["error", "dimension"], default="error")
    p.add_argument("--model", choices=["gp", "ann"], default="ann")
    p.add_argument("--data", type=str, default=None, help="dataset CSV path")

    p = sub.add_parser("map", help="build the parametric map")
    p.add_argument("--model", choices=["gp", "ann", "oracle"], default="oracle")
    p.add_argument("--checkpoint", type=str, default=None)

    p = sub.add_parser("select-basis", help="rank existing bases for a new parameter")
    p.add_argument("--model", choices=["gp", "ann", "oracle"], default="oracle")
    p.add_argument("--checkpoint", type=str, default=None)
    p.add_argument("--mu0", type=float, default=None)

    sub.add_parser("combine", help="compare basis-combination strategies")

    p = sub.add_parser("dimension", help="evaluate dimension-selection models")
    p.add_argument("--model", choices=["gp", "ann"], default="ann")
    p.add_argument("--data", type=str, default=None)
    p.add_argument("--spectra", type=str, default=None)

    sub.add_parser("report", help="consolidate artifacts in the output directory")
    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "dataset": cmd_dataset,
    "train": cmd_train,
    "map": cmd_map,
    "select-basis": cmd_select_basis,
    "combine": cmd_combine,
    "dimension": cmd_dimension,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = (
            ExperimentConfig.from_json(args.config)
            if args.config
            else ExperimentConfig()
        )
        seed = cfg.seed if args.seed is None else args.seed
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        written = _COMMANDS[args.command](args, cfg, out, seed)
        for path in written:
            print(path)
        return 0
    except Exception as exc:  # surface a machine-readable failure
        print(
            json.dumps(
                {"error": type(exc).__name__, "message": str(exc)}, sort_keys=True
            ),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
