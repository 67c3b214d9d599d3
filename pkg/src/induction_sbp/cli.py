"""Batch front-end: run, convergence and stability experiments from a config file.

Configs are JSON with a versioned schema.  Example::

    {
      "schema_version": 1,
      "scheme": "sbp4",
      "grid": {"nx": 80, "ny": 80},
      "domain": [-1.0, 1.0, -1.0, 1.0],
      "velocity": {"kind": "rotation"},
      "initial": "gaussian_hump",
      "boundary": "zero",
      "final_time": 6.283185307179586,
      "dt": {"rule": "scaled", "power": 3, "constant": 8.0},
      "output_dir": "out",
      "experiment": {"kind": "run", "snapshot_times": [3.141592653589793]}
    }

Exit codes: 0 success, 2 config error, 3 solver failure, 4 stability-bound
violation.  All floating point output uses 17 significant digits so files
round-trip 64-bit values exactly.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diagnostics import (
    discrete_divergence,
    fit_rates,
    format_convergence_table,
    growth_constant,
    rel_l2_percent,
    write_convergence_csv,
)
from .grid2d import Grid2D, make_grid, p_norm, write_fields_csv
from .model import BoundaryMode, ProblemSpec, exact_rotation, initial_data, velocity_from_name
from .sbp1d import SbpOrder, min_points
from .stepper import SolverError, StepControls, run

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_config",
    "config_to_dict",
    "save_config",
    "cmd_run",
    "cmd_converge",
    "cmd_stability",
    "main",
]

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_BOUND = 4


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


@dataclass(frozen=True)
class DtRule:
    rule: str  # "fixed" | "scaled"
    value: float = 0.0
    power: float = 2.0
    constant: float = 1.0

    def resolve(self, dx: float) -> float:
        if self.rule == "fixed":
            return self.value
        return self.constant * dx**self.power


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str  # "run" | "converge" | "stability"
    snapshot_times: tuple[float, ...] = ()
    grids: tuple[int, ...] = ()
    dts: tuple[float, ...] = ()
    growth_k_bound: float | None = None


@dataclass(frozen=True)
class RunConfig:
    scheme: SbpOrder
    nx: int
    ny: int
    domain: tuple[float, float, float, float]
    velocity_kind: str
    velocity_params: dict = field(default_factory=dict)
    initial: str = "gaussian_hump"
    boundary: BoundaryMode = BoundaryMode.ZERO
    final_time: float = 0.0
    dt_rule: DtRule = DtRule("fixed", value=1e-2)
    output_dir: str = "out"
    experiment: ExperimentSpec = ExperimentSpec("run")


def _require(data: dict, key: str, path: str):
    if key not in data:
        raise ConfigError(f"missing field '{path}{key}'")
    return data[key]


def _parse_dt(data, path="dt.") -> DtRule:
    rule = str(_require(data, "rule", path))
    if rule == "fixed":
        value = float(_require(data, "value", path))
        if not value > 0:
            raise ConfigError(f"'{path}value' must be positive, got {value}")
        return DtRule("fixed", value=value)
    if rule == "scaled":
        power = float(_require(data, "power", path))
        constant = float(data.get("constant", 1.0))
        if not constant > 0:
            raise ConfigError(f"'{path}constant' must be positive, got {constant}")
        return DtRule("scaled", power=power, constant=constant)
    raise ConfigError(f"'{path}rule' must be 'fixed' or 'scaled', got {rule!r}")


def _parse_experiment(data, scheme: SbpOrder) -> ExperimentSpec:
    kind = str(_require(data, "kind", "experiment."))
    if kind == "run":
        times = tuple(float(t) for t in data.get("snapshot_times", []))
        return ExperimentSpec("run", snapshot_times=times)
    if kind == "converge":
        grids = tuple(int(n) for n in _require(data, "grids", "experiment."))
        if len(grids) < 1:
            raise ConfigError("'experiment.grids' must not be empty")
        for prev, this in zip(grids, grids[1:]):
            if this != 2 * prev:
                raise ConfigError(f"'experiment.grids' must be a doubling sequence, got {prev} -> {this}")
        if min(grids) < min_points(scheme):
            raise ConfigError(f"'experiment.grids' below {scheme.value} minimum {min_points(scheme)}")
        return ExperimentSpec("converge", grids=grids)
    if kind == "stability":
        dts = tuple(float(t) for t in _require(data, "dts", "experiment."))
        if len(dts) < 1 or any(not t > 0 for t in dts):
            raise ConfigError("'experiment.dts' must be a non-empty list of positive steps")
        bound = data.get("growth_k_bound")
        return ExperimentSpec("stability", dts=dts, growth_k_bound=None if bound is None else float(bound))
    raise ConfigError(f"'experiment.kind' must be run, converge or stability, got {kind!r}")


def parse_config(data: dict) -> RunConfig:
    version = _require(data, "schema_version", "")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"'schema_version' must be {SCHEMA_VERSION}, got {version}")
    try:
        scheme = SbpOrder.parse(_require(data, "scheme", ""))
    except ValueError as exc:
        raise ConfigError(f"'scheme': {exc}") from None
    grid = _require(data, "grid", "")
    nx = int(_require(grid, "nx", "grid."))
    ny = int(_require(grid, "ny", "grid."))
    if min(nx, ny) < min_points(scheme):
        raise ConfigError(f"'grid' sizes below the {scheme.value} minimum of {min_points(scheme)}")
    domain = tuple(float(v) for v in _require(data, "domain", ""))
    if len(domain) != 4 or not (domain[1] > domain[0] and domain[3] > domain[2]):
        raise ConfigError(f"'domain' must be [ax, bx, ay, by] with bx > ax, by > ay, got {domain}")
    vel = _require(data, "velocity", "")
    kind = str(_require(vel, "kind", "velocity."))
    params = {k: v for k, v in vel.items() if k != "kind"}
    try:
        velocity_from_name(kind, **params)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"'velocity': {exc}") from None
    initial = str(data.get("initial", "gaussian_hump"))
    boundary_name = str(data.get("boundary", "zero"))
    try:
        boundary = BoundaryMode(boundary_name)
    except ValueError:
        raise ConfigError(f"'boundary' must be 'zero' or 'exact', got {boundary_name!r}") from None
    final_time = float(_require(data, "final_time", ""))
    if final_time < 0:
        raise ConfigError(f"'final_time' must be non-negative, got {final_time}")
    dt_rule = _parse_dt(_require(data, "dt", ""))
    experiment = _parse_experiment(_require(data, "experiment", ""), scheme)
    if experiment.kind == "converge" and kind != "rotation":
        raise ConfigError("'experiment.kind' converge requires the rotation velocity (exact solution)")
    if experiment.kind == "stability" and boundary is not BoundaryMode.ZERO:
        raise ConfigError("'experiment.kind' stability requires zero boundary data")
    return RunConfig(
        scheme=scheme,
        nx=nx,
        ny=ny,
        domain=domain,
        velocity_kind=kind,
        velocity_params=params,
        initial=initial,
        boundary=boundary,
        final_time=final_time,
        dt_rule=dt_rule,
        output_dir=str(data.get("output_dir", "out")),
        experiment=experiment,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return parse_config(data)


def config_to_dict(cfg: RunConfig) -> dict:
    dt = {"rule": cfg.dt_rule.rule}
    if cfg.dt_rule.rule == "fixed":
        dt["value"] = cfg.dt_rule.value
    else:
        dt["power"] = cfg.dt_rule.power
        dt["constant"] = cfg.dt_rule.constant
    exp: dict = {"kind": cfg.experiment.kind}
    if cfg.experiment.kind == "run":
        exp["snapshot_times"] = list(cfg.experiment.snapshot_times)
    elif cfg.experiment.kind == "converge":
        exp["grids"] = list(cfg.experiment.grids)
    else:
        exp["dts"] = list(cfg.experiment.dts)
        if cfg.experiment.growth_k_bound is not None:
            exp["growth_k_bound"] = cfg.experiment.growth_k_bound
    return {
        "schema_version": SCHEMA_VERSION,
        "scheme": cfg.scheme.value,
        "grid": {"nx": cfg.nx, "ny": cfg.ny},
        "domain": list(cfg.domain),
        "velocity": {"kind": cfg.velocity_kind, **cfg.velocity_params},
        "initial": cfg.initial,
        "boundary": cfg.boundary.value,
        "final_time": cfg.final_time,
        "dt": dt,
        "output_dir": cfg.output_dir,
        "experiment": exp,
    }


def save_config(cfg: RunConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _problem(cfg: RunConfig) -> ProblemSpec:
    return ProblemSpec(
        velocity=velocity_from_name(cfg.velocity_kind, **cfg.velocity_params),
        initial=cfg.initial,
        boundary=cfg.boundary,
        domain=cfg.domain,
        final_time=cfg.final_time,
    )


def _grid(cfg: RunConfig, n: int | None = None) -> Grid2D:
    nx = cfg.nx if n is None else n
    ny = cfg.ny if n is None else n
    return make_grid(cfg.scheme, nx, ny, cfg.domain)


def _say(quiet: bool, *parts):
    if not quiet:
        print(*parts)


def cmd_run(cfg: RunConfig, output_dir=None, quiet: bool = False) -> int:
    """Single simulation: field dumps, per-step diagnostics, snapshots."""
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = _problem(cfg)
    grid = _grid(cfg)
    dt = cfg.dt_rule.resolve(grid.dx)

    initial = initial_data(spec, grid)
    write_fields_csv(out / "field_initial.csv", initial)

    diag_rows = []

    def observer(rec):
        div = p_norm(discrete_divergence(rec.field))
        diag_rows.append((rec.n, rec.t, rec.energy, rec.growth, div))

    trajectory = run(spec, grid, dt, observers=[observer],
                     snapshot_times=cfg.experiment.snapshot_times)

    with open(out / "diagnostics.csv", "w", newline="") as fh:
        fh.write("n,t,energy,growth,div_norm\n")
        e0 = trajectory.energies[0]
        div0 = p_norm(discrete_divergence(initial))
        fh.write(f"0,0,{e0:.17g},,{div0:.17g}\n")
        for n, t, energy, growth, div in diag_rows:
            fh.write(f"{n},{t:.17g},{energy:.17g},{growth:.17g},{div:.17g}\n")

    with open(out / "snapshots_index.csv", "w", newline="") as fh:
        fh.write("target_t,actual_t,filename\n")
        for target, (actual, field_v) in zip(cfg.experiment.snapshot_times, trajectory.snapshots):
            name = f"field_t{target:.6g}.csv"
            write_fields_csv(out / name, field_v)
            fh.write(f"{target:.17g},{actual:.17g},{name}\n")

    write_fields_csv(out / "field_final.csv", trajectory.final)
    _say(quiet, f"run: {trajectory.n_steps} steps to t={cfg.final_time:.6g}, outputs in {out}")
    return EXIT_OK


def converge_case(cfg: RunConfig, n: int):
    """One grid level of a convergence study: final error and mid-run divergence."""
    spec = _problem(cfg)
    grid = _grid(cfg, n)
    dt = cfg.dt_rule.resolve(grid.dx)
    half = 0.5 * cfg.final_time
    trajectory = run(spec, grid, dt, snapshot_times=[half])
    err = rel_l2_percent(trajectory.final, exact_rotation(grid, cfg.final_time))
    _, mid = trajectory.snapshots[0]
    div_mid = p_norm(discrete_divergence(mid))
    return err, div_mid, trajectory


def cmd_converge(cfg: RunConfig, output_dir=None, quiet: bool = False) -> int:
    """Refinement study against the exact rotating solution; Table-style output."""
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    errors = []
    for n in cfg.experiment.grids:
        err, _, _ = converge_case(cfg, n)
        errors.append(err)
        _say(quiet, f"converge: {n}x{n} error {err:.6g}%")
    rows = fit_rates(list(cfg.experiment.grids), errors)
    write_convergence_csv(out / "convergence.csv", rows)
    table = format_convergence_table(rows)
    (out / "convergence.txt").write_text(table)
    _say(quiet, table.rstrip())
    return EXIT_OK


def cmd_stability(cfg: RunConfig, output_dir=None, quiet: bool = False) -> int:
    """Growth-factor report over a list of time steps, with optional K bound."""
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = _problem(cfg)
    grid = _grid(cfg)
    results = []
    violation = False
    for dt in cfg.experiment.dts:
        trajectory = run(spec, grid, dt, controls=StepControls(method="direct"))
        growths = trajectory.growths[1:]
        max_growth = float(np.nanmax(growths)) if growths.size else 1.0
        k_fit = growth_constant(growths, dt)
        bound = cfg.experiment.growth_k_bound
        ok = True if bound is None else max_growth <= 1.0 + bound * dt
        violation |= not ok
        results.append((dt, trajectory.n_steps, max_growth, k_fit, ok))
        _say(quiet, f"stability: dt={dt:.6g} steps={trajectory.n_steps} "
                    f"max_growth={max_growth:.12f} K_fit={k_fit:.6g} {'ok' if ok else 'VIOLATION'}")
    with open(out / "stability.csv", "w", newline="") as fh:
        fh.write("dt,steps,max_growth,k_fit,within_bound\n")
        for dt, steps, g, k, ok in results:
            fh.write(f"{dt:.17g},{steps},{g:.17g},{k:.17g},{int(ok)}\n")
    lines = [f"{'dt':>14s} {'steps':>8s} {'max growth':>18s} {'K fit':>12s}"]
    for dt, steps, g, k, _ in results:
        lines.append(f"{dt:14.6e} {steps:8d} {g:18.12f} {k:12.4e}")
    (out / "stability.txt").write_text("\n".join(lines) + "\n")
    return EXIT_BOUND if violation else EXIT_OK


def main(argv=None) -> int:
    # the global options are accepted before or after the subcommand; the
    # after-subcommand copies default to SUPPRESS so they cannot clobber
    # values parsed at the top level
    tail = argparse.ArgumentParser(add_help=False)
    tail.add_argument("--output-dir", default=argparse.SUPPRESS, help="override the config's output directory")
    tail.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="suppress progress output")
    parser = argparse.ArgumentParser(
        prog="induction-sbp",
        description="SBP-SAT solver experiments for the 2D magnetic induction equations",
    )
    parser.add_argument("--output-dir", default=None, help="override the config's output directory")
    parser.add_argument("--quiet", action="store_true", default=False, help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
        ("run", "single simulation with field dumps and diagnostics"),
        ("converge", "refinement study against the exact rotating solution"),
        ("stability", "growth-factor report over a list of time steps"),
    ):
        p = sub.add_parser(name, help=blurb, parents=[tail])
        p.add_argument("config", help="path to a JSON run configuration")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.command == "converge" and cfg.experiment.kind != "converge":
            raise ConfigError("config's experiment.kind must be 'converge' for this command")
        if args.command == "stability" and cfg.experiment.kind != "stability":
            raise ConfigError("config's experiment.kind must be 'stability' for this command")
        if args.command == "run" and cfg.experiment.kind != "run":
            raise ConfigError("config's experiment.kind must be 'run' for this command")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "run":
            return cmd_run(cfg, args.output_dir, args.quiet)
        if args.command == "converge":
            return cmd_converge(cfg, args.output_dir, args.quiet)
        return cmd_stability(cfg, args.output_dir, args.quiet)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        for k, r in enumerate(exc.residuals[-10:]):
            print(f"  residual[{k}] = {r:.6e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
