"""Command-line entry point.

    igrg --command flow      --lattice ring --sites 4 --t-max 2 --t-step 0.1 --seed 0
    igrg --command verify    --seed 0
    igrg --command ising1d   --J 0:3:0.05
    igrg --command ising2d   --sites 20 --tau-min 1.6 --tau-max 3.4 --tau-step 0.1
    igrg --command diffusion --sites 201 --t-max 50

Values may also come from ``--config FILE`` (``key = value`` lines, keys
named like the flags); flags on the command line win over the file.
Exit codes: 0 success, 1 certificate failure, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .flow import FlowTrajectory, flow_trajectory
from .ising_mc import SWEEP_COLUMNS, exact_speed_density, rows_to_csv, sweep_table, temperature_sweep
from .lattice import (
    LatticeSpec,
    diffusion_kernel_check,
    ising1d_curve,
    random_translation_invariant_state,
    swap_generator,
)
from .operators import normalize_to_gibbs
from .suite import run_suite

SCHEMA_VERSION = "igrg/1"
COMMANDS = ("flow", "verify", "ising1d", "ising2d", "diffusion")
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    lattice: str = "ring"
    sites: tuple = (4,)
    J: tuple = ()
    tau_grid: tuple = ()
    t_grid: tuple = ()
    sweeps: int = 100_000
    therm: int = 10_000
    bins: int = 50
    seed: int = 0
    out: str | None = None
    format: str = "csv"
    enumerate: bool = False
    initial: str = "random"
    inject_fault: bool = False
    jobs: int = 1


def _grid(start: float, stop: float, step: float) -> tuple:
    if step <= 0:
        raise ConfigError("grid step must be positive")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    if n < 1:
        raise ConfigError(f"empty grid [{start}, {stop}]")
    return tuple(float(np.round(start + k * step, 12)) for k in range(n))


def _parse_values(text: str) -> tuple:
    """``a:b:step`` range, comma list, or single value."""
    try:
        if ":" in text:
            a, b, step = (float(x) for x in text.split(":"))
            return _grid(a, b, step)
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse value list {text!r}") from exc


def _parse_sites(text: str) -> tuple:
    try:
        dims = tuple(int(x) for x in str(text).lower().split("x"))
    except ValueError as exc:
        raise ConfigError(f"cannot parse --sites {text!r}") from exc
    if any(d < 1 for d in dims):
        raise ConfigError("--sites extents must be positive")
    return dims


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="igrg", description=__doc__.split("\n\n")[0])
    p.add_argument("--config", help="flat key = value file; command-line flags take precedence")
    p.add_argument("--command", choices=COMMANDS)
    p.add_argument("--lattice", choices=("ring", "chain", "square"), default="ring")
    p.add_argument("--sites", default=None, help="extent(s), e.g. 4 or 2x3")
    p.add_argument("--J", default="0:3:0.05", help="coupling grid a:b:step or list")
    p.add_argument("--tau-min", type=float, default=1.6)
    p.add_argument("--tau-max", type=float, default=3.4)
    p.add_argument("--tau-step", type=float, default=0.1)
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--t-step", type=float, default=0.1)
    p.add_argument("--sweeps", type=int, default=100_000)
    p.add_argument("--therm", type=int, default=10_000)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--enumerate", action="store_true",
                   help="add exact enumeration results (ising2d, L <= 4)")
    p.add_argument("--initial", choices=("random", "fixed"), default="random",
                   help="flow start: random translation-invariant K or the maximally mixed state")
    p.add_argument("--inject-fault", action="store_true",
                   help="verify: append a non-trace-preserving channel (negative control)")
    p.add_argument("--jobs", type=int, default=1, help="parallel Monte Carlo chains")
    return p


def read_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        values[key.lstrip("-").replace("-", "_")] = value
    return values


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    if str(value).lower() in ("1", "true", "yes", "on"):
        return True
    if str(value).lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def parse_config(argv=None) -> RunConfig:
    parser = build_parser()
    first, _ = parser.parse_known_args(argv)
    if first.config:
        file_values = read_config_file(first.config)
        known = {a.dest for a in parser._actions}
        unknown = set(file_values) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("enumerate", "inject_fault"):
            if key in file_values:
                file_values[key] = _as_bool(file_values[key])
        parser.set_defaults(**file_values)
    args = parser.parse_args(argv)
    if args.command is None:
        raise ConfigError("--command is required")
    return to_run_config(args)


def to_run_config(args) -> RunConfig:
    defaults_sites = {"flow": "4", "ising2d": "20", "diffusion": "201"}
    sites = _parse_sites(args.sites or defaults_sites.get(args.command, "4"))
    t_max = args.t_max
    if t_max is None:
        t_max = 50.0 if args.command == "diffusion" else 2.0
    if args.command == "diffusion":
        t_grid = (float(t_max),)
    else:
        t_grid = _grid(0.0, t_max, args.t_step)
    cfg = RunConfig(
        command=args.command, lattice=args.lattice, sites=sites, J=_parse_values(args.J),
        tau_grid=_grid(args.tau_min, args.tau_max, args.tau_step), t_grid=t_grid,
        sweeps=args.sweeps, therm=args.therm, bins=args.bins, seed=args.seed, out=args.out,
        format=args.format, enumerate=args.enumerate, initial=args.initial,
        inject_fault=args.inject_fault, jobs=args.jobs,
    )
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    for name in ("J", "tau_grid", "t_grid"):
        grid = getattr(cfg, name)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"{name} must be nonempty and ascending")
    if min(cfg.tau_grid) <= 0:
        raise ConfigError("temperatures must be positive")
    if min(cfg.t_grid) < 0:
        raise ConfigError("flow times must be non-negative")
    if cfg.sweeps < 1 or cfg.therm < 0 or cfg.bins < 2 or cfg.jobs < 1:
        raise ConfigError("sweeps >= 1, therm >= 0, bins >= 2 and jobs >= 1 are required")
    if cfg.command == "ising2d":
        if len(cfg.sites) not in (1, 2) or len(set(cfg.sites)) != 1 or cfg.sites[0] < 3:
            raise ConfigError("ising2d needs a square lattice with L >= 3")
        if cfg.sweeps < cfg.bins * 100:
            raise ConfigError(f"need at least {cfg.bins * 100} sweeps for {cfg.bins} bins")
        if cfg.enumerate and cfg.sites[0] > 4:
            raise ConfigError("--enumerate is limited to L <= 4")
    if cfg.command == "flow":
        dims = cfg.sites if cfg.lattice != "square" or len(cfg.sites) == 2 else cfg.sites * 2
        if 2 ** int(np.prod(dims)) > 4096:
            raise ConfigError("quantum lattice exceeds the Hilbert dimension cap 4096")


# --- commands ------------------------------------------------------------------------


def _lattice(cfg: RunConfig) -> LatticeSpec:
    if cfg.lattice == "square":
        dims = cfg.sites if len(cfg.sites) == 2 else cfg.sites * 2
        return LatticeSpec(dims, 2, True)
    return LatticeSpec(cfg.sites[:1], 2, cfg.lattice == "ring")


def cmd_flow(cfg: RunConfig):
    lat = _lattice(cfg)
    gen = swap_generator(lat)
    if cfg.initial == "fixed":
        state = normalize_to_gibbs(np.zeros((lat.hilbert_dim, lat.hilbert_dim)))
    else:
        state = random_translation_invariant_state(lat, cfg.seed)
    traj = flow_trajectory(gen, state, cfg.t_grid, lat if lat.periodic else None)
    rows = traj.rows()
    return list(FlowTrajectory.CSV_COLUMNS), rows, EXIT_OK


def cmd_ising1d(cfg: RunConfig):
    rows = [{"J": j, "f": f, "dJdt": d} for j, f, d in ising1d_curve(cfg.J)]
    return ["J", "f", "dJdt"], rows, EXIT_OK


def cmd_ising2d(cfg: RunConfig):
    L = cfg.sites[0]
    results = temperature_sweep(L, cfg.tau_grid, cfg.sweeps, cfg.therm, cfg.bins, cfg.seed,
                                cfg.jobs)
    columns = list(SWEEP_COLUMNS)
    exact = None
    if cfg.enumerate:
        exact = {tau: exact_speed_density(L, tau) for tau in cfg.tau_grid}
        columns.append("f_exact")
    return columns, sweep_table(results, L, cfg.sweeps, exact), EXIT_OK


def cmd_diffusion(cfg: RunConfig):
    rep = diffusion_kernel_check(cfg.sites[0], cfg.t_grid[0])
    rows = [{"site": k, "evolved_value": float(e), "gaussian_value": float(g),
             "L1_distance": rep.l1_distance}
            for k, (e, g) in enumerate(zip(rep.evolved, rep.gaussian))]
    return ["site", "evolved_value", "gaussian_value", "L1_distance"], rows, EXIT_OK


def cmd_verify(cfg: RunConfig):
    reports = [r.to_dict() for r in run_suite(cfg.seed, cfg.inject_fault)]
    failed = [r for r in reports if not r["passed"]]
    summary = {"total": len(reports), "passed": len(reports) - len(failed), "failed": len(failed)}
    print(f"verify: {summary['passed']}/{summary['total']} certificates passed", file=sys.stderr)
    for r in failed:
        print(f"  FAILED {r['name']} (seed {r['seed']}): {r['values']}", file=sys.stderr)
    doc = {"schema_version": SCHEMA_VERSION, "command": "verify", "seed": cfg.seed,
           "summary": summary, "reports": reports}
    return doc, EXIT_FAIL if failed else EXIT_OK


def render(cfg: RunConfig, columns, rows) -> str:
    if cfg.format == "json":
        return json.dumps({"schema_version": SCHEMA_VERSION, "command": cfg.command,
                           "columns": columns, "rows": rows}, indent=1) + "\n"
    return rows_to_csv(rows, columns)


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(cfg: RunConfig) -> int:
    if cfg.command == "verify":
        doc, code = cmd_verify(cfg)
        _emit(cfg, json.dumps(doc, indent=1) + "\n")
        return code
    handler = {"flow": cmd_flow, "ising1d": cmd_ising1d, "ising2d": cmd_ising2d,
               "diffusion": cmd_diffusion}[cfg.command]
    columns, rows, code = handler(cfg)
    _emit(cfg, render(cfg, columns, rows))
    return code


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"igrg: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return run(cfg)
    except NumericalError as exc:
        t = getattr(exc, "time", None)
        where = f" at t={t}" if t is not None else ""
        print(f"igrg: numerical failure{where}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"igrg: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
