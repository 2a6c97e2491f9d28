"""Command-line front end: parse a run configuration, dispatch, write CSVs.

Every run writes a flat ``manifest.txt`` recording the exact parameters,
grid, and tolerances used (plus iteration counts where available), alongside
command-specific CSV files with 15-significant-digit values, so any output
file can be regenerated byte-for-byte from its manifest.

Exit codes: 0 success (a quenched outcome is a valid scientific result),
2 solver non-convergence / non-existence, 3 invalid configuration.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import core, dynamics, limits, statics
from .core import (
    Grid,
    InconclusiveError,
    InvalidConfigError,
    InvalidGridError,
    Params,
    PullinError,
    Tolerances,
)
from .potential import untransform_potential

_FMT = "%.15g"


def _fmt(v) -> str:
    if isinstance(v, float):
        return _FMT % v
    return str(v)


def _write_csv(path: Path, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_manifest(out: Path, entries: dict) -> None:
    with open(out / "manifest.txt", "w") as fh:
        for key, val in entries.items():
            fh.write(f"{key} = {_fmt(val)}\n")


def _parse_config_file(path: str) -> dict[str, str]:
    """Read ``key = value`` lines; '#' starts a comment, blank lines ignored."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, val = line.split("=", 1)
        values[key.strip().replace("-", "_")] = val.strip()
    return values


_DEFAULTS = {
    "epsilon": 0.0,
    "lam": 0.0,
    "gamma": 0.0,
    "dx": 5e-3,
    "deta": 5e-3,
    "dt": 0.0,
    "tmax": 100.0,
    "branch": "upper",
    "equation": "heat",
    "model": "aspect-evolve",
    "bisect_tol": 1e-5,
    "quench_delta": 1e-2,
    "jacobi_tol": 1e-8,
    "picard_tol": 1e-8,
    "shoot_tol": 1e-10,
    "steady_rate_tol": 1e-6,
    "out": "out",
    "snapshot_times": "",
    "sample_every": 100,
    "n_points": 32,
    # spring model parameters
    "mass": 1.0,
    "damping": 1.0,
    "stiffness": 1.0,
    "gap": 1.0,
}

_FLOAT_KEYS = {"epsilon", "lam", "gamma", "dx", "deta", "dt", "tmax",
               "bisect_tol", "quench_delta", "jacobi_tol", "picard_tol",
               "shoot_tol", "steady_rate_tol", "mass", "damping",
               "stiffness", "gap"}
_INT_KEYS = {"sample_every", "n_points"}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pullin",
        description="Coupled membrane/potential pull-in solver")
    sub = p.add_subparsers(dest="command", required=True)
    for name, doc in [
            ("steady", "solve one stationary state"),
            ("bifurcation", "trace the stationary branches up to the fold"),
            ("pullin-static", "locate the static pull-in voltage"),
            ("evolve", "time-step the heat or wave dynamics from rest"),
            ("pullin-dynamic", "locate the dynamic pull-in voltage"),
            ("limit", "run a zero-aspect or spring reference model")]:
        sp = sub.add_parser(name, help=doc)
        sp.add_argument("--config", help="file of key = value lines; flags override it")
        sp.add_argument("--epsilon", type=float, dest="epsilon")
        sp.add_argument("--lambda", type=float, dest="lam")
        sp.add_argument("--gamma", type=float, dest="gamma")
        sp.add_argument("--dx", type=float)
        sp.add_argument("--deta", type=float)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--tmax", type=float)
        sp.add_argument("--branch", choices=["upper", "lower"])
        sp.add_argument("--equation", choices=["heat", "wave"])
        sp.add_argument("--bisect-tol", type=float, dest="bisect_tol")
        sp.add_argument("--quench-delta", type=float, dest="quench_delta")
        sp.add_argument("--jacobi-tol", type=float, dest="jacobi_tol")
        sp.add_argument("--picard-tol", type=float, dest="picard_tol")
        sp.add_argument("--shoot-tol", type=float, dest="shoot_tol")
        sp.add_argument("--steady-rate-tol", type=float, dest="steady_rate_tol")
        sp.add_argument("--out")
        sp.add_argument("--snapshot-times", dest="snapshot_times",
                        help="comma-separated times for full profile dumps")
        sp.add_argument("--sample-every", type=int, dest="sample_every")
        sp.add_argument("--n-points", type=int, dest="n_points")
        if name == "limit":
            sp.add_argument("--model",
                            choices=["aspect-static", "aspect-evolve", "spring"])
            sp.add_argument("--mass", type=float)
            sp.add_argument("--damping", type=float)
            sp.add_argument("--stiffness", type=float)
            sp.add_argument("--gap", type=float)
    return p


def _resolve(args: argparse.Namespace) -> dict:
    """Merge builtin defaults < config file < explicit flags."""
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        for key, val in _parse_config_file(args.config).items():
            if key == "lambda":
                key = "lam"
            if key not in _DEFAULTS:
                raise InvalidConfigError(f"unknown config key {key!r}")
            if key in _FLOAT_KEYS:
                cfg[key] = float(val)
            elif key in _INT_KEYS:
                cfg[key] = int(val)
            else:
                cfg[key] = val
    for key in _DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _make_types(cfg: dict) -> tuple[Params, Grid, Tolerances]:
    params = Params(epsilon=cfg["epsilon"], lam=cfg["lam"], gamma=cfg["gamma"])
    grid = Grid.from_spacing(cfg["dx"], cfg["deta"], cfg["dt"])
    tol = Tolerances(bisect_tol=cfg["bisect_tol"], quench_delta=cfg["quench_delta"],
                     jacobi_tol=cfg["jacobi_tol"], picard_tol=cfg["picard_tol"],
                     shoot_tol=cfg["shoot_tol"],
                     steady_rate_tol=cfg["steady_rate_tol"], t_max=cfg["tmax"])
    return params, grid, tol


def _manifest_base(cfg: dict, params: Params, grid: Grid, tol: Tolerances) -> dict:
    entries = {"command": cfg["command"], "epsilon": params.epsilon,
               "lambda": params.lam, "gamma": params.gamma,
               "nx": grid.nx, "neta": grid.neta, "dx": grid.dx,
               "deta": grid.deta, "dt": grid.dt}
    for name in ("jacobi_tol", "jacobi_max_iter", "picard_tol",
                 "picard_max_iter", "shoot_tol", "bisect_tol", "quench_delta",
                 "steady_rate_tol", "t_max"):
        entries[name] = getattr(tol, name)
    return entries


def _snapshot_list(cfg: dict) -> list[float]:
    text = str(cfg["snapshot_times"]).strip()
    if not text:
        return []
    return [float(tk) for tk in text.split(",")]


def _cmd_steady(cfg, out: Path) -> dict:
    params, grid, tol = _make_types(cfg)
    branch = statics.UPPER if cfg["branch"] == "upper" else statics.LOWER
    st = statics.solve_stationary(params.lam, params.epsilon, grid, branch, tol)
    _write_csv(out / "profile.csv", "x,u", zip(grid.x, st.defl.u))
    samples = untransform_potential(st.phi, st.defl, grid)
    _write_csv(out / "potential.csv", "x,eta,phi",
               ((grid.x[i], grid.eta[j], st.phi.phi[i, j])
                for j in range(grid.neta + 1) for i in range(grid.nx + 1)))
    _write_csv(out / "potential_physical.csv", "x,z,psi", samples)
    return {"u0": st.u0, "picard_sweeps": st.picard_sweeps,
            "picard_residual": st.residual, "branch": st.branch}


def _cmd_bifurcation(cfg, out: Path) -> dict:
    params, grid, tol = _make_types(cfg)
    points = statics.bifurcation_curve(params.epsilon, grid, cfg["n_points"], tol)
    _write_csv(out / "bifurcation.csv", "lambda,u0,branch,converged",
               ((lam, u0, tag, 1) for lam, u0, tag in points))
    return {"n_converged": len(points)}


def _cmd_pullin_static(cfg, out: Path) -> dict:
    params, grid, tol = _make_types(cfg)
    lam_star = statics.find_static_pullin(params.epsilon, grid, tol)
    lo, hi = lam_star - tol.bisect_tol / 2, lam_star + tol.bisect_tol / 2
    _write_csv(out / "pullin.csv", "epsilon,lambda_star,bracket_lo,bracket_hi",
               [(params.epsilon, lam_star, lo, hi)])
    print(f"lambda*_s({_fmt(params.epsilon)}) = {_fmt(lam_star)} "
          f"(bracket [{_fmt(lo)}, {_fmt(hi)}])")
    return {"lambda_star": lam_star, "bracket_lo": lo, "bracket_hi": hi}


def _cmd_evolve(cfg, out: Path) -> dict:
    params, grid, tol = _make_types(cfg)
    if grid.dt == 0.0:
        grid = grid.with_dt(1e-5 if cfg["equation"] == "heat" else 2e-3)
    outc = dynamics.evolve(params, grid, cfg["equation"], tol,
                           cfg["sample_every"], _snapshot_list(cfg))
    _write_csv(out / "trajectory.csv", "t,u0,min_u", outc.trajectory)
    if outc.snapshots:
        _write_csv(out / "snapshots.csv", "t,x,u",
                   ((t, x, u) for t, prof in outc.snapshots
                    for x, u in zip(grid.x, prof)))
    print(f"{outc.kind} at t = {_fmt(outc.t_event)}, u0 = {_fmt(outc.final_u0)}")
    return {"kind": outc.kind, "t_event": outc.t_event,
            "final_u0": outc.final_u0, "dt": grid.dt}


def _cmd_pullin_dynamic(cfg, out: Path) -> dict:
    params, grid, tol = _make_types(cfg)
    if grid.dt == 0.0:
        grid = grid.with_dt(1e-5 if cfg["equation"] == "heat" else 2e-3)
    lam_star = dynamics.find_dynamic_pullin(params.epsilon, params.gamma,
                                            cfg["equation"], grid, tol)
    lo, hi = lam_star - tol.bisect_tol / 2, lam_star + tol.bisect_tol / 2
    _write_csv(out / "pullin.csv",
               "epsilon,gamma,equation,lambda_star,bracket_lo,bracket_hi",
               [(params.epsilon, params.gamma, cfg["equation"], lam_star, lo, hi)])
    print(f"lambda*_{cfg['equation'][0]} = {_fmt(lam_star)} "
          f"(bracket [{_fmt(lo)}, {_fmt(hi)}])")
    return {"lambda_star": lam_star, "bracket_lo": lo, "bracket_hi": hi,
            "dt": grid.dt}


def _cmd_limit(cfg, out: Path) -> dict:
    params, grid, tol = _make_types(cfg)
    model = cfg["model"]
    if model == "aspect-static":
        defl = limits.small_aspect_static(params.lam, cfg["dx"], tol=tol)
        x = -1.0 + cfg["dx"] * np.arange(defl.u.size)
        _write_csv(out / "profile.csv", "x,u", zip(x, defl.u))
        return {"model": model, "u0": defl.u[defl.u.size // 2]}
    if model == "aspect-evolve":
        dt = cfg["dt"] if cfg["dt"] > 0 else (1e-5 if params.gamma == 0 else 2e-3)
        outc = limits.small_aspect_evolve(params.lam, params.gamma, cfg["dx"], dt,
                                          tol, cfg["sample_every"],
                                          _snapshot_list(cfg))
        _write_csv(out / "trajectory.csv", "t,u0,min_u", outc.trajectory)
        print(f"{outc.kind} at t = {_fmt(outc.t_event)}")
        return {"model": model, "kind": outc.kind, "t_event": outc.t_event,
                "final_u0": outc.final_u0, "dt": dt}
    if model == "spring":
        dt = cfg["dt"] if cfg["dt"] > 0 else 1e-4
        p = limits.SpringParams(m=cfg["mass"], b=cfg["damping"],
                                k=cfg["stiffness"], d0=cfg["gap"], lam=params.lam)
        traj, outc = limits.spring_simulate(p, dt, tol.t_max, tol)
        _write_csv(out / "trajectory.csv", "t,x,v", traj)
        print(f"{outc.kind} at t = {_fmt(outc.t_event)}")
        return {"model": model, "kind": outc.kind, "t_event": outc.t_event,
                "final_x": outc.final_u0, "dt": dt}
    raise InvalidConfigError(f"unknown limit model {model!r}")


_COMMANDS = {
    "steady": _cmd_steady,
    "bifurcation": _cmd_bifurcation,
    "pullin-static": _cmd_pullin_static,
    "evolve": _cmd_evolve,
    "pullin-dynamic": _cmd_pullin_dynamic,
    "limit": _cmd_limit,
}


def run(argv: list[str] | None = None) -> int:
    """Parse arguments, dispatch one command, and return the exit status."""
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        cfg["command"] = args.command
        params, grid, tol = _make_types(cfg)
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        extra = _COMMANDS[args.command](cfg, out)
    except (InvalidConfigError, InvalidGridError, ValueError) as err:
        print(f"invalid configuration: {err}", file=sys.stderr)
        return 3
    except (core.NoSolutionError, core.NoConvergenceError,
            core.BracketError, InconclusiveError) as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return 2
    except PullinError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    entries = _manifest_base(cfg, params, grid, tol)
    entries.update(extra)
    _write_manifest(out, entries)
    return 0


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
