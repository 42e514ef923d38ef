"""Command-line entry point: simulate, collapse, ensemble and selftest subcommands.

Exit codes: 0 ok, 1 config error, 2 stopped at delta_stop, 3 singularity,
4 degenerate geometry, 5 selftest failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import jsonschema
import numpy as np

from . import collapse as col
from .config import ConfigError, RunConfig, load_config
from .diagnostics import DiagnosticsSpec, compute_c0, record
from .ensemble import delta_scaling_fit, run_ensemble
from .geometry import Torus, VortexState
from .integrator import (
    HIT_DELTA_STOP,
    SINGULARITY,
    StepSizeUnderflow,
    Trajectory,
    integrate_deterministic,
    integrate_stochastic,
)
from .schemas import REPORT_SCHEMAS
from .selftest import format_table, run_battery

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_STOPPED = 2
EXIT_SINGULARITY = 3
EXIT_DEGENERATE = 4
EXIT_SELFTEST = 5

ENSEMBLE_NOTE = (
    "hit probabilities use one fixed regularization radius (kernel.delta) for every threshold in delta_grid; "
    "initial states are uniform on the torus, rejected when closer than reject_factor * max(delta_grid)"
)


def fmt(v: float) -> str:
    return "%.17g" % v


def _clean(obj):
    """Replace non-finite floats by None and numpy scalars by Python ones, recursively."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_report(path: Path, report: dict, kind: str) -> dict:
    doc = _clean(report)
    jsonschema.validate(doc, REPORT_SCHEMAS[kind])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc


def strip_runtime(doc: dict) -> dict:
    """Report without the runtime-metadata block, for determinism comparisons."""
    return {k: v for k, v in doc.items() if k != "runtime"}


# ---------------------------------------------------------------------------
# trajectory CSV


def csv_columns(n: int, with_three: bool, with_g: bool) -> list[str]:
    cols = ["t"] + [f"x{i}_{c}" for i in range(1, n + 1) for c in (1, 2)]
    if n >= 2:
        cols.append("min_dist")
    if with_three:
        cols += ["S", "S_eps", "A"]
    if with_g:
        cols.append("g_delta")
    if n >= 2:
        cols += ["h1", "h2"]
    return cols


_FIELD = {"min_dist": "min_dist", "S": "S", "S_eps": "S_eps", "A": "area_A", "g_delta": "g_delta", "h1": "h1", "h2": "h2"}


def write_trajectory_csv(path: Path, traj: Trajectory, cfg: RunConfig) -> list[str]:
    n = traj.positions.shape[1]
    dspec = None
    if cfg.kernel.delta is not None:
        try:
            dspec = DiagnosticsSpec(compute_c0(cfg.kernel, traj.domain))
        except ValueError:
            dspec = None
    cols = csv_columns(n, n == 3, dspec is not None)
    path.parent.mkdir(parents=True, exist_ok=True)
    last_t = -math.inf
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for t, x in zip(traj.times, traj.positions):
            if not t > last_t:
                continue
            last_t = t
            s = VortexState(x, traj.intensities, traj.domain)
            rec = record(t, s, cfg.kernel.epsilon, cfg.kernel, dspec).as_dict()
            row = [fmt(t)] + [fmt(v) for v in x.ravel()]
            for c in cols[1 + 2 * n :]:
                v = rec[_FIELD[c]]
                row.append("nan" if v is None else fmt(v))
            w.writerow(row)
    return cols


def read_trajectory_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


# ---------------------------------------------------------------------------
# initial states


def _scaled_collapse(cfg: RunConfig, lam: float | None) -> tuple[col.CollapseConfig, col.CollapseConfig | None]:
    plane = cfg.collapse_config()
    lam = lam if lam is not None else cfg.collapse.get("lambda")
    if lam is None:
        return plane, None
    return plane, col.centered(col.scale_config(plane, lam))


def initial_state(cfg: RunConfig, lam: float | None = None) -> VortexState:
    if cfg.vortices is not None:
        return cfg.vortices
    if cfg.collapse is not None:
        plane, scaled = _scaled_collapse(cfg, lam)
        c = scaled if scaled is not None else plane
        return c.state(cfg.domain)
    raise ConfigError("$: a vortices or collapse section is required")


def _integrate(cfg: RunConfig, s0: VortexState, seed: int, ispec=None) -> Trajectory:
    ispec = ispec or cfg.integrator
    if cfg.mode == "stochastic":
        return integrate_stochastic(s0, cfg.kernel, cfg.noise, ispec, cfg.stopping, seed)
    return integrate_deterministic(s0, cfg.kernel, ispec, cfg.stopping)


def _exit_for(traj: Trajectory) -> int:
    if traj.stop_reason == HIT_DELTA_STOP:
        return EXIT_STOPPED
    if traj.stop_reason == SINGULARITY:
        return EXIT_SINGULARITY
    return EXIT_OK


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(cfg: RunConfig, out: Path, seed: int | None = None, lam: float | None = None) -> int:
    t0 = time.perf_counter()
    seed = cfg.seed if seed is None else seed
    try:
        s0 = initial_state(cfg, lam)
    except col.DegenerateGeometryError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DEGENERATE
    try:
        traj = _integrate(cfg, s0, seed)
    except StepSizeUnderflow as err:
        print(f"error: singularity: {err}", file=sys.stderr)
        return EXIT_SINGULARITY
    csv_path = out / "trajectory.csv"
    cols = write_trajectory_csv(csv_path, traj, cfg)
    code = _exit_for(traj)
    report = {
        "command": "simulate",
        "mode": cfg.mode,
        "domain": s0.domain.kind,
        "n_vortices": s0.n,
        "stop_reason": traj.stop_reason,
        "stop_time": traj.stop_time,
        "n_steps": traj.n_steps,
        "message": traj.message,
        "exit_code": code,
        "csv": str(csv_path),
        "columns": cols,
        "config": cfg.raw,
        "runtime": {"wall_seconds": time.perf_counter() - t0},
    }
    write_report(out / "simulate.json", report, "simulate")
    print(f"{traj.stop_reason} at t = {fmt(traj.stop_time)}; wrote {csv_path}")
    return code


def _config_dict(c: col.CollapseConfig) -> dict:
    return {
        "positions": np.asarray(c.positions0),
        "distances": list(c.l0),
        "t_star": c.t_star,
    }


def cmd_collapse(cfg: RunConfig, out: Path, lam: float | None = None, simulate: bool = False) -> int:
    t0 = time.perf_counter()
    try:
        plane, scaled = _scaled_collapse(cfg, lam)
    except (col.DegenerateGeometryError, ValueError) as err:
        if isinstance(err, ConfigError):
            raise
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DEGENERATE
    report = {
        "command": "collapse",
        "epsilon": plane.eps,
        "c_eps": plane.c_eps,
        "xi": np.asarray(plane.xi),
        "positions": np.asarray(plane.positions0),
        "distances": list(plane.l0),
        "area_A": plane.area0,
        "c_coeffs": list(plane.c_coeffs),
        "collapses": plane.collapses,
        "t_star": plane.t_star,
        "center_of_vorticity": plane.center_of_vorticity(),
        "scaled": None,
        "simulation": None,
    }
    if scaled is not None:
        report["scaled"] = {
            "lambda": scaled.lam,
            "factor": col.ScalingMap.for_eps(scaled.lam, scaled.eps).factor,
            **_config_dict(scaled),
            "fits_quarter_box": col.fits_in_box(scaled),
            "min_lambda_to_fit": col.min_lambda_to_fit(col.centered(plane)),
        }
    code = EXIT_OK
    if simulate:
        run_cfg = scaled if scaled is not None else plane
        domain = Torus if scaled is not None else cfg.domain
        ts = run_cfg.t_star
        ispec = cfg.integrator
        if ts is not None:
            ispec = replace(ispec, t_end=1.5 * ts, dt=min(ispec.dt, ts * 1e-3))
        sim_cfg = replace(cfg, domain=domain)
        try:
            traj = _integrate(sim_cfg, run_cfg.state(domain), cfg.seed, ispec)
        except StepSizeUnderflow as err:
            print(f"error: singularity: {err}", file=sys.stderr)
            return EXIT_SINGULARITY
        csv_path = out / "collapse_trajectory.csv"
        write_trajectory_csv(csv_path, traj, sim_cfg)
        report["simulation"] = {
            "domain": domain.kind,
            "stop_reason": traj.stop_reason,
            "stop_time": traj.stop_time,
            "rel_err_vs_t_star": None if ts is None or traj.stop_reason != HIT_DELTA_STOP else abs(traj.stop_time - ts) / ts,
            "csv": str(csv_path),
        }
        if traj.stop_reason == SINGULARITY:
            code = EXIT_SINGULARITY
    report["runtime"] = {"wall_seconds": time.perf_counter() - t0}
    write_report(out / "collapse.json", report, "collapse")
    print(f"xi = ({fmt(plane.xi1)}, {fmt(plane.xi2)}, {fmt(plane.xi3)}); t* = {plane.t_star}")
    return code


def cmd_ensemble(cfg: RunConfig, out: Path, seed: int | None = None) -> int:
    espec = cfg.ensemble_spec(seed)
    try:
        stats = run_ensemble(espec, cfg.kernel, cfg.noise, cfg.integrator)
    except ValueError as err:
        raise ConfigError(f"$.kernel.delta: {err}") from None
    try:
        fit = delta_scaling_fit(stats, cfg.kernel.epsilon).to_dict()
    except ValueError as err:
        fit = {"error": str(err)}
    report = {
        "command": "ensemble",
        "note": ENSEMBLE_NOTE,
        "epsilon": cfg.kernel.epsilon,
        "kernel_delta": cfg.kernel.delta,
        "master_seed": espec.master_seed,
        "horizon_T": espec.horizon_T,
        "init": espec.init,
        "reject_factor": espec.reject_factor,
        "stats": stats.to_dict(),
        "fit": fit,
        "runtime": stats.runtime,
    }
    write_report(out / "ensemble.json", report, "ensemble")
    print("delta   hits   p_hat")
    for d, h, p in zip(stats.delta_grid, stats.hits, stats.p_hat):
        print(f"{d:<7g} {h:<6d} {p:.4f}")
    print(f"fit: {fit}")
    return EXIT_OK


def cmd_selftest() -> int:
    results = run_battery()
    print(format_table(results))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_SELFTEST
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="msqg-vortex", description="Point-vortex dynamics for the mSQG equations.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "collapse", "ensemble"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON run configuration")
        s.add_argument("--out", default=None, help="output directory (default: config output.dir)")
        if name != "collapse":
            s.add_argument("--seed", type=int, default=None, help="override the configured seed")
        if name != "ensemble":
            s.add_argument("--lambda", dest="lam", type=float, default=None, help="torus scaling factor for a collapse section")
        if name == "collapse":
            s.add_argument("--simulate", action="store_true", help="also integrate the configuration")
            s.add_argument("--seed", type=int, default=None, help="override the configured seed")
    sub.add_parser("selftest")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return cmd_selftest()
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if getattr(args, "lam", None) is not None and not args.lam > 0.0:
            raise ConfigError("--lambda: must be positive")
        out = Path(args.out if args.out is not None else cfg.output_dir)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, args.seed, args.lam)
        if args.command == "collapse":
            return cmd_collapse(cfg, out, args.lam, args.simulate)
        return cmd_ensemble(cfg, out, args.seed)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
