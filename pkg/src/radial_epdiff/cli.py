"""Command-line front end.

    radial-epdiff simulate --config run.cfg
    radial-epdiff check-criteria --n 5 --k 2 [--samples 1000]
    radial-epdiff verify --suite all
    radial-epdiff sweep --config sweep.cfg

Exit codes: 0 success, 1 validation error, 2 numerical failure,
3 invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import checks
from .config import ConfigError, RunConfig, SweepConfig, load_run_config, load_sweep_config
from .criteria import (
    ComparisonCheck,
    ComparisonResult,
    CriteriaReport,
    comparison_check,
    comparison_constant,
    comparison_trajectory,
    verify_conditions,
)
from .hypergeom import QuadratureError
from .kernels import RadialGrid, kernel_spec
from .plots import write_line_svg
from .solver import (
    BlowupReport,
    InvariantViolation,
    MomentumData,
    SolverConfig,
    Trajectory,
    auto_time_step,
    gaussian_odd,
    integrate,
    tabulated_momentum,
)

__all__ = ["main", "run_simulation", "SimulationResult", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERIC", "EXIT_INVARIANT"]

log = logging.getLogger("radial_epdiff")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INVARIANT = 0, 1, 2, 3
ENERGY_DRIFT_TOL = 1e-2
NUMERIC_ERRORS = (ArithmeticError, FloatingPointError, np.linalg.LinAlgError, QuadratureError)


def fmt(x) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class SimulationResult:
    config: RunConfig
    data: MomentumData
    solver: SolverConfig
    trajectory: Trajectory
    report: BlowupReport
    comparison: ComparisonResult
    check: ComparisonCheck
    criteria: CriteriaReport
    energy_drift: float

    @property
    def invariants(self) -> dict:
        rho_ok = bool(np.all(self.trajectory.rho > 0))
        q_ok = self.check.q_min_decreasing or self.data.is_zero
        return {
            "criteria": self.criteria.passed,
            "comparison": self.check.passed,
            "energy_drift": self.energy_drift <= ENERGY_DRIFT_TOL,
            "positivity": rho_ok,
            "q_min_decreasing": bool(q_ok),
        }

    @property
    def invariants_passed(self) -> bool:
        return all(self.invariants.values())

    def summary(self) -> dict:
        rep = self.report
        return {
            "n": self.config.n,
            "k": self.config.k,
            "blew_up": rep.blew_up,
            "T_est": rep.T_est if math.isfinite(rep.T_est) else None,
            "r_star": rep.r_star,
            "status": rep.status,
            "steps": rep.steps,
            "final_time": rep.final_time,
            "dt": self.solver.dt,
            "t_max": self.solver.t_max,
            "criteria_passed": self.criteria.passed,
            "C_est": self.criteria.C_est,
            "comparison_passed": self.check.passed,
            "comparison_max_violation": self.check.max_violation,
            "comparison_zero_time": self.comparison.zero_time if math.isfinite(self.comparison.zero_time) else None,
            "energy_drift": self.energy_drift,
            "invariants": self.invariants,
            "invariants_passed": self.invariants_passed,
        }


def _load_table(path: str):
    rows = []
    with open(path, newline="") as fh:
        for line_no, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if line_no == 1:
                    continue  # header
                raise ConfigError("momentum.table", f"bad row {line_no} in {path}: {row!r}") from None
    if not rows:
        raise ConfigError("momentum.table", f"{path} holds no data rows")
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1]


def build_problem(cfg: RunConfig):
    spec = kernel_spec(cfg.k, cfg.n)
    grid = RadialGrid.uniform(cfg.points, cfg.r_max)
    try:
        if cfg.profile == "gaussian_odd":
            data = gaussian_odd(grid, cfg.n, cfg.amplitude)
        else:
            try:
                r_tab, w_tab = _load_table(cfg.table)
            except OSError as exc:
                raise ConfigError("momentum.table", str(exc)) from None
            data = tabulated_momentum(grid, cfg.n, r_tab, cfg.amplitude * w_tab)
    except ConfigError:
        raise
    except ValueError as exc:
        key = "momentum.table" if cfg.profile == "custom_table" else "grid.r_max"
        raise ConfigError(key, str(exc)) from None
    dt_auto, t_auto = auto_time_step(data, spec, cfg.cfl)
    dt = dt_auto if cfg.dt == "auto" else float(cfg.dt)
    t_max = t_auto if cfg.t_max == "auto" else float(cfg.t_max)
    if not dt > cfg.dt_min:
        raise ConfigError("time.dt", f"resolved dt={dt:g} does not exceed time.dt_min={cfg.dt_min:g}")
    solver = SolverConfig(dt=dt, t_max=t_max, dt_min=cfg.dt_min, rho_threshold=cfg.rho_threshold, path=cfg.path)
    return spec, data, solver


def energy_drift(report: BlowupReport, rho_threshold: float) -> float:
    """Max relative energy change over frames with ``min rho >= 10 rho_threshold``."""
    e = report.energy_history
    if e[0] == 0:
        return float(np.max(np.abs(e)))
    mask = report.min_rho_history >= 10 * rho_threshold
    return float(np.max(np.abs(e[mask] / e[0] - 1.0)))


def run_simulation(cfg: RunConfig) -> SimulationResult:
    spec, data, solver = build_problem(cfg)
    traj, report = integrate(data, spec, solver)
    comp = comparison_trajectory(data, spec, traj.times)
    chk = comparison_check(traj, comp, spec, cfg.comparison_tol)
    crit = verify_conditions(spec, cfg.samples)
    return SimulationResult(cfg, data, solver, traj, report, comp, chk, crit, energy_drift(report, cfg.rho_threshold))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def write_outputs(result: SimulationResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    rep = result.report
    q_min = result.check.q_min
    q_comp_min = result.comparison.q_min
    _write_csv(
        out_dir / "timeseries.csv",
        ["t", "min_rho", "argmin_r", "energy", "min_slope", "q_min", "q_comp_min"],
        zip(map(float, rep.times), map(float, rep.min_rho_history), map(float, rep.argmin_r_history),
            map(float, rep.energy_history), map(float, rep.min_slope_history), map(float, q_min),
            map(float, q_comp_min)),
    )
    traj = result.trajectory
    frames = list(range(0, len(traj), result.config.snapshot_every))
    if frames[-1] != len(traj) - 1:
        frames.append(len(traj) - 1)
    r = traj.grid.nodes

    def snapshot_rows():
        for i in frames:
            t = float(traj.times[i])
            for j in range(r.size):
                yield t, float(r[j]), float(traj.gamma[i, j]), float(traj.rho[i, j])

    _write_csv(out_dir / "snapshots.csv", ["t", "r", "gamma", "rho"], snapshot_rows())
    (out_dir / "report.json").write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n")
    if result.config.plots:
        write_line_svg(out_dir / "min_rho.svg", rep.times, rep.min_rho_history, title="min rho", xlabel="t",
                       ylabel="min rho")
        write_line_svg(out_dir / "min_slope.svg", rep.times, rep.min_slope_history, title="min slope",
                       xlabel="t", ylabel="min u_r")


def simulate_to_dir(cfg: RunConfig) -> tuple[int, dict]:
    """Run one configuration and write its artifacts; returns ``(exit code, summary)``."""
    try:
        result = run_simulation(cfg)
    except ConfigError as exc:
        return EXIT_CONFIG, {"error": str(exc)}
    except InvariantViolation as exc:
        return EXIT_INVARIANT, {"error": str(exc)}
    except NUMERIC_ERRORS as exc:
        return EXIT_NUMERIC, {"error": f"numerical failure: {exc}"}
    summary = result.summary()
    if not np.all(np.isfinite(result.report.min_rho_history)):
        return EXIT_NUMERIC, summary
    write_outputs(result, Path(cfg.output_dir))
    return (EXIT_OK if result.invariants_passed else EXIT_INVARIANT), summary


def cmd_simulate(args) -> int:
    cfg = load_run_config(args.config)
    code, summary = simulate_to_dir(cfg)
    if "error" in summary:
        print(f"error: {summary['error']}", file=sys.stderr)
        return code
    for key in ("blew_up", "T_est", "r_star", "status", "criteria_passed", "comparison_passed", "energy_drift"):
        print(f"{key} = {summary[key]}")
    if code == EXIT_INVARIANT:
        failed = [k for k, ok in summary["invariants"].items() if not ok]
        print(f"invariant violation: {', '.join(failed)}", file=sys.stderr)
    print(f"output written to {cfg.output_dir}")
    return code


def cmd_check_criteria(args) -> int:
    if 2 * args.k >= args.n + 2 or args.k < 1 or args.n < 1:
        print(f"error: k: (n={args.n}, k={args.k}) violates 1 <= k < n/2 + 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.samples < 100:
        print("error: samples: must be at least 100", file=sys.stderr)
        return EXIT_CONFIG
    report = verify_conditions(kernel_spec(args.k, args.n), args.samples)
    print(f"min_psi = {fmt(report.min_psi)}")
    print(f"min_scaled_psi_tilde = {fmt(report.min_scaled_psi_tilde)}")
    print(f"C_est = {fmt(report.C_est)}")
    print(f"passed = {str(report.passed).lower()}")
    return EXIT_OK if report.passed else EXIT_INVARIANT


def cmd_verify(args) -> int:
    results = checks.run_suite(args.suite)
    print(checks.format_table(results))
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_INVARIANT


SWEEP_HEADER = ["n", "k", "blew_up", "T_est", "C_est", "exit_code", "error"]


def _sweep_one(cfg: RunConfig) -> list:
    code, summary = simulate_to_dir(cfg)
    c_est = comparison_constant(kernel_spec(cfg.k, cfg.n))
    t_est = summary.get("T_est")
    return [
        cfg.n,
        cfg.k,
        str(summary.get("blew_up", "")).lower(),
        fmt(t_est) if t_est is not None else "",
        fmt(c_est),
        code,
        summary.get("error", ""),
    ]


def run_sweep(sweep: SweepConfig) -> tuple[int, list[list]]:
    base = Path(sweep.template.output_dir)
    configs = [sweep.template.with_pair(n, k, str(base / f"n{n}_k{k}")) for n, k in sweep.pairs]
    if sweep.workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=sweep.workers) as pool:
            rows = list(pool.map(_sweep_one, configs))
    else:
        rows = [_sweep_one(cfg) for cfg in configs]
    base.mkdir(parents=True, exist_ok=True)
    with open(base / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        writer.writerows(rows)
    code = max((row[5] for row in rows), default=EXIT_OK)
    return code, rows


def cmd_sweep(args) -> int:
    sweep = load_sweep_config(args.config)
    for n, k in sweep.duplicates:
        log.warning("duplicate sweep pair (n=%d, k=%d) ignored", n, k)
    code, rows = run_sweep(sweep)
    for row in rows:
        print(",".join(str(v) for v in row[:6]))
    print(f"sweep.csv written to {sweep.template.output_dir}")
    return code


class _Parser(argparse.ArgumentParser):
    # usage errors are validation errors (exit 1); argparse would use 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="radial-epdiff", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", help="integrate one configuration")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("check-criteria", help="sample the breakdown conditions for (n, k)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(func=cmd_check_criteria)
    p = sub.add_parser("verify", help="run identity and oracle suites")
    p.add_argument("--suite", choices=["hypergeom", "kernels", "radialops", "all"], default="all")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("sweep", help="simulate a list of (n, k) pairs")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
