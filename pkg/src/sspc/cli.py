"""Command-line entry point: configuration parsing and experiment drivers.

Commands:
    simulate           closed-loop run -> trace.csv, summary.txt, config-echo.json
    sweep-ell          one run per corrector budget -> traces + metrics.csv
    check-derivatives  analytic callbacks vs finite differences
    solve              single parametric solve to convergence

Configs are JSON. Angles in spacecraft initial states carry an explicit
angle_unit ("deg" or "rad"); angular rates are rad/s. trace.csv uses
shortest round-trip float formatting, so equal runs produce byte-identical
files; the step_wall_s column is left empty unless record_wall_time is set
(wall-clock measurements would break that bit-reproducibility), and wall
time statistics always appear in summary.txt.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .checks import check_derivatives
from .errors import ConfigError, NoConvergenceError, SspcError
from .nlp import PrimalDualPoint, residual
from .problems import ProblemBundle, get_problem
from .runtime import init_compensator
from .simulation import SimConfig, SimTrace, constraint_margins, simulate
from .solver import SspcConfig, solve_to_convergence
from .transcription import extract_control, plan_cost

RESIDUAL_MILESTONES = (1e-6, 1e-10)


@dataclass
class ExperimentConfig:
    problem: str
    ell: int = 1
    use_predictor: bool = True
    regularization_delta: float = 0.0
    oracle_tol: float = 1e-10
    oracle_max_iter: int = 100
    steps: int = 200
    seed: int = 0
    record_suboptimality: bool = False
    record_wall_time: bool = False
    ell_values: list[int] = field(default_factory=lambda: [1, 2, 4])
    initial_state: Optional[np.ndarray] = None
    out_dir: str = "out"

    def solver_config(self, ell: Optional[int] = None) -> SspcConfig:
        return SspcConfig(
            ell=self.ell if ell is None else ell,
            use_predictor=self.use_predictor,
            regularization_delta=self.regularization_delta,
            oracle_tol=self.oracle_tol,
            oracle_max_iter=self.oracle_max_iter,
        )

    def echo_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items()}
        if self.initial_state is not None:
            d["initial_state"] = [float(v) for v in self.initial_state]
        return d


def _require(cond, message, fieldname):
    if not cond:
        raise ConfigError(message, field=fieldname)


def _parse_initial_state(raw, problem: str) -> np.ndarray:
    """Spacecraft states come as {omega_rad_s, angles, angle_unit}; other
    problems take {"value": [...]} or a bare list (native units)."""
    if problem == "spacecraft":
        if isinstance(raw, (list, tuple)):
            raise ConfigError(
                "spacecraft initial_state must be an object with 'omega_rad_s', "
                "'angles' and 'angle_unit' (angle units must be explicit)",
                field="initial_state")
        omega = raw.get("omega_rad_s", [0.0, 0.0, 0.0])
        angles = raw.get("angles")
        unit = raw.get("angle_unit")
        _require(angles is not None, "initial_state.angles is required",
                 "initial_state.angles")
        _require(unit in ("deg", "rad"),
                 f"initial_state.angle_unit must be 'deg' or 'rad', got {unit!r}",
                 "initial_state.angle_unit")
        omega = np.asarray(omega, dtype=float)
        angles = np.asarray(angles, dtype=float)
        _require(omega.shape == (3,) and angles.shape == (3,),
                 "omega_rad_s and angles must each have 3 entries",
                 "initial_state")
        if unit == "deg":
            angles = np.deg2rad(angles)
        return np.concatenate([omega, angles])
    if isinstance(raw, dict):
        raw = raw.get("value")
        _require(raw is not None, "initial_state.value is required",
                 "initial_state.value")
    return np.asarray(raw, dtype=float)


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}", field="--config")
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config is not valid JSON: line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}", field="--config")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object", field="--config")
    known = set(ExperimentConfig.__dataclass_fields__)
    for key in raw:
        _require(key in known, f"unknown config field '{key}'", key)
    _require("problem" in raw, "config field 'problem' is required", "problem")
    merged = dict(raw)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})

    cfg = ExperimentConfig(problem=str(merged["problem"]))
    cfg.ell = int(merged.get("ell", cfg.ell))
    _require(cfg.ell >= 0, "ell must be >= 0", "ell")
    cfg.use_predictor = bool(merged.get("use_predictor", cfg.use_predictor))
    cfg.regularization_delta = float(merged.get("regularization_delta", 0.0))
    cfg.oracle_tol = float(merged.get("oracle_tol", cfg.oracle_tol))
    _require(cfg.oracle_tol > 0, "oracle_tol must be positive", "oracle_tol")
    cfg.oracle_max_iter = int(merged.get("oracle_max_iter", cfg.oracle_max_iter))
    cfg.steps = int(merged.get("steps", cfg.steps))
    _require(cfg.steps >= 1, "steps must be >= 1", "steps")
    cfg.seed = int(merged.get("seed", cfg.seed))
    cfg.record_suboptimality = bool(merged.get("record_suboptimality", False))
    cfg.record_wall_time = bool(merged.get("record_wall_time", False))
    if "ell_values" in merged:
        cfg.ell_values = [int(v) for v in merged["ell_values"]]
        _require(len(cfg.ell_values) > 0 and all(v >= 0 for v in cfg.ell_values),
                 "ell_values must be a nonempty list of integers >= 0",
                 "ell_values")
    if "initial_state" in merged and merged["initial_state"] is not None:
        cfg.initial_state = _parse_initial_state(merged["initial_state"], cfg.problem)
    if "out_dir" in merged and merged["out_dir"]:
        cfg.out_dir = str(merged["out_dir"])
    return cfg


# ---------------------------------------------------------------------------
# trace serialization

def _fmt(x: float) -> str:
    return repr(float(x))


def trace_header(n_x: int, n_u: int) -> str:
    cols = (["k", "t"]
            + [f"x_{i}" for i in range(n_x)]
            + [f"u_{i}" for i in range(n_u)]
            + ["residual", "cost", "max_violation", "subopt_err", "ell",
               "step_wall_s"])
    return ",".join(cols)


def write_trace_csv(trace: SimTrace, path: Path, record_wall_time: bool) -> None:
    if not trace.records:
        raise SspcError("cannot serialize an empty trace")
    n_x = trace.records[0].x.size
    n_u = trace.records[0].u.size
    lines = [trace_header(n_x, n_u)]
    for r in trace.records:
        cells = [str(r.k), _fmt(r.t)]
        cells += [_fmt(v) for v in r.x]
        cells += [_fmt(v) for v in r.u]
        cells.append(_fmt(r.residual))
        cells.append(_fmt(r.cost))
        cells.append(_fmt(float(np.max(r.margins))) if r.margins.size else "")
        cells.append(_fmt(r.subopt_err) if r.subopt_err is not None else "")
        cells.append(str(r.ell))
        cells.append(_fmt(r.wall_s) if record_wall_time else "")
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def _trace_metrics(trace: SimTrace, bundle: ProblemBundle, steps: int) -> dict:
    recs = trace.records
    violations = []
    for r in recs:
        if r.margins.size:
            violations.append(float(np.max(r.margins)))
        else:
            violations.append(-np.inf)
    max_violation = max(violations) if violations else float("nan")
    worst_k = int(np.argmax(violations)) if violations else -1
    crossing = {}
    for tol in RESIDUAL_MILESTONES:
        hit = next((r for r in recs if r.residual <= tol), None)
        crossing[tol] = (hit.k, hit.t) if hit is not None else None
    realized = float("nan")
    if bundle.ocp is not None:
        realized = sum(float(bundle.ocp.stage_cost(r.x, r.u))
                       for r in recs[:steps])
    walls = [r.wall_s for r in recs]
    return dict(
        final_state_norm=float(np.max(np.abs(recs[-1].x))),
        max_violation=max_violation,
        worst_violation_sample=worst_k,
        violation_samples=[r.k for r, v in zip(recs, violations) if v > 1e-9],
        crossing=crossing,
        realized_cost=realized,
        wall_max=max(walls),
        wall_mean=sum(walls) / len(walls),
        final_residual=recs[-1].residual,
    )


def write_summary(path: Path, cfg: ExperimentConfig, ell: int, trace: SimTrace,
                  metrics: dict) -> None:
    lines = [
        f"problem: {cfg.problem}",
        f"ell: {ell}",
        f"steps: {cfg.steps}",
        f"seed: {cfg.seed}",
        f"aborted: {trace.aborted}" + (f" ({trace.error})" if trace.error else ""),
        f"final state inf-norm: {metrics['final_state_norm']:.6e}",
        f"final residual: {metrics['final_residual']:.6e}",
        f"max constraint violation: {max(0.0, metrics['max_violation']):.6e}"
        f" (worst margin {metrics['max_violation']:.6e} at sample"
        f" {metrics['worst_violation_sample']})",
        f"samples with violation > 1e-9: {metrics['violation_samples']}",
        f"closed-loop cost sum (applied stage costs): {metrics['realized_cost']:.6f}",
        f"compensator wall time per update: max {metrics['wall_max']:.6f} s,"
        f" mean {metrics['wall_mean']:.6f} s",
    ]
    for tol, hit in metrics["crossing"].items():
        if hit is None:
            lines.append(f"residual <= {tol:g}: not reached")
        else:
            lines.append(f"residual <= {tol:g}: first at sample {hit[0]} (t = {hit[1]:g} s)")
    path.write_text("\n".join(lines) + "\n")


def _run_one(bundle: ProblemBundle, cfg: ExperimentConfig, ell: int) -> SimTrace:
    if not bundle.simulatable:
        raise ConfigError(
            f"problem '{bundle.name}' has no plant model; only 'solve' and "
            f"'check-derivatives' apply", field="problem")
    x0 = cfg.initial_state if cfg.initial_state is not None else bundle.default_x0
    if x0.shape != (bundle.plant.n_x,):
        raise ConfigError(
            f"initial_state has {x0.size} entries, problem expects "
            f"{bundle.plant.n_x}", field="initial_state")
    comp = init_compensator(bundle.nlp, bundle.layout,
                            cfg.solver_config(ell=ell), None, x0)
    sim_cfg = SimConfig(
        steps=cfg.steps,
        record_suboptimality=cfg.record_suboptimality,
        cost_fn=lambda z, x: plan_cost(bundle.ocp, bundle.layout, z, x),
        margin_fn=lambda x, u: constraint_margins(bundle.ocp, x, u),
    )
    return simulate(bundle.plant, comp, sim_cfg)


def run_simulate(cfg: ExperimentConfig, out_dir: Optional[Path] = None) -> int:
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle = get_problem(cfg.problem)
    trace = _run_one(bundle, cfg, cfg.ell)
    write_trace_csv(trace, out / "trace.csv", cfg.record_wall_time)
    metrics = _trace_metrics(trace, bundle, cfg.steps)
    write_summary(out / "summary.txt", cfg, cfg.ell, trace, metrics)
    (out / "config-echo.json").write_text(
        json.dumps(cfg.echo_dict(), indent=2, sort_keys=True) + "\n")
    if trace.aborted:
        print(f"simulate: aborted ({trace.error}); partial trace written to {out}",
              file=sys.stderr)
        return 1
    print(f"simulate: {len(trace.records)} records -> {out / 'trace.csv'}")
    return 0


def run_sweep_ell(cfg: ExperimentConfig, ell_values: Optional[list[int]] = None,
                  out_dir: Optional[Path] = None) -> int:
    ells = ell_values if ell_values is not None else cfg.ell_values
    if not ells:
        raise ConfigError("ell_values must be nonempty", field="ell_values")
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle = get_problem(cfg.problem)
    rows = ["ell,steps_to_residual_1e10,max_violation,closed_loop_cost_sum"]
    status = 0
    for ell in ells:
        sub = out / f"ell_{ell}"
        sub.mkdir(parents=True, exist_ok=True)
        trace = _run_one(bundle, cfg, ell)
        write_trace_csv(trace, sub / "trace.csv", cfg.record_wall_time)
        metrics = _trace_metrics(trace, bundle, cfg.steps)
        write_summary(sub / "summary.txt", cfg, ell, trace, metrics)
        if trace.aborted:
            print(f"sweep-ell: ell={ell} aborted ({trace.error}); partial trace kept",
                  file=sys.stderr)
            status = 1
            continue
        hit = metrics["crossing"][1e-10]
        rows.append(",".join([
            str(ell),
            str(hit[0]) if hit is not None else "",
            _fmt(max(0.0, metrics["max_violation"])),
            _fmt(metrics["realized_cost"]),
        ]))
    (out / "metrics.csv").write_text("\n".join(rows) + "\n")
    print(f"sweep-ell: wrote {out / 'metrics.csv'}")
    return status


def run_check_derivatives(cfg: ExperimentConfig) -> int:
    bundle = get_problem(cfg.problem)
    report = check_derivatives(bundle.nlp, n_points=100, seed=cfg.seed,
                               fd_step=bundle.fd_step)
    print(f"derivative check for '{cfg.problem}' (100 points, seed {cfg.seed}):")
    print(report.format())
    if not report.passed:
        print("offending blocks: " + ", ".join(report.failing_blocks()),
              file=sys.stderr)
        return 1
    return 0


def run_solve(cfg: ExperimentConfig) -> int:
    bundle = get_problem(cfg.problem)
    x0 = cfg.initial_state if cfg.initial_state is not None else bundle.default_x0
    z0 = PrimalDualPoint.zeros(bundle.nlp)
    try:
        z, iters = solve_to_convergence(bundle.nlp, cfg.solver_config(), z0, x0)
    except NoConvergenceError as exc:
        print(f"solve: {exc}", file=sys.stderr)
        return 1
    norm = residual(bundle.nlp, z, x0).norm2
    print(f"solve: converged in {iters} iterations, ||F|| = {norm:.6e}")
    if bundle.layout is not None:
        u0 = extract_control(bundle.layout, z)
        print("u_0 = " + " ".join(_fmt(v) for v in u0))
    print("z = " + " ".join(_fmt(v) for v in z.to_vector()))
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sspc",
        description="Path-following solver and suboptimal-MPC experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "sweep-ell", "check-derivatives", "solve"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--ell", type=int, default=None,
                        help="override corrector count")
        sp.add_argument("--seed", type=int, default=None, help="override seed")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config,
                          overrides={"ell": args.ell, "seed": args.seed})
        out_dir = Path(args.out) if args.out else None
        if args.command == "simulate":
            return run_simulate(cfg, out_dir)
        if args.command == "sweep-ell":
            return run_sweep_ell(cfg, out_dir=out_dir)
        if args.command == "check-derivatives":
            return run_check_derivatives(cfg)
        return run_solve(cfg)
    except ConfigError as exc:
        where = f" (field: {exc.field})" if exc.field else ""
        print(f"config error: {exc}{where}", file=sys.stderr)
        return 2
    except SspcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
