"""Closed-loop simulation of the plant-optimizer interconnection.

The plant is stepped with the compensator's output (plus an optional
injected disturbance); the compensator state is threaded through the loop.
Each record holds the plant state, the input computed at that state, the
KKT residual of the tracked estimate, the plan cost, constraint margins,
and timing. The final record is the terminal state with the control the
compensator would apply there (computed, not applied), so a trace of
`steps` transitions has steps + 1 records.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatchError, SspcError
from .runtime import CompensatorState, suboptimality_error, update
from .transcription import OcpSpec


@dataclass(frozen=True)
class PlantModel:
    """Discrete plant x+ = f_d(x, u), optionally built from a continuous
    field by explicit Euler integration (tau in seconds)."""

    n_x: int
    n_u: int
    f_d: Callable
    f_c: Optional[Callable] = None
    tau: Optional[float] = None

    def __post_init__(self):
        origin = np.asarray(self.f_d(np.zeros(self.n_x), np.zeros(self.n_u)), dtype=float)
        if origin.shape != (self.n_x,):
            raise DimensionMismatchError(
                f"f_d returned shape {origin.shape}, expected ({self.n_x},)")
        if float(np.max(np.abs(origin), initial=0.0)) > 1e-12:
            raise DimensionMismatchError(
                "plant must fix the origin: ||f_d(0,0)|| = "
                f"{float(np.max(np.abs(origin))):.3e} > 1e-12")


def euler_discretize(f_c: Callable, tau: float, n_x: int, n_u: int) -> PlantModel:
    """PlantModel with f_d(x, u) = x + tau * f_c(x, u)."""
    if tau <= 0:
        raise ValueError("tau must be positive")

    def f_d(x, u):
        x = np.asarray(x, dtype=float)
        return x + tau * np.asarray(f_c(x, u), dtype=float)

    return PlantModel(n_x=n_x, n_u=n_u, f_d=f_d, f_c=f_c, tau=tau)


def constraint_margins(ocp: OcpSpec, x, u) -> np.ndarray:
    """Componentwise path-constraint values c(x, u); nonpositive = satisfied."""
    if ocp.n_c == 0:
        return np.zeros(0)
    return np.asarray(ocp.path(np.asarray(x, dtype=float),
                               np.asarray(u, dtype=float)), dtype=float)


@dataclass(frozen=True)
class SimConfig:
    """Length and instrumentation switches for one closed-loop run.

    input_disturbance: optional (steps, n_u) array added to the applied
        input (the plant sees u + d; the compensator does not).
    record_suboptimality: run the convergence oracle each sample to log the
        input-space distance to the true optimum (expensive).
    cost_fn(z, x) and margin_fn(x, u) are injected by the caller so the
        simulator does not need the OCP itself.
    """

    steps: int
    record_suboptimality: bool = False
    input_disturbance: Optional[np.ndarray] = None
    cost_fn: Optional[Callable] = None
    margin_fn: Optional[Callable] = None

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.input_disturbance is not None:
            d = np.asarray(self.input_disturbance, dtype=float)
            if d.ndim != 2 or d.shape[0] < self.steps:
                raise DimensionMismatchError(
                    "input_disturbance must be a (steps, n_u) array")


@dataclass(frozen=True)
class SimRecord:
    k: int
    t: float
    x: np.ndarray
    u: np.ndarray
    residual: float
    cost: float
    margins: np.ndarray
    subopt_err: Optional[float]
    ell: int
    wall_s: float


@dataclass
class SimTrace:
    """Time-indexed log of one closed-loop run; `records` has one entry per
    sample including the terminal state."""

    records: list[SimRecord] = field(default_factory=list)
    aborted: bool = False
    error: Optional[str] = None

    @property
    def states(self) -> np.ndarray:
        return np.array([r.x for r in self.records])

    @property
    def inputs(self) -> np.ndarray:
        return np.array([r.u for r in self.records])

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual for r in self.records])


def simulate(plant: PlantModel, compensator: CompensatorState,
             cfg: SimConfig) -> SimTrace:
    """Run the interconnection for cfg.steps transitions.

    Solver failures abort the run; the partial trace is returned with the
    error cause recorded.
    """
    if plant.n_x != compensator.nlp.n_p:
        raise DimensionMismatchError(
            f"plant state dimension {plant.n_x} does not match the "
            f"problem parameter dimension {compensator.nlp.n_p}")
    tau = plant.tau if plant.tau is not None else 1.0
    disturbance = None
    if cfg.input_disturbance is not None:
        disturbance = np.asarray(cfg.input_disturbance, dtype=float)

    trace = SimTrace()
    x = compensator.p_prev.copy()
    state = compensator
    for k in range(cfg.steps + 1):
        t0 = time.perf_counter()
        try:
            u, state = update(state, x)
            wall = time.perf_counter() - t0
            subopt = None
            if cfg.record_suboptimality:
                subopt = suboptimality_error(state, state.nlp, state.layout,
                                             state.cfg, x)
        except SspcError as exc:
            trace.aborted = True
            trace.error = f"solver failure at sample {k}: {exc}"
            return trace
        cost = float(cfg.cost_fn(state.z, x)) if cfg.cost_fn is not None else np.nan
        margins = (np.asarray(cfg.margin_fn(x, u), dtype=float)
                   if cfg.margin_fn is not None else np.zeros(0))
        trace.records.append(SimRecord(
            k=k, t=k * tau, x=x.copy(), u=u.copy(),
            residual=state.last_diagnostics.final_residual,
            cost=cost, margins=margins, subopt_err=subopt,
            ell=state.cfg.ell, wall_s=wall,
        ))
        if k == cfg.steps:
            break
        u_applied = u if disturbance is None else u + disturbance[k]
        x = np.asarray(plant.f_d(x, u_applied), dtype=float)
    return trace
