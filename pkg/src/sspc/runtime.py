"""Suboptimal-MPC compensator: the optimizer as a dynamic system.

The compensator keeps the current primal-dual estimate between samples.
Each `update` runs one predictor-corrector step against the newly measured
state and emits the first planned input. `ideal_control` is the
fully-converged reference controller used for comparisons.

`update` is functional: it returns a fresh state and never mutates its
input, so a failed solve leaves the caller's state untouched.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import DimensionMismatchError
from .nlp import ParametricNLP, PrimalDualPoint
from .solver import SspcConfig, StepDiagnostics, solve_to_convergence, step
from .transcription import VariableLayout, extract_control


@dataclass(frozen=True)
class CompensatorState:
    """Internal state of the suboptimal controller: the tracked primal-dual
    estimate, the parameter it was last updated against, and diagnostics of
    the most recent step."""

    nlp: ParametricNLP
    layout: VariableLayout
    cfg: SspcConfig
    z: PrimalDualPoint
    p_prev: np.ndarray
    last_diagnostics: Optional[StepDiagnostics] = None


def init_compensator(nlp: ParametricNLP, layout: VariableLayout, cfg: SspcConfig,
                     z0: Optional[PrimalDualPoint], x0) -> CompensatorState:
    """Store the initial estimate (zeros when z0 is None) and the initial
    state, without taking any solver step.

    Because x0 is stored as the reference parameter, a first update at the
    same measured state skips the predictor and only the correctors act.
    """
    x0 = np.asarray(x0, dtype=float)
    if z0 is None:
        z0 = PrimalDualPoint.zeros(nlp)
    z0.check_dims(nlp)
    if layout.n_z != nlp.n_z or layout.n != nlp.n:
        raise DimensionMismatchError("layout does not match the problem dimensions")
    if x0.shape != (nlp.n_p,):
        raise DimensionMismatchError(
            f"x0 has shape {x0.shape}, expected ({nlp.n_p},)")
    return CompensatorState(nlp=nlp, layout=layout, cfg=cfg, z=z0,
                            p_prev=x0.copy())


def update(state: CompensatorState, x_now) -> tuple[np.ndarray, CompensatorState]:
    """One sample: predictor + ell correctors toward the new state, then
    u = H z. Returns (u, new_state); `state` itself is left unchanged."""
    x_now = np.asarray(x_now, dtype=float)
    if x_now.shape != (state.nlp.n_p,):
        raise DimensionMismatchError(
            f"x_now has shape {x_now.shape}, expected ({state.nlp.n_p},)")
    z_new, diag = step(state.nlp, state.cfg, state.z, state.p_prev, x_now)
    new_state = replace(state, z=z_new, p_prev=x_now.copy(), last_diagnostics=diag)
    return extract_control(state.layout, z_new), new_state


def ideal_control(nlp: ParametricNLP, layout: VariableLayout, cfg: SspcConfig,
                  x_now, z_warm: PrimalDualPoint) -> tuple[np.ndarray, PrimalDualPoint]:
    """Fully-converged solve at x_now; returns the first input and the root."""
    z, _ = solve_to_convergence(nlp, cfg, z_warm, np.asarray(x_now, dtype=float))
    return extract_control(layout, z), z


def suboptimality_error(state: CompensatorState, nlp: ParametricNLP,
                        layout: VariableLayout, cfg: SspcConfig, x_now) -> float:
    """||H z - H z*||_2: the input-space distance between the compensator's
    estimate and the converged solution at x_now, i.e. the disturbance
    magnitude injected into the plant by incomplete optimization.

    The oracle warm-starts from the compensator's own estimate, so it
    converges to the branch the compensator is tracking.
    """
    u_state = extract_control(layout, state.z)
    u_star, _ = ideal_control(nlp, layout, cfg, x_now, state.z)
    return float(np.linalg.norm(u_state - u_star))
