"""Predictor-corrector iteration on the semismooth KKT system.

One `step` = a sensitivity (Euler) predictor along the parameter change,
followed by a fixed number of semismooth Newton correctors at the new
parameter. `solve_to_convergence` repeats correctors at fixed parameter
until the residual meets a tolerance; it serves as the fully-converged
oracle the suboptimal controller is compared against.

Steps are pure Newton: no line search or globalization. Transient residual
growth is surfaced through diagnostics (plus a log warning), not damped.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import (NoConvergenceError, NonFiniteEvaluationError,
                     SingularMatrixError)
from .nlp import ParametricNLP, PrimalDualPoint, evaluate, residual

logger = logging.getLogger(__name__)

RESCUE_DELTA = 1e-8
RESIDUAL_GROWTH_WARN_FACTOR = 10.0


@dataclass(frozen=True)
class SspcConfig:
    """Iteration budget and solver knobs.

    ell: corrector iterations per parameter update (>= 0; values >= 1 match
        the method as published, 0 is allowed for ablation).
    use_predictor: apply the sensitivity step on parameter changes.
    regularization_delta: uniform primal-Hessian regularization used in
        every solve (0 disables; singular solves are still rescued once
        with RESCUE_DELTA on top).
    oracle_tol / oracle_max_iter: stopping rule for solve_to_convergence.
    """

    ell: int = 1
    use_predictor: bool = True
    regularization_delta: float = 0.0
    oracle_tol: float = 1e-10
    oracle_max_iter: int = 100

    def __post_init__(self):
        if self.ell < 0:
            raise ValueError("ell must be >= 0")
        if self.oracle_tol <= 0:
            raise ValueError("oracle_tol must be positive")


@dataclass(frozen=True)
class StepDiagnostics:
    """Residual trail and solve counts for one predictor-corrector step.

    Residuals are Euclidean norms of F at the new parameter:
    before the step, after the predictor, and after each corrector.
    """

    residual_before: float
    residual_after_predictor: float
    residual_after_each_corrector: list[float] = field(default_factory=list)
    linear_solve_count: int = 0
    singular_rescues: int = 0

    @property
    def final_residual(self) -> float:
        if self.residual_after_each_corrector:
            return self.residual_after_each_corrector[-1]
        return self.residual_after_predictor


def _try_solve(jac, rhs):
    """Raw pivoted LU solve; returns None when the factorization breaks
    down (non-finite solution, i.e. an exactly vanishing pivot).

    Near-singular but finite solves are allowed through on purpose: the
    method is pure Newton, transient iterates may pass close to singular
    points, and the resulting large step is surfaced through the residual
    diagnostics rather than damped (the strict pivot threshold of
    numerics.solve_linear would misfire on ill-scaled KKT matrices whose
    column norms span many orders of magnitude).
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(jac, check_finite=False)
        sol = sla.lu_solve((lu, piv), rhs, check_finite=False)
    return sol if np.all(np.isfinite(sol)) else None


def _solve_with_rescue(jac, rhs, n_primal, base_delta, iteration_label):
    """LU solve with a one-shot regularization retry on breakdown.

    Returns (solution, solves_used, rescues_used). `jac` is modified in
    place when the rescue fires (the caller's matrix is a scratch copy).
    """
    sol = _try_solve(jac, rhs)
    if sol is not None:
        return sol, 1, 0
    jac[np.arange(n_primal), np.arange(n_primal)] += RESCUE_DELTA
    sol = _try_solve(jac, rhs)
    if sol is None:
        raise SingularMatrixError(
            f"Jacobian singular at {iteration_label} even after "
            f"regularization delta={base_delta + RESCUE_DELTA:g}",
            iteration=iteration_label,
        )
    logger.warning("singular Jacobian at %s; rescued with delta=%g",
                   iteration_label, RESCUE_DELTA)
    return sol, 2, 1


def predictor(nlp: ParametricNLP, z_prev: PrimalDualPoint, p_prev, p_new,
              delta: float = 0.0) -> PrimalDualPoint:
    """Sensitivity step: solve B (z_bar - z_prev) = -V (p_new - p_prev)
    with B, V the generalized Jacobians at (z_prev, p_prev)."""
    p_prev = np.asarray(p_prev, dtype=float)
    p_new = np.asarray(p_new, dtype=float)
    if np.array_equal(p_prev, p_new):
        return z_prev
    ev = evaluate(nlp, z_prev, p_prev, want_jac_z=True, want_jac_p=True, delta=delta)
    rhs = -(ev.jac_p @ (p_new - p_prev))
    step_vec, _, _ = _solve_with_rescue(ev.jac_z, rhs, nlp.n, delta, "predictor")
    return PrimalDualPoint.from_vector(z_prev.to_vector() + step_vec, nlp)


def corrector(nlp: ParametricNLP, z_bar: PrimalDualPoint, p,
              delta: float = 0.0) -> PrimalDualPoint:
    """One semismooth Newton step on F(., p) from z_bar."""
    ev = evaluate(nlp, z_bar, p, want_jac_z=True, delta=delta)
    step_vec, _, _ = _solve_with_rescue(
        ev.jac_z, -ev.residual.to_vector(), nlp.n, delta, "corrector")
    return PrimalDualPoint.from_vector(z_bar.to_vector() + step_vec, nlp)


def step(nlp: ParametricNLP, cfg: SspcConfig, z_prev: PrimalDualPoint,
         p_prev, p_new) -> tuple[PrimalDualPoint, StepDiagnostics]:
    """One parameter update: predictor (if enabled) then cfg.ell correctors.

    On SingularMatrixError the exception names the predictor/corrector
    index at which the factorization failed.
    """
    p_prev = np.asarray(p_prev, dtype=float)
    p_new = np.asarray(p_new, dtype=float)
    delta = cfg.regularization_delta
    solves = 0
    rescues = 0

    r_before = residual(nlp, z_prev, p_new).norm2

    z = z_prev
    moved = False
    if cfg.use_predictor and not np.array_equal(p_prev, p_new):
        ev = evaluate(nlp, z_prev, p_prev, want_jac_z=True, want_jac_p=True,
                      delta=delta)
        rhs = -(ev.jac_p @ (p_new - p_prev))
        step_vec, s_used, r_used = _solve_with_rescue(
            ev.jac_z, rhs, nlp.n, delta, "predictor")
        solves += s_used
        rescues += r_used
        z = PrimalDualPoint.from_vector(z_prev.to_vector() + step_vec, nlp)
        moved = True

    r_after_pred = r_before if not moved else None
    corrector_residuals: list[float] = []
    for k in range(cfg.ell):
        ev = evaluate(nlp, z, p_new, want_jac_z=True, delta=delta)
        if k == 0 and r_after_pred is None:
            r_after_pred = ev.residual.norm2
        elif k > 0:
            corrector_residuals.append(ev.residual.norm2)
        step_vec, s_used, r_used = _solve_with_rescue(
            ev.jac_z, -ev.residual.to_vector(), nlp.n, delta, f"corrector {k}")
        solves += s_used
        rescues += r_used
        z = PrimalDualPoint.from_vector(z.to_vector() + step_vec, nlp)

    if r_after_pred is None:  # predictor moved z but ell == 0
        r_after_pred = residual(nlp, z, p_new).norm2
    if cfg.ell:
        corrector_residuals.append(residual(nlp, z, p_new).norm2)

    diag = StepDiagnostics(
        residual_before=r_before,
        residual_after_predictor=r_after_pred,
        residual_after_each_corrector=corrector_residuals,
        linear_solve_count=solves,
        singular_rescues=rescues,
    )
    if r_before > 0 and diag.final_residual > RESIDUAL_GROWTH_WARN_FACTOR * r_before:
        logger.warning("residual grew from %.3e to %.3e over one step",
                       r_before, diag.final_residual)
    return z, diag


def solve_to_convergence(nlp: ParametricNLP, cfg: SspcConfig,
                         z0: PrimalDualPoint, p) -> tuple[PrimalDualPoint, int]:
    """Repeat correctors at fixed parameter until ||F||_2 <= cfg.oracle_tol.

    Returns the converged point and the number of corrector iterations
    taken (0 if z0 already satisfies the tolerance). Raises
    NoConvergenceError carrying the best iterate seen.
    """
    p = np.asarray(p, dtype=float)
    delta = cfg.regularization_delta
    z = z0
    best_z, best_r = z0, np.inf
    reason = ""
    for it in range(cfg.oracle_max_iter + 1):
        try:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                ev = evaluate(nlp, z, p, want_jac_z=True, delta=delta)
        except NonFiniteEvaluationError:
            # undamped Newton left the evaluable region: report divergence
            # with the best iterate instead of leaking the callback error
            reason = "iterates diverged to a non-evaluable point; "
            break
        r = ev.residual.norm2
        if not np.isfinite(r):
            reason = "residual overflowed; "
            break
        if r < best_r:
            best_z, best_r = z, r
        if r <= cfg.oracle_tol:
            return z, it
        if it == cfg.oracle_max_iter:
            break
        step_vec, _, _ = _solve_with_rescue(
            ev.jac_z, -ev.residual.to_vector(), nlp.n, delta, f"oracle iteration {it}")
        z = PrimalDualPoint.from_vector(z.to_vector() + step_vec, nlp)
    raise NoConvergenceError(
        f"{reason}tolerance {cfg.oracle_tol:g} not reached within "
        f"{cfg.oracle_max_iter} iterations (best residual {best_r:.3e})",
        best=best_z, residual=best_r, iterations=cfg.oracle_max_iter,
    )


def convergence_ratios(diag_sequence) -> list[float]:
    """Empirical quadratic-convergence ratios r_after / r_before^2 for every
    corrector application in the given diagnostics, in order.

    Converged chains (0/0) report 0 by convention. These are diagnostics
    for offline inspection, not guarantees.
    """
    if not diag_sequence:
        raise ValueError("diag_sequence must be nonempty")
    ratios = []
    for diag in diag_sequence:
        r_prev = diag.residual_after_predictor
        for r_next in diag.residual_after_each_corrector:
            ratios.append(0.0 if r_prev == 0.0 else r_next / r_prev**2)
            r_prev = r_next
    return ratios
