"""Derivative verification: analytic callbacks vs central differences.

Full-matrix finite differencing is quadratic in problem size, so the bulk
checker probes random directions instead: for each sampled point and each
callback it compares J d against a central difference of the underlying
map along d. Points are sampled with inequality multipliers bounded away
from zero so every complementarity row is differentiated on its smooth
branch.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nlp import ParametricNLP, PrimalDualPoint, evaluate

DEFAULT_ABS_TOL = 1e-6
DEFAULT_REL_TOL = 1e-5


@dataclass
class BlockReport:
    """Worst observed agreement for one derivative callback."""

    name: str
    max_abs_err: float = 0.0
    max_rel_err: float = 0.0
    worst_value: float = 0.0
    passed: bool = True

    def update(self, analytic, numeric, abs_tol, rel_tol):
        analytic = np.atleast_1d(np.asarray(analytic, dtype=float))
        numeric = np.atleast_1d(np.asarray(numeric, dtype=float))
        err = np.abs(analytic - numeric)
        scale = np.maximum(np.abs(analytic), np.abs(numeric))
        bad = err > np.maximum(abs_tol, rel_tol * scale)
        worst = int(np.argmax(err))
        if err[worst] > self.max_abs_err:
            self.max_abs_err = float(err[worst])
            self.worst_value = float(analytic[worst])
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(scale > 0, err / scale, 0.0)
        self.max_rel_err = max(self.max_rel_err, float(np.max(rel)))
        if np.any(bad):
            self.passed = False


@dataclass
class DerivativeReport:
    blocks: list[BlockReport] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(b.passed for b in self.blocks)

    def failing_blocks(self) -> list[str]:
        return [b.name for b in self.blocks if not b.passed]

    def format(self) -> str:
        lines = []
        order = sorted(self.blocks, key=lambda b: (b.passed, -b.max_abs_err))
        for b in order:
            status = "ok  " if b.passed else "FAIL"
            lines.append(f"  [{status}] {b.name:<12} max abs err {b.max_abs_err:.3e}"
                         f"  max rel err {b.max_rel_err:.3e}")
        return "\n".join(lines)


def sample_smooth_point(nlp: ParametricNLP, rng, scale: float = 0.3):
    """Random (z, p) with v in [0.3, 1.3] so no complementarity row sits
    near its kink."""
    w = scale * rng.standard_normal(nlp.n)
    lam = rng.standard_normal(nlp.m)
    v = rng.uniform(0.3, 1.3, size=nlp.q)
    p = scale * rng.standard_normal(nlp.n_p)
    return PrimalDualPoint(w, lam, v), p


def _central_diff(fn, x, d, step):
    return (np.asarray(fn(x + step * d), dtype=float)
            - np.asarray(fn(x - step * d), dtype=float)) / (2.0 * step)


def check_derivatives(nlp: ParametricNLP, n_points: int = 100, seed: int = 0,
                      n_dirs: int = 3, fd_step: float | None = None,
                      abs_tol: float = DEFAULT_ABS_TOL,
                      rel_tol: float = DEFAULT_REL_TOL,
                      point_scale: float = 0.3) -> DerivativeReport:
    """Directional derivative check of every callback at seeded random
    smooth points. Returns a per-block report naming any offender."""
    rng = np.random.default_rng(seed)
    blocks = {name: BlockReport(name) for name in
              ["grad_f", "jac_g", "jac_h", "hess_lag", "hess_lag_p",
               "jac_g_p", "jac_h_p", "jacobian_z", "jacobian_p"]}

    for _ in range(n_points):
        z, p = sample_smooth_point(nlp, rng, scale=point_scale)
        step = fd_step if fd_step is not None else 1e-6 * (
            1.0 + max(float(np.max(np.abs(z.w), initial=0.0)),
                      float(np.max(np.abs(p), initial=0.0))))
        ev = evaluate(nlp, z, p, want_jac_z=True, want_jac_p=True)

        def stationarity_at_w(w_vec):
            zz = PrimalDualPoint(w_vec, z.lam, z.v)
            return evaluate(nlp, zz, p, want_jac_z=False).residual.stationarity

        def stationarity_at_p(p_vec):
            return evaluate(nlp, z, p_vec, want_jac_z=False).residual.stationarity

        def full_residual_at_z(z_vec):
            zz = PrimalDualPoint.from_vector(z_vec, nlp)
            return evaluate(nlp, zz, p, want_jac_z=False).residual.to_vector()

        def full_residual_at_p(p_vec):
            return evaluate(nlp, z, p_vec, want_jac_z=False).residual.to_vector()

        H = np.asarray(nlp.hess_lag(z.w, z.lam, z.v, p), dtype=float)
        Hp = np.asarray(nlp.hess_lag_p(z.w, z.lam, z.v, p), dtype=float)
        Jg = np.asarray(nlp.jac_g(z.w, p), dtype=float) if nlp.m else None
        Jh = np.asarray(nlp.jac_h(z.w, p), dtype=float) if nlp.q else None
        gf = np.asarray(nlp.grad_f(z.w, p), dtype=float)
        Jgp = np.asarray(nlp.jac_g_p(z.w, p), dtype=float) if nlp.m else None
        Jhp = np.asarray(nlp.jac_h_p(z.w, p), dtype=float) if nlp.q else None

        for _ in range(n_dirs):
            dw = rng.standard_normal(nlp.n)
            dw /= np.linalg.norm(dw)
            dp = rng.standard_normal(nlp.n_p)
            dp /= np.linalg.norm(dp)
            dz = rng.standard_normal(nlp.n_z)
            dz /= np.linalg.norm(dz)

            blocks["grad_f"].update(
                gf @ dw,
                _central_diff(lambda wv: nlp.f(wv, p), z.w, dw, step),
                abs_tol, rel_tol)
            if nlp.m:
                blocks["jac_g"].update(
                    Jg @ dw, _central_diff(lambda wv: nlp.g(wv, p), z.w, dw, step),
                    abs_tol, rel_tol)
                blocks["jac_g_p"].update(
                    Jgp @ dp, _central_diff(lambda pv: nlp.g(z.w, pv), p, dp, step),
                    abs_tol, rel_tol)
            if nlp.q:
                blocks["jac_h"].update(
                    Jh @ dw, _central_diff(lambda wv: nlp.h(wv, p), z.w, dw, step),
                    abs_tol, rel_tol)
                blocks["jac_h_p"].update(
                    Jhp @ dp, _central_diff(lambda pv: nlp.h(z.w, pv), p, dp, step),
                    abs_tol, rel_tol)
            blocks["hess_lag"].update(
                H @ dw, _central_diff(stationarity_at_w, z.w, dw, step),
                abs_tol, rel_tol)
            blocks["hess_lag_p"].update(
                Hp @ dp, _central_diff(stationarity_at_p, p, dp, step),
                abs_tol, rel_tol)
            blocks["jacobian_z"].update(
                ev.jac_z @ dz, _central_diff(full_residual_at_z, z.to_vector(), dz, step),
                abs_tol, rel_tol)
            blocks["jacobian_p"].update(
                ev.jac_p @ dp, _central_diff(full_residual_at_p, p, dp, step),
                abs_tol, rel_tol)

    report = DerivativeReport()
    for name in ["grad_f", "jac_g", "jac_h", "hess_lag", "hess_lag_p",
                 "jac_g_p", "jac_h_p", "jacobian_z", "jacobian_p"]:
        blk = blocks[name]
        if name in ("jac_g", "jac_g_p") and nlp.m == 0:
            continue
        if name in ("jac_h", "jac_h_p") and nlp.q == 0:
            continue
        report.blocks.append(blk)
    return report
