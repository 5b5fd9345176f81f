"""Direct transcription of a finite-horizon optimal control problem into a
parametric NLP with the current plant state as the parameter.

Decision vector: w = (xi_1..xi_N, u_0..u_{N-1}) -- all states first, then
all inputs. The initial state xi_0 is substituted out, so the parameter
enters only through the stage-0 dynamics row, the stage-0 cost term, and
the stage-0 path constraints. Multipliers follow constraint emission order:
dynamics stages 0..N-1, path constraints stages 0..N-1, terminal rows last.

Path rows that depend on the state alone are dropped at stage 0 (they would
be constants there, with zero gradient in w). The OcpSpec declares those
rows via `state_only_rows`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatchError, NonFiniteEvaluationError
from .nlp import ParametricNLP, PrimalDualPoint


@dataclass(frozen=True)
class OcpSpec:
    """Horizon, costs, dynamics and constraints of the control problem.

    Callback signatures:
        dynamics(x, u) -> (n_x,)                 discrete step map
        dynamics_jac(x, u) -> (A, B)             (n_x,n_x), (n_x,n_u)
        dynamics_hess_lam(x, u, lam) -> (n_x+n_u, n_x+n_u)
            Hessian of lam . dynamics(x, u); may be None for linear maps.
        stage_cost(x, u) -> float                must satisfy l(0,0) = 0
        stage_cost_grad(x, u) -> (gx, gu)
        stage_cost_hess(x, u) -> (n_x+n_u, n_x+n_u), ordered (x, u)
        terminal_cost(x) -> float
        terminal_cost_grad(x) -> (n_x,)
        terminal_cost_hess(x) -> (n_x, n_x)
        path(x, u) -> (n_c,)                     rows <= 0 feasible
        path_jac(x, u) -> (Jx, Ju)               (n_c,n_x), (n_c,n_u)
        path_hess_v(x, u, v) -> (n_x+n_u, n_x+n_u) or None for affine rows
        terminal_constraint(x) -> (n_cf,)
        terminal_constraint_jac(x) -> (n_cf, n_x)
        terminal_constraint_hess_v(x, v) -> (n_x, n_x) or None

    state_only_rows lists the `path` rows that do not involve u; those are
    dropped at stage 0 where the state is the (constant) parameter.
    """

    N: int
    n_x: int
    n_u: int
    n_c: int
    n_cf: int
    dynamics: Callable
    dynamics_jac: Callable
    stage_cost: Callable
    stage_cost_grad: Callable
    stage_cost_hess: Callable
    terminal_cost: Callable
    terminal_cost_grad: Callable
    terminal_cost_hess: Callable
    dynamics_hess_lam: Optional[Callable] = None
    path: Optional[Callable] = None
    path_jac: Optional[Callable] = None
    path_hess_v: Optional[Callable] = None
    terminal_constraint: Optional[Callable] = None
    terminal_constraint_jac: Optional[Callable] = None
    terminal_constraint_hess_v: Optional[Callable] = None
    state_only_rows: tuple[int, ...] = ()

    def __post_init__(self):
        if self.N < 1:
            raise DimensionMismatchError("horizon N must be >= 1")
        if self.n_c and (self.path is None or self.path_jac is None):
            raise DimensionMismatchError("n_c > 0 requires path and path_jac")
        if self.n_cf and (self.terminal_constraint is None
                          or self.terminal_constraint_jac is None):
            raise DimensionMismatchError(
                "n_cf > 0 requires terminal_constraint and terminal_constraint_jac")
        if any(r < 0 or r >= self.n_c for r in self.state_only_rows):
            raise DimensionMismatchError("state_only_rows out of range")
        l0 = float(self.stage_cost(np.zeros(self.n_x), np.zeros(self.n_u)))
        if abs(l0) > 1e-12:
            raise DimensionMismatchError(
                f"stage cost must vanish at the origin, got l(0,0) = {l0:g}")


@dataclass(frozen=True)
class VariableLayout:
    """Index bookkeeping for the packed decision/multiplier vectors."""

    N: int
    n_x: int
    n_u: int
    n_c: int
    n_cf: int
    state_only_rows: tuple[int, ...] = ()
    stage0_kept_rows: np.ndarray = field(init=False)

    def __post_init__(self):
        kept = np.array(
            [r for r in range(self.n_c) if r not in set(self.state_only_rows)],
            dtype=int)
        object.__setattr__(self, "stage0_kept_rows", kept)

    @property
    def n(self) -> int:
        return self.N * (self.n_x + self.n_u)

    @property
    def m(self) -> int:
        return self.N * self.n_x

    @property
    def q(self) -> int:
        return len(self.stage0_kept_rows) + (self.N - 1) * self.n_c + self.n_cf

    @property
    def n_z(self) -> int:
        return self.n + self.m + self.q

    def xi_slice(self, i: int) -> slice:
        """Slice of w holding state xi_i, for i = 1..N."""
        if not 1 <= i <= self.N:
            raise IndexError(f"state index {i} outside 1..{self.N}")
        return slice((i - 1) * self.n_x, i * self.n_x)

    def u_slice(self, i: int) -> slice:
        """Slice of w holding input u_i, for i = 0..N-1."""
        if not 0 <= i < self.N:
            raise IndexError(f"input index {i} outside 0..{self.N - 1}")
        base = self.N * self.n_x
        return slice(base + i * self.n_u, base + (i + 1) * self.n_u)

    def eq_slice(self, i: int) -> slice:
        """Rows of g for the stage-i dynamics defect, i = 0..N-1."""
        return slice(i * self.n_x, (i + 1) * self.n_x)

    def path_slice(self, i: int) -> slice:
        """Rows of h for the stage-i path block, i = 1..N-1 (full rows).

        Stage 0 occupies rows [0, len(stage0_kept_rows)) with only the kept
        rows, in their original order.
        """
        if not 1 <= i < self.N:
            raise IndexError(f"path stage {i} outside 1..{self.N - 1}")
        base = len(self.stage0_kept_rows)
        return slice(base + (i - 1) * self.n_c, base + i * self.n_c)

    @property
    def terminal_slice(self) -> slice:
        return slice(self.q - self.n_cf, self.q)


def _finite(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEvaluationError(f"{name} evaluated to a non-finite value")
    return arr


def transcribe(ocp: OcpSpec) -> tuple[ParametricNLP, VariableLayout]:
    """Build the parametric NLP for the given OCP (parameter = plant state)."""
    lay = VariableLayout(ocp.N, ocp.n_x, ocp.n_u, ocp.n_c, ocp.n_cf,
                         ocp.state_only_rows)
    N, n_x, n_u = ocp.N, ocp.n_x, ocp.n_u
    n, m, q = lay.n, lay.m, lay.q
    kept0 = lay.stage0_kept_rows
    nk0 = len(kept0)

    def stage_points(w, p):
        xs = [p] + [w[lay.xi_slice(i)] for i in range(1, N + 1)]
        us = [w[lay.u_slice(i)] for i in range(N)]
        return xs, us

    def f(w, p):
        xs, us = stage_points(w, p)
        total = sum(float(ocp.stage_cost(x, u)) for x, u in zip(xs[:N], us))
        return total + float(ocp.terminal_cost(xs[N]))

    def grad_f(w, p):
        xs, us = stage_points(w, p)
        out = np.zeros(n)
        for i in range(N):
            gx, gu = ocp.stage_cost_grad(xs[i], us[i])
            if i >= 1:
                out[lay.xi_slice(i)] += np.asarray(gx, dtype=float)
            out[lay.u_slice(i)] += np.asarray(gu, dtype=float)
        out[lay.xi_slice(N)] += np.asarray(ocp.terminal_cost_grad(xs[N]), dtype=float)
        return out

    def g(w, p):
        xs, us = stage_points(w, p)
        out = np.zeros(m)
        for i in range(N):
            out[lay.eq_slice(i)] = xs[i + 1] - _finite("dynamics", ocp.dynamics(xs[i], us[i]))
        return out

    def jac_g(w, p):
        xs, us = stage_points(w, p)
        out = np.zeros((m, n))
        eye = np.eye(n_x)
        for i in range(N):
            A, B = ocp.dynamics_jac(xs[i], us[i])
            rows = lay.eq_slice(i)
            out[rows, lay.xi_slice(i + 1)] = eye
            if i >= 1:
                out[rows, lay.xi_slice(i)] = -np.asarray(A, dtype=float)
            out[rows, lay.u_slice(i)] = -np.asarray(B, dtype=float)
        return out

    def h(w, p):
        xs, us = stage_points(w, p)
        out = np.zeros(q)
        if ocp.n_c:
            out[:nk0] = _finite("path", ocp.path(xs[0], us[0]))[kept0]
            for i in range(1, N):
                out[lay.path_slice(i)] = _finite("path", ocp.path(xs[i], us[i]))
        if ocp.n_cf:
            out[lay.terminal_slice] = _finite(
                "terminal_constraint", ocp.terminal_constraint(xs[N]))
        return out

    def jac_h(w, p):
        xs, us = stage_points(w, p)
        out = np.zeros((q, n))
        if ocp.n_c:
            _, Ju0 = ocp.path_jac(xs[0], us[0])
            out[:nk0, lay.u_slice(0)] = np.asarray(Ju0, dtype=float)[kept0]
            for i in range(1, N):
                Jx, Ju = ocp.path_jac(xs[i], us[i])
                rows = lay.path_slice(i)
                out[rows, lay.xi_slice(i)] = np.asarray(Jx, dtype=float)
                out[rows, lay.u_slice(i)] = np.asarray(Ju, dtype=float)
        if ocp.n_cf:
            out[lay.terminal_slice, lay.xi_slice(N)] = np.asarray(
                ocp.terminal_constraint_jac(xs[N]), dtype=float)
        return out

    def _stage_multipliers(v, i):
        """Path multipliers of stage i expanded to length n_c."""
        if i == 0:
            full = np.zeros(ocp.n_c)
            full[kept0] = v[:nk0]
            return full
        return v[lay.path_slice(i)]

    def hess_lag(w, lam, v, p):
        xs, us = stage_points(w, p)
        out = np.zeros((n, n))
        for i in range(N):
            xi_sl = lay.xi_slice(i) if i >= 1 else None
            u_sl = lay.u_slice(i)
            blk = np.asarray(ocp.stage_cost_hess(xs[i], us[i]), dtype=float).copy()
            if ocp.dynamics_hess_lam is not None:
                lam_i = lam[lay.eq_slice(i)]
                blk += -np.asarray(
                    ocp.dynamics_hess_lam(xs[i], us[i], lam_i), dtype=float)
            if ocp.n_c and ocp.path_hess_v is not None:
                v_i = _stage_multipliers(v, i)
                ph = ocp.path_hess_v(xs[i], us[i], v_i)
                if ph is not None:
                    blk += np.asarray(ph, dtype=float)
            if xi_sl is not None:
                out[xi_sl, xi_sl] += blk[:n_x, :n_x]
                out[xi_sl, u_sl] += blk[:n_x, n_x:]
                out[u_sl, xi_sl] += blk[n_x:, :n_x]
            out[u_sl, u_sl] += blk[n_x:, n_x:]
        xN_sl = lay.xi_slice(N)
        out[xN_sl, xN_sl] += np.asarray(ocp.terminal_cost_hess(xs[N]), dtype=float)
        if ocp.n_cf and ocp.terminal_constraint_hess_v is not None:
            th = ocp.terminal_constraint_hess_v(xs[N], v[lay.terminal_slice])
            if th is not None:
                out[xN_sl, xN_sl] += np.asarray(th, dtype=float)
        return out

    def hess_lag_p(w, lam, v, p):
        # p enters stage 0 only; the only w-rows whose gradient depends on
        # p are the u_0 rows (and none at all when every stage-0 term is
        # separable in (x, u)).
        xs, us = stage_points(w, p)
        out = np.zeros((n, n_x))
        u0 = lay.u_slice(0)
        blk = np.asarray(ocp.stage_cost_hess(xs[0], us[0]), dtype=float).copy()
        if ocp.dynamics_hess_lam is not None:
            blk += -np.asarray(
                ocp.dynamics_hess_lam(xs[0], us[0], lam[lay.eq_slice(0)]), dtype=float)
        if ocp.n_c and ocp.path_hess_v is not None:
            ph = ocp.path_hess_v(xs[0], us[0], _stage_multipliers(v, 0))
            if ph is not None:
                blk += np.asarray(ph, dtype=float)
        out[u0, :] = blk[n_x:, :n_x]
        return out

    def jac_g_p(w, p):
        xs, us = stage_points(w, p)
        out = np.zeros((m, n_x))
        A0, _ = ocp.dynamics_jac(xs[0], us[0])
        out[lay.eq_slice(0), :] = -np.asarray(A0, dtype=float)
        return out

    def jac_h_p(w, p):
        xs, us = stage_points(w, p)
        out = np.zeros((q, n_x))
        if nk0:
            Jx0, _ = ocp.path_jac(xs[0], us[0])
            out[:nk0, :] = np.asarray(Jx0, dtype=float)[kept0]
        return out

    nlp = ParametricNLP(
        n=n, m=m, q=q, n_p=n_x,
        f=f, g=g, h=h, grad_f=grad_f, jac_g=jac_g, jac_h=jac_h,
        hess_lag=hess_lag, hess_lag_p=hess_lag_p,
        jac_g_p=jac_g_p, jac_h_p=jac_h_p,
    )
    return nlp, lay


def extract_control(layout: VariableLayout, z: PrimalDualPoint) -> np.ndarray:
    """First planned input u_0; a fixed linear selection from z."""
    if z.w.shape != (layout.n,):
        raise DimensionMismatchError(
            f"primal block has shape {z.w.shape}, layout expects ({layout.n},)")
    return z.w[layout.u_slice(0)].copy()


def plan_cost(ocp: OcpSpec, layout: VariableLayout, z: PrimalDualPoint, p) -> float:
    """Objective value at the primal part of z with the initial state p."""
    p = np.asarray(p, dtype=float)
    w = z.w
    xs = [p] + [w[layout.xi_slice(i)] for i in range(1, layout.N + 1)]
    us = [w[layout.u_slice(i)] for i in range(layout.N)]
    total = sum(float(ocp.stage_cost(x, u)) for x, u in zip(xs[:layout.N], us))
    total += float(ocp.terminal_cost(xs[layout.N]))
    if not np.isfinite(total):
        raise NonFiniteEvaluationError("plan cost evaluated to a non-finite value")
    return total
