"""Named benchmark problems for tests, demos and the command line.

- tracking_qp: scalar projection problem min 1/2 (w - p)^2 s.t. w >= 1,
  with a known piecewise-affine solution map. Exercises the activation
  kink of the complementarity system.
- double_integrator: small linear OCP with velocity and input bounds.
- spacecraft: the attitude benchmark from `spacecraft`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError
from .nlp import ParametricNLP
from .numerics import solve_dare
from .simulation import PlantModel
from .spacecraft import (SpacecraftParams, build_plant, build_spacecraft_ocp,
                         build_terminal_ingredients)
from .transcription import OcpSpec, VariableLayout, transcribe


@dataclass(frozen=True)
class ProblemBundle:
    """Everything the CLI needs to run one named problem."""

    name: str
    nlp: ParametricNLP
    default_x0: np.ndarray
    layout: Optional[VariableLayout] = None
    ocp: Optional[OcpSpec] = None
    plant: Optional[PlantModel] = None
    analytic_solution: Optional[Callable] = None
    fd_step: Optional[float] = None

    @property
    def simulatable(self) -> bool:
        return self.plant is not None and self.layout is not None


def tracking_qp() -> ProblemBundle:
    """min 1/2 (w - p)^2 s.t. w >= 1; solution w*(p) = max(p, 1),
    multiplier v*(p) = max(0, 1 - p)."""
    one = np.ones((1, 1))

    nlp = ParametricNLP(
        n=1, m=0, q=1, n_p=1,
        f=lambda w, p: 0.5 * float((w[0] - p[0]) ** 2),
        g=lambda w, p: np.zeros(0),
        h=lambda w, p: np.array([1.0 - w[0]]),
        grad_f=lambda w, p: np.array([w[0] - p[0]]),
        jac_g=lambda w, p: np.zeros((0, 1)),
        jac_h=lambda w, p: -one,
        hess_lag=lambda w, lam, v, p: one,
        hess_lag_p=lambda w, lam, v, p: -one,
        jac_g_p=lambda w, p: np.zeros((0, 1)),
        jac_h_p=lambda w, p: np.zeros((1, 1)),
    )

    def analytic(p):
        p0 = float(np.atleast_1d(p)[0])
        return np.array([max(p0, 1.0)]), np.array([max(0.0, 1.0 - p0)])

    return ProblemBundle(name="tracking_qp", nlp=nlp,
                         default_x0=np.array([2.0]),
                         analytic_solution=analytic)


def double_integrator(N: int = 15, tau: float = 0.2) -> ProblemBundle:
    """Euler-discretized double integrator with |velocity| <= 0.5 and
    |u| <= 1, quadratic weights and a Riccati terminal cost/set."""
    A = np.array([[1.0, tau], [0.0, 1.0]])
    B = np.array([[0.0], [tau]])
    Q = np.eye(2)
    R = np.array([[0.1]])
    v_bound, u_bound = 0.5, 1.0
    ric = solve_dare(A, B, Q, R)
    P, K = ric.P, ric.K
    P_inv = np.linalg.inv(P)
    levels = [v_bound ** 2 / P_inv[1, 1],
              u_bound ** 2 / float(K[0] @ P_inv @ K[0])]
    alpha = 0.99 * min(levels)

    path_jx = np.array([[0.0, 1.0], [0.0, -1.0], [0.0, 0.0], [0.0, 0.0]])
    path_ju = np.array([[0.0], [0.0], [1.0], [-1.0]])
    cost_hess = np.zeros((3, 3))
    cost_hess[:2, :2] = 2.0 * Q
    cost_hess[2:, 2:] = 2.0 * R

    ocp = OcpSpec(
        N=N, n_x=2, n_u=1, n_c=4, n_cf=1,
        dynamics=lambda x, u: A @ x + B @ u,
        dynamics_jac=lambda x, u: (A, B),
        dynamics_hess_lam=None,
        stage_cost=lambda x, u: float(x @ Q @ x + u @ R @ u),
        stage_cost_grad=lambda x, u: (2.0 * Q @ x, 2.0 * R @ u),
        stage_cost_hess=lambda x, u: cost_hess,
        terminal_cost=lambda x: float(x @ P @ x),
        terminal_cost_grad=lambda x: 2.0 * P @ x,
        terminal_cost_hess=lambda x: 2.0 * P,
        path=lambda x, u: np.array([x[1] - v_bound, -x[1] - v_bound,
                                    u[0] - u_bound, -u[0] - u_bound]),
        path_jac=lambda x, u: (path_jx, path_ju),
        terminal_constraint=lambda x: np.array([float(x @ P @ x) - alpha]),
        terminal_constraint_jac=lambda x: (2.0 * P @ x).reshape(1, 2),
        terminal_constraint_hess_v=lambda x, v: 2.0 * float(v[0]) * P,
        state_only_rows=(0, 1),
    )
    nlp, layout = transcribe(ocp)
    plant = PlantModel(n_x=2, n_u=1,
                       f_d=lambda x, u: A @ np.asarray(x, float) + B @ np.asarray(u, float),
                       tau=tau)
    return ProblemBundle(name="double_integrator", nlp=nlp, layout=layout,
                         ocp=ocp, plant=plant,
                         default_x0=np.array([1.0, 0.0]))


def spacecraft(params: Optional[SpacecraftParams] = None) -> ProblemBundle:
    params = params or SpacecraftParams()
    _, _, ts = build_terminal_ingredients(params)
    ocp = build_spacecraft_ocp(params, ts)
    nlp, layout = transcribe(ocp)
    return ProblemBundle(name="spacecraft", nlp=nlp, layout=layout, ocp=ocp,
                         plant=build_plant(params), default_x0=params.x0.copy(),
                         fd_step=1e-4)


_REGISTRY = {
    "tracking_qp": tracking_qp,
    "double_integrator": double_integrator,
    "spacecraft": spacecraft,
}


def get_problem(name: str) -> ProblemBundle:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ConfigError(
            f"unknown problem '{name}'; available: {sorted(_REGISTRY)}",
            field="problem") from None
    return factory()
