"""Rigid-body attitude benchmark: Euler-equation dynamics with 3-2-1 Euler
angles, quadratic weights, a Riccati terminal cost, and an ellipsoidal
terminal set.

State x = (omega, theta): body angular rates (rad/s) and Euler angles
(rad). Inputs are external torques (N m). All angles are radians
internally; degree conversion is a front-end concern.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GimbalLockError, NoConvergenceError
from .numerics import solve_dare
from .simulation import PlantModel, euler_discretize
from .transcription import OcpSpec

# Fixed-point Riccati updates stall near eps * ||P|| (~2e-12 at this
# problem's P scale of 1.6e4), so the terminal build cannot use the 1e-12
# package default; 1e-9 is still ~6e-14 relative.
DARE_TOL = 1e-9

TERMINAL_DECREASE_TOL = 1e-6
TERMINAL_MC_SAMPLES = 1000
TERMINAL_MC_SEED = 20260809


@dataclass(frozen=True)
class SpacecraftParams:
    """Inertia, weights, bounds and the benchmark initial state."""

    inertia_diag: tuple[float, float, float] = (918.0, 920.0, 1365.0)
    tau: float = 3.0
    N: int = 30
    state_weight: np.ndarray = field(
        default_factory=lambda: 50.0 * np.diag([10.0, 10.0, 10.0, 1.0, 1.0, 1.0]))
    input_weight: np.ndarray = field(default_factory=lambda: 0.1 * np.eye(3))
    omega_bound: float = 0.02
    u_bound: float = 2.0
    x0: np.ndarray = field(default_factory=lambda: np.array(
        [0.0, 0.0, 0.0, np.deg2rad(15.0), np.deg2rad(30.0), np.deg2rad(-20.0)]))

    def __post_init__(self):
        if any(j <= 0 for j in self.inertia_diag):
            raise ValueError("inertia entries must be positive")
        if self.omega_bound <= 0 or self.u_bound <= 0:
            raise ValueError("bounds must be positive")

    @property
    def inertia(self) -> np.ndarray:
        return np.diag(self.inertia_diag)

    @property
    def inertia_inv(self) -> np.ndarray:
        return np.diag([1.0 / j for j in self.inertia_diag])


@dataclass(frozen=True)
class TerminalSet:
    """Ellipsoidal terminal region {x : x'Px <= alpha}, exposed as the
    single smooth inequality c_N(x) = x'Px - alpha <= 0."""

    P: np.ndarray
    alpha: float

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return float(x @ self.P @ x) <= self.alpha

    def boundary_value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.P @ x) - self.alpha


def _euler_rate_matrix(theta):
    s1, c1 = np.sin(theta[0]), np.cos(theta[0])
    c2 = np.cos(theta[1])
    if abs(c2) <= 1e-9:
        raise GimbalLockError(
            f"Euler-rate map singular at pitch {theta[1]:.6f} rad")
    t2, sec2 = np.tan(theta[1]), 1.0 / c2
    return np.array([
        [1.0, s1 * t2, c1 * t2],
        [0.0, c1, -s1],
        [0.0, s1 * sec2, c1 * sec2],
    ])


def attitude_field(params: SpacecraftParams, x, u) -> np.ndarray:
    """Continuous-time field: omega-dot from the Euler equations, theta-dot
    through the 3-2-1 Euler-rate matrix."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    omega, theta = x[:3], x[3:]
    J = params.inertia
    omega_dot = params.inertia_inv @ (-np.cross(omega, J @ omega) + u)
    theta_dot = _euler_rate_matrix(theta) @ omega
    return np.concatenate([omega_dot, theta_dot])


def _skew(a):
    return np.array([
        [0.0, -a[2], a[1]],
        [a[2], 0.0, -a[0]],
        [-a[1], a[0], 0.0],
    ])


def attitude_field_jac(params: SpacecraftParams, x, u):
    """Analytic Jacobians (d f_c/dx, d f_c/du) of the continuous field."""
    x = np.asarray(x, dtype=float)
    omega, theta = x[:3], x[3:]
    J = params.inertia
    Jinv = params.inertia_inv
    S = _euler_rate_matrix(theta)
    s1, c1 = np.sin(theta[0]), np.cos(theta[0])
    t2, sec2 = np.tan(theta[1]), 1.0 / np.cos(theta[1])

    A = np.zeros((6, 6))
    A[:3, :3] = Jinv @ (_skew(J @ omega) - _skew(omega) @ J)
    A[3:, :3] = S
    dS_dth1 = np.array([
        [0.0, c1 * t2, -s1 * t2],
        [0.0, -s1, -c1],
        [0.0, c1 * sec2, -s1 * sec2],
    ])
    dS_dth2 = np.array([
        [0.0, s1 * sec2 ** 2, c1 * sec2 ** 2],
        [0.0, 0.0, 0.0],
        [0.0, s1 * sec2 * t2, c1 * sec2 * t2],
    ])
    A[3:, 3] = dS_dth1 @ omega
    A[3:, 4] = dS_dth2 @ omega
    B = np.zeros((6, 3))
    B[:3, :] = Jinv
    return A, B


def discrete_dynamics(params: SpacecraftParams, x, u) -> np.ndarray:
    """Explicit-Euler discretization of the attitude field."""
    x = np.asarray(x, dtype=float)
    return x + params.tau * attitude_field(params, x, u)


def discrete_dynamics_jac(params: SpacecraftParams, x, u):
    A, B = attitude_field_jac(params, x, u)
    return np.eye(6) + params.tau * A, params.tau * B


def discrete_dynamics_hess_lam(params: SpacecraftParams, x, u, lam) -> np.ndarray:
    """Hessian in (x, u) of lam . f_d(x, u); input blocks vanish because
    torques enter linearly."""
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    omega, theta = x[:3], x[3:]
    lam_omega, lam_theta = lam[:3], lam[3:]
    J1, J2, J3 = params.inertia_diag
    a = params.inertia_inv.T @ lam_omega

    H = np.zeros((9, 9))
    # Hessian of -a . (omega x J omega): a constant-coefficient quadratic form.
    H[:3, :3] = -np.array([
        [0.0, (J2 - J1) * a[2], -(J3 - J1) * a[1]],
        [(J2 - J1) * a[2], 0.0, (J3 - J2) * a[0]],
        [-(J3 - J1) * a[1], (J3 - J2) * a[0], 0.0],
    ])

    # lam_theta . S(theta) omega = omega_1 l1 + omega_2 A2(theta) + omega_3 A3(theta)
    s1, c1 = np.sin(theta[0]), np.cos(theta[0])
    t2, sec2 = np.tan(theta[1]), 1.0 / np.cos(theta[1])
    l1, l2, l3 = lam_theta
    A2 = l1 * s1 * t2 + l2 * c1 + l3 * s1 * sec2
    A3 = l1 * c1 * t2 - l2 * s1 + l3 * c1 * sec2
    dA2_d2 = l1 * s1 * sec2 ** 2 + l3 * s1 * sec2 * t2
    dA3_d2 = l1 * c1 * sec2 ** 2 + l3 * c1 * sec2 * t2
    cross = np.zeros((3, 3))  # theta rows, omega cols
    cross[0, 1], cross[0, 2] = A3, -A2
    cross[1, 1], cross[1, 2] = dA2_d2, dA3_d2
    H[3:6, :3] = cross
    H[:3, 3:6] = cross.T
    d2A2_d22 = 2 * l1 * s1 * sec2 ** 2 * t2 + l3 * s1 * sec2 * (t2 ** 2 + sec2 ** 2)
    d2A3_d22 = 2 * l1 * c1 * sec2 ** 2 * t2 + l3 * c1 * sec2 * (t2 ** 2 + sec2 ** 2)
    tt = np.zeros((3, 3))
    tt[0, 0] = omega[1] * (-A2) + omega[2] * (-A3)
    tt[0, 1] = tt[1, 0] = omega[1] * dA3_d2 + omega[2] * (-dA2_d2)
    tt[1, 1] = omega[1] * d2A2_d22 + omega[2] * d2A3_d22
    H[3:6, 3:6] = tt
    return params.tau * H


def linearize_origin(params: SpacecraftParams):
    """Jacobians of the Euler-discretized map at (0, 0)."""
    return discrete_dynamics_jac(params, np.zeros(6), np.zeros(3))


def _sample_in_ellipsoid(P_chol, alpha, rng):
    s = rng.normal(size=P_chol.shape[0])
    s /= np.linalg.norm(s)
    radius = rng.uniform() ** (1.0 / P_chol.shape[0])
    return np.sqrt(alpha) * radius * np.linalg.solve(P_chol.T, s)


def _terminal_mc_ok(params, P, K, alpha, n_samples=TERMINAL_MC_SAMPLES,
                    seed=TERMINAL_MC_SEED):
    """Monte-Carlo admissibility, invariance and cost-decrease under the
    Riccati feedback on the nonlinear discrete model."""
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(P)
    Q, R = params.state_weight, params.input_weight
    for _ in range(n_samples):
        x = _sample_in_ellipsoid(chol, alpha, rng)
        u = -K @ x
        if np.any(np.abs(u) > params.u_bound) or np.any(np.abs(x[:3]) > params.omega_bound):
            return False
        x_next = discrete_dynamics(params, x, u)
        decrease = (x_next @ P @ x_next - x @ P @ x
                    + x @ Q @ x + u @ R @ u)
        if decrease > TERMINAL_DECREASE_TOL or x_next @ P @ x_next > alpha:
            return False
    return True


def build_terminal_ingredients(params: SpacecraftParams):
    """Riccati cost-to-go P, gain K, and the ellipsoid level alpha.

    alpha starts from the analytic admissibility limit (largest level at
    which |Kx| <= u_bound and |omega| <= omega_bound hold on the whole
    ellipsoid; max of c'x over x'Px <= a is sqrt(a c'P^-1 c)), scaled by
    0.99, then is halved until the Monte-Carlo invariance and one-step
    decrease checks pass on the nonlinear model.
    """
    A, B = linearize_origin(params)
    ric = solve_dare(A, B, params.state_weight, params.input_weight, tol=DARE_TOL)
    P, K = ric.P, ric.K
    P_inv = np.linalg.inv(P)
    levels = [params.omega_bound ** 2 / P_inv[i, i] for i in range(3)]
    levels += [params.u_bound ** 2 / float(K[j] @ P_inv @ K[j]) for j in range(3)]
    alpha = 0.99 * min(levels)
    for _ in range(60):
        if _terminal_mc_ok(params, P, K, alpha):
            break
        alpha *= 0.5
    else:
        raise NoConvergenceError(
            "could not find an ellipsoid level passing the invariance checks")
    return P, K, TerminalSet(P=P, alpha=alpha)


def build_spacecraft_ocp(params: SpacecraftParams, ts: TerminalSet) -> OcpSpec:
    """Quadratic-cost OCP with box bounds on rates and torques and the
    ellipsoidal terminal inequality.

    Path rows: omega - b, -omega - b (state-only, dropped at stage 0 by the
    transcription), then u - ub, -u - ub.
    """
    Q, R = params.state_weight, params.input_weight
    P, alpha = ts.P, ts.alpha
    wb, ub = params.omega_bound, params.u_bound
    eye3 = np.eye(3)
    path_jx = np.zeros((12, 6))
    path_jx[:3, :3] = eye3
    path_jx[3:6, :3] = -eye3
    path_ju = np.zeros((12, 3))
    path_ju[6:9] = eye3
    path_ju[9:12] = -eye3
    cost_hess = np.zeros((9, 9))
    cost_hess[:6, :6] = 2.0 * Q
    cost_hess[6:, 6:] = 2.0 * R

    def path(x, u):
        om = np.asarray(x, dtype=float)[:3]
        u = np.asarray(u, dtype=float)
        return np.concatenate([om - wb, -om - wb, u - ub, -u - ub])

    ocp = OcpSpec(
        N=params.N, n_x=6, n_u=3, n_c=12, n_cf=1,
        dynamics=lambda x, u: discrete_dynamics(params, x, u),
        dynamics_jac=lambda x, u: discrete_dynamics_jac(params, x, u),
        dynamics_hess_lam=lambda x, u, lam: discrete_dynamics_hess_lam(params, x, u, lam),
        stage_cost=lambda x, u: float(x @ Q @ x + u @ R @ u),
        stage_cost_grad=lambda x, u: (2.0 * Q @ x, 2.0 * R @ u),
        stage_cost_hess=lambda x, u: cost_hess,
        terminal_cost=lambda x: float(x @ P @ x),
        terminal_cost_grad=lambda x: 2.0 * P @ x,
        terminal_cost_hess=lambda x: 2.0 * P,
        path=path,
        path_jac=lambda x, u: (path_jx, path_ju),
        path_hess_v=None,
        terminal_constraint=lambda x: np.array([float(x @ P @ x) - alpha]),
        terminal_constraint_jac=lambda x: (2.0 * P @ x).reshape(1, 6),
        terminal_constraint_hess_v=lambda x, v: 2.0 * float(v[0]) * P,
        state_only_rows=(0, 1, 2, 3, 4, 5),
    )
    return ocp


def build_plant(params: SpacecraftParams) -> PlantModel:
    """Euler-discretized plant matching the prediction model."""
    return euler_discretize(lambda x, u: attitude_field(params, x, u),
                            params.tau, n_x=6, n_u=3)
