"""Parametric NLP representation and its semismooth KKT system.

A problem

    min_w f(w, p)   s.t.  g(w, p) = 0,  h(w, p) <= 0

is tracked through the root-finding map

    F(z, p) = [ grad_w L(w, lam, v, p);  g(w, p);  psi(-h_i(w, p), v_i) ]

where z = (w, lam, v), L = f + lam'g + v'h, and psi is the
Fischer-Burmeister complementarity function. F is semismooth; off the set
where (h_i, v_i) = 0 it is smooth and this module's generalized Jacobians
coincide with the classical ones.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatchError, NonFiniteEvaluationError

SQRT_HALF = 2.0 ** -0.5

# Below this Euclidean norm a pair (h_i, v_i) counts as the kink point and
# the fixed tie-break direction is used instead of the smooth formula.
TIE_THRESHOLD = 1e-14


@dataclass(frozen=True)
class ParametricNLP:
    """Dimensions plus derivative callbacks defining the parametric program.

    Callback signatures (all arrays are 1-D/2-D numpy, float):
        f(w, p) -> float
        g(w, p) -> (m,)          h(w, p) -> (q,)
        grad_f(w, p) -> (n,)
        jac_g(w, p) -> (m, n)    jac_h(w, p) -> (q, n)
        hess_lag(w, lam, v, p) -> (n, n)      second derivative of L in w
        hess_lag_p(w, lam, v, p) -> (n, n_p)  d/dp of grad_w L
        jac_g_p(w, p) -> (m, n_p)
        jac_h_p(w, p) -> (q, n_p)

    Instances are immutable and safe to share across threads; evaluation
    allocates its own workspace.
    """

    n: int
    m: int
    q: int
    n_p: int
    f: Callable
    g: Callable
    h: Callable
    grad_f: Callable
    jac_g: Callable
    jac_h: Callable
    hess_lag: Callable
    hess_lag_p: Callable
    jac_g_p: Callable
    jac_h_p: Callable

    @property
    def n_z(self) -> int:
        return self.n + self.m + self.q


@dataclass(frozen=True)
class PrimalDualPoint:
    """z = (w, lam, v): primal iterate plus equality/inequality multipliers."""

    w: np.ndarray
    lam: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))
        object.__setattr__(self, "lam", np.asarray(self.lam, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))

    @classmethod
    def zeros(cls, nlp: ParametricNLP) -> "PrimalDualPoint":
        return cls(np.zeros(nlp.n), np.zeros(nlp.m), np.zeros(nlp.q))

    @classmethod
    def from_vector(cls, vec, nlp: ParametricNLP) -> "PrimalDualPoint":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (nlp.n_z,):
            raise DimensionMismatchError(
                f"expected a vector of length {nlp.n_z}, got shape {vec.shape}"
            )
        n, m = nlp.n, nlp.m
        return cls(vec[:n].copy(), vec[n:n + m].copy(), vec[n + m:].copy())

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.w, self.lam, self.v])

    def check_dims(self, nlp: ParametricNLP) -> None:
        if self.w.shape != (nlp.n,) or self.lam.shape != (nlp.m,) or self.v.shape != (nlp.q,):
            raise DimensionMismatchError(
                f"point has shapes (w={self.w.shape}, lam={self.lam.shape}, "
                f"v={self.v.shape}); problem expects ({nlp.n},), ({nlp.m},), ({nlp.q},)"
            )


@dataclass(frozen=True)
class KktResidual:
    """F(z, p) split into its three blocks, plus the Euclidean norm."""

    stationarity: np.ndarray
    equality: np.ndarray
    complementarity: np.ndarray
    norm2: float

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.stationarity, self.equality, self.complementarity])


def fb(a: float, b: float) -> float:
    """Fischer-Burmeister function a + b - sqrt(a^2 + b^2).

    Zero exactly when a >= 0, b >= 0 and a*b = 0.
    """
    return a + b - np.hypot(a, b)


def fb_pair_derivative(a, b, tie_a: float = SQRT_HALF, tie_b: float = SQRT_HALF):
    """Row coefficients (nu, mu) of the complementarity block.

    The first argument is the constraint value h_i, the second the
    multiplier v_i. Off the kink: nu = 1 + h/r, mu = 1 - v/r with
    r = ||(h, v)||. At the kink the direction (tie_a, tie_b), which must
    have unit norm, selects the generalized-derivative element:
    (1 - tie_a, 1 - tie_b).
    """
    r = np.hypot(a, b)
    if r <= TIE_THRESHOLD:
        return 1.0 - tie_a, 1.0 - tie_b
    return 1.0 + a / r, 1.0 - b / r


def _fb_coefficients(h, v, tie_a=SQRT_HALF, tie_b=SQRT_HALF):
    """Vectorized (nu, mu) over all inequality rows."""
    r = np.hypot(h, v)
    tie = r <= TIE_THRESHOLD
    safe = np.where(tie, 1.0, r)
    nu = np.where(tie, 1.0 - tie_a, 1.0 + h / safe)
    mu = np.where(tie, 1.0 - tie_b, 1.0 - v / safe)
    return nu, mu


@dataclass(frozen=True)
class Evaluation:
    """One-pass evaluation of F and its generalized Jacobians at (z, p).

    The complementarity coefficients nu are computed once, so the jac_z and
    jac_p blocks share the exact same scaling matrix C = diag(nu).
    """

    residual: KktResidual
    jac_z: Optional[np.ndarray]
    jac_p: Optional[np.ndarray]
    nu: np.ndarray
    mu: np.ndarray


def _check_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEvaluationError(f"callback '{name}' returned a non-finite value")
    return arr


def evaluate(
    nlp: ParametricNLP,
    z: PrimalDualPoint,
    p,
    want_jac_z: bool = True,
    want_jac_p: bool = False,
    delta: float = 0.0,
) -> Evaluation:
    """Evaluate the residual and, optionally, both generalized Jacobians.

    `delta` adds a uniform regularization delta*I to the primal Hessian
    block of jac_z (rescue knob for numerically singular solves; zero by
    default).
    """
    z.check_dims(nlp)
    p = np.asarray(p, dtype=float)
    if p.shape != (nlp.n_p,):
        raise DimensionMismatchError(
            f"parameter has shape {p.shape}, expected ({nlp.n_p},)"
        )
    n, m, q = nlp.n, nlp.m, nlp.q
    w, lam, v = z.w, z.lam, z.v

    grad_f = _check_finite("grad_f", np.asarray(nlp.grad_f(w, p), dtype=float))
    g_val = _check_finite("g", np.asarray(nlp.g(w, p), dtype=float)) if m else np.zeros(0)
    h_val = _check_finite("h", np.asarray(nlp.h(w, p), dtype=float)) if q else np.zeros(0)
    jac_g = _check_finite("jac_g", np.asarray(nlp.jac_g(w, p), dtype=float)) if m else np.zeros((0, n))
    jac_h = _check_finite("jac_h", np.asarray(nlp.jac_h(w, p), dtype=float)) if q else np.zeros((0, n))

    stationarity = grad_f.copy()
    if m:
        stationarity += jac_g.T @ lam
    if q:
        stationarity += jac_h.T @ v

    comp = fb(-h_val, v) if q else np.zeros(0)
    norm2 = float(np.sqrt(
        stationarity @ stationarity + g_val @ g_val + comp @ comp
    ))
    residual = KktResidual(stationarity, g_val, comp, norm2)

    nu, mu = _fb_coefficients(h_val, v)

    jac_z = None
    if want_jac_z:
        H = _check_finite("hess_lag", np.asarray(nlp.hess_lag(w, lam, v, p), dtype=float))
        nz = nlp.n_z
        jac_z = np.zeros((nz, nz))
        jac_z[:n, :n] = H
        if delta:
            jac_z[:n, :n] += delta * np.eye(n)
        if m:
            jac_z[:n, n:n + m] = jac_g.T
            jac_z[n:n + m, :n] = jac_g
        if q:
            jac_z[:n, n + m:] = jac_h.T
            jac_z[n + m:, :n] = -nu[:, None] * jac_h
            jac_z[n + m + np.arange(q), n + m + np.arange(q)] = mu

    jac_p = None
    if want_jac_p:
        lwp = _check_finite("hess_lag_p", np.asarray(nlp.hess_lag_p(w, lam, v, p), dtype=float))
        jac_p = np.zeros((nlp.n_z, nlp.n_p))
        jac_p[:n, :] = lwp
        if m:
            jac_p[n:n + m, :] = _check_finite("jac_g_p", np.asarray(nlp.jac_g_p(w, p), dtype=float))
        if q:
            jac_p[n + m:, :] = -nu[:, None] * _check_finite(
                "jac_h_p", np.asarray(nlp.jac_h_p(w, p), dtype=float)
            )

    return Evaluation(residual=residual, jac_z=jac_z, jac_p=jac_p, nu=nu, mu=mu)


def residual(nlp: ParametricNLP, z: PrimalDualPoint, p) -> KktResidual:
    """F(z, p) without any Jacobian work."""
    return evaluate(nlp, z, p, want_jac_z=False).residual


def jacobian_z(nlp: ParametricNLP, z: PrimalDualPoint, p, delta: float = 0.0) -> np.ndarray:
    """Generalized Jacobian of F with respect to z at (z, p)."""
    return evaluate(nlp, z, p, want_jac_z=True, delta=delta).jac_z


def jacobian_p(nlp: ParametricNLP, z: PrimalDualPoint, p) -> np.ndarray:
    """Generalized Jacobian of F with respect to the parameter at (z, p)."""
    return evaluate(nlp, z, p, want_jac_z=False, want_jac_p=True).jac_p
