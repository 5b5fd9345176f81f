"""Dense small-matrix kernels: pivoted linear solves, Riccati iteration,
finite-difference Jacobians.

Everything here is a pure function of its arguments and safe to call
concurrently.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NoConvergenceError, NonFiniteEvaluationError, SingularMatrixError

# A pivot smaller than this fraction of the largest initial column norm is
# treated as an exact rank deficiency.
PIVOT_RTOL = 1e-14


@dataclass(frozen=True)
class RiccatiResult:
    """Converged cost-to-go matrix P, feedback gain K (u = -K x), and
    iteration/residual bookkeeping."""

    P: np.ndarray
    K: np.ndarray
    iterations: int
    residual: float


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise SingularMatrixError(f"expected a square matrix, got shape {A.shape}")
    return A


def lu_factor_checked(A):
    """LU with partial pivoting, rejecting near-singular factors.

    Returns the (lu, piv) pair from scipy. Raises SingularMatrixError when
    any pivot magnitude falls below PIVOT_RTOL times the largest initial
    column norm (this also catches the all-zero matrix).
    """
    A = _as_square(A)
    col_scale = float(np.max(np.linalg.norm(A, axis=0))) if A.size else 0.0
    with warnings.catch_warnings():
        # scipy warns on exact zero pivots; the threshold check below owns
        # singularity reporting.
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if A.size and float(pivots.min()) <= PIVOT_RTOL * col_scale:
        raise SingularMatrixError(
            f"pivot {pivots.min():.3e} below threshold "
            f"{PIVOT_RTOL * col_scale:.3e} (matrix effectively singular)"
        )
    return lu, piv


def solve_linear(A, b) -> np.ndarray:
    """Solve A x = b by LU factorization with row pivoting."""
    b = np.asarray(b, dtype=float)
    A = _as_square(A)
    if A.shape[0] != b.shape[0]:
        raise SingularMatrixError(
            f"dimension mismatch: A is {A.shape}, b has length {b.shape[0]}"
        )
    lu, piv = lu_factor_checked(A)
    return sla.lu_solve((lu, piv), b, check_finite=False)


def _dare_rhs(A, B, Q, R, P):
    # Q + A'PA - A'PB (R + B'PB)^-1 B'PA
    PA = P @ A
    PB = P @ B
    G = R + B.T @ PB
    K = np.linalg.solve(G, PB.T @ A)
    return Q + A.T @ PA - (A.T @ PB) @ K, K


def solve_dare(A, B, Q, R, tol: float = 1e-12, max_iter: int = 100000) -> RiccatiResult:
    """Discrete-time algebraic Riccati equation by fixed-point iteration.

    Iterates P <- Q + A'PA - A'PB(R+B'PB)^-1 B'PA from P = Q, symmetrizing
    each iterate, until the update (= the DARE residual of the previous
    iterate) is within `tol` in the max-abs norm. `tol` is absolute; for
    large-scale P it must be chosen above the rounding floor eps*||P||.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    Q = np.asarray(Q, dtype=float)
    R = np.asarray(R, dtype=float)
    P = Q.copy()
    for it in range(1, max_iter + 1):
        P_next, K = _dare_rhs(A, B, Q, R, P)
        P_next = 0.5 * (P_next + P_next.T)
        delta = float(np.max(np.abs(P_next - P))) if P.size else 0.0
        P = P_next
        if delta <= tol:
            # Report the residual of the returned P, not of its predecessor.
            P_check, K = _dare_rhs(A, B, Q, R, P)
            residual = float(np.max(np.abs(P_check - P))) if P.size else 0.0
            return RiccatiResult(P=P, K=K, iterations=it, residual=residual)
    raise NoConvergenceError(
        f"Riccati iteration did not reach tol={tol:g} within {max_iter} iterations "
        f"(last update {delta:.3e})",
        best=P,
        residual=delta,
        iterations=max_iter,
    )


def fd_jacobian(fn, at, step: float | None = None) -> np.ndarray:
    """Central-difference Jacobian of a vector-valued map.

    `step` defaults to 1e-6 * (1 + ||at||_inf). Raises
    NonFiniteEvaluationError if any probe returns a non-finite value.
    """
    at = np.asarray(at, dtype=float)
    if step is None:
        scale = float(np.max(np.abs(at))) if at.size else 0.0
        step = 1e-6 * (1.0 + scale)
    cols = []
    for i in range(at.size):
        e = np.zeros_like(at)
        e[i] = step
        fp = np.asarray(fn(at + e), dtype=float)
        fm = np.asarray(fn(at - e), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise NonFiniteEvaluationError(
                f"non-finite evaluation while probing coordinate {i}"
            )
        cols.append((fp - fm) / (2.0 * step))
    if not cols:
        f0 = np.asarray(fn(at), dtype=float)
        return np.zeros((f0.size, 0))
    return np.stack(cols, axis=1)
