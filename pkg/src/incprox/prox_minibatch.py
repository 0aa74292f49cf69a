"""Mini-batch incremental proximal point for (1/m) sum_i h(a_i^T x + b_i).

The dual variable is an m-vector s and the primal update is
x <- x - eta * A^T s. With P = sqrt(eta) A^T and c = A x + b the dual reads

    max_s  -1/2 ||P s||^2 + c^T s - (1/m) sum_i h*(m s_i)

which is solved by a Cholesky solve (half-squared) or by cyclic coordinate
ascent (hinge, logistic).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DimensionError,
    IncrementalOptimizer,
    SolverError,
    as_vector,
    check_step_size,
)
from .outer import HalfSquared, Hinge, Logistic, OuterFunction, solve_scalar_dual

MAX_BATCH = 128
SWEEP_TOL = 1e-10
MAX_SWEEPS = 500


class NotPositiveDefiniteError(SolverError, ValueError):
    pass


@dataclass(frozen=True)
class CholeskyFactor:
    L: np.ndarray


def cholesky_spd(M) -> CholeskyFactor:
    """Lower-triangular L with L L^T = M (column-by-column Cholesky-Banachiewicz)."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    L = np.zeros_like(M)
    for j in range(n):
        pivot = M[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > 0:
            raise NotPositiveDefiniteError(
                f"matrix is not positive definite (pivot {pivot} at row {j})"
            )
        L[j, j] = math.sqrt(pivot)
        L[j + 1:, j] = (M[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return CholeskyFactor(L)


def solve_spd(factor: CholeskyFactor, rhs) -> np.ndarray:
    """M^{-1} rhs by forward then back substitution."""
    L = factor.L
    n = L.shape[0]
    rhs = np.asarray(rhs, dtype=np.float64)
    y = np.empty(n)
    for i in range(n):
        y[i] = (rhs[i] - L[i, :i] @ y[:i]) / L[i, i]
    out = np.empty(n)
    for i in range(n - 1, -1, -1):
        out[i] = (y[i] - L[i + 1:, i] @ out[i + 1:]) / L[i, i]
    return out


def solve_dual_halfsq(P, c, m) -> np.ndarray:
    P = np.asarray(P, dtype=np.float64)
    M = P.T @ P + m * np.eye(P.shape[1])
    return solve_spd(cholesky_spd(M), c)


def solve_dual_box_qp(P, c, m, *, tol=SWEEP_TOL, max_sweeps=MAX_SWEEPS) -> np.ndarray:
    """Maximize -1/2 ||P s||^2 + c^T s over the box [0, 1/m]^m."""
    P = np.asarray(P, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    Q = P.T @ P
    upper = 1.0 / m
    s = np.zeros(len(c))
    for _ in range(max_sweeps):
        delta = 0.0
        for i in range(len(s)):
            lin = c[i] - (Q[i] @ s - Q[i, i] * s[i])
            if Q[i, i] > 0:
                new = min(max(lin / Q[i, i], 0.0), upper)
            else:
                # objective linear in s_i: go to the end its slope points at
                new = upper if lin > 0 else 0.0
            delta = max(delta, abs(new - s[i]))
            s[i] = new
        if delta <= tol:
            return s
    raise SolverError(f"box QP coordinate ascent did not converge in {max_sweeps} sweeps", best=s)


def solve_dual_entropic(P, c, m, *, tol=SWEEP_TOL, max_sweeps=MAX_SWEEPS) -> np.ndarray:
    """Maximize -1/2 ||P s||^2 + c^T s - (1/m) sum h*(m s_i) for the logistic h*.

    Each coordinate subproblem, rescaled by u = m s_i, is the single-sample
    logistic dual with alpha = Q_ii / m.
    """
    P = np.asarray(P, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    Q = P.T @ P
    logistic = Logistic()
    s = np.full(len(c), 0.5 / m)
    for _ in range(max_sweeps):
        delta = 0.0
        for i in range(len(s)):
            lin = c[i] - (Q[i] @ s - Q[i, i] * s[i])
            new = solve_scalar_dual(logistic, Q[i, i] / m, lin) / m
            delta = max(delta, abs(new - s[i]))
            s[i] = new
        if delta <= tol:
            return s
    raise SolverError(f"entropic coordinate ascent did not converge in {max_sweeps} sweeps", best=s)


def minibatch_dual_objective(h: OuterFunction, P, c, s) -> float:
    m = len(c)
    Ps = np.asarray(P) @ s
    conj = sum(float(h.conjugate(m * si)) for si in s) / m
    return -0.5 * float(Ps @ Ps) + float(c @ s) - conj


_DUAL_SOLVERS = {
    HalfSquared: solve_dual_halfsq,
    Hinge: solve_dual_box_qp,
    Logistic: solve_dual_entropic,
}


class MiniBatchConvLinOptimizer(IncrementalOptimizer):
    """Exact incremental proximal point on mini-batches of linear-composite losses."""

    def __init__(self, x, h: OuterFunction, max_batch=MAX_BATCH):
        super().__init__(x)
        if type(h) not in _DUAL_SOLVERS:
            raise ValueError(f"mini-batch steps support half-squared, hinge and logistic, not {h.kind}")
        self.h = h
        self._solve = _DUAL_SOLVERS[type(h)]
        self.max_batch = max_batch

    def step(self, eta, A, b):
        eta = check_step_size(eta)
        A = np.asarray(A, dtype=np.float64)
        b = as_vector(b, "b")
        if A.ndim != 2 or A.shape[1] != self.dim or A.shape[0] != b.shape[0]:
            raise DimensionError(
                f"batch shapes A{A.shape}, b{b.shape} do not match dimension {self.dim}"
            )
        m = A.shape[0]
        if not 1 <= m <= self.max_batch:
            raise ValueError(f"batch size must be in [1, {self.max_batch}], got {m}")
        c = A @ self._x + b
        P = math.sqrt(eta) * A.T
        s = self._solve(P, c, m)
        losses = np.asarray(self.h.eval(c), dtype=np.float64)
        self._assign(self._x - eta * (A.T @ s))
        return losses


def step_minibatch(opt: MiniBatchConvLinOptimizer, eta, A, b):
    return opt.step(eta, A, b)


__all__ = [
    "CholeskyFactor",
    "MAX_BATCH",
    "MiniBatchConvLinOptimizer",
    "NotPositiveDefiniteError",
    "cholesky_spd",
    "minibatch_dual_objective",
    "solve_dual_box_qp",
    "solve_dual_entropic",
    "solve_dual_halfsq",
    "solve_spd",
    "step_minibatch",
]
