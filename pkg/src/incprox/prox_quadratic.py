"""Incremental proximal point for h(g(x)) with a quadratic inner function

    g(x) = 1/2 x^T A x + b^T x + c

and a Lipschitz outer h. The step solves a saddle-point problem whose dual
in s is

    phi(s) - h*(s),   phi(s) = -1/2 g_s^T (s A + I/eta)^{-1} g_s + s c,
    g_s = x/eta - s b,

and recovers x+ = (s A + I/eta)^{-1} g_s at the dual maximizer. Problem
structure enters only through a ``QuadraticOracle``.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .core import (
    CapabilityError,
    DimensionError,
    IncrementalOptimizer,
    SolverError,
    StepSizeError,
    as_vector,
    check_step_size,
)
from .outer import OuterFunction, bound_sequences
from .solve1d import MAX_ITER, MINIMIZE_TOL, Bracket, minimize_bounded, polish_root

# warn when a step size gets this close to its bound
STEP_WARN_FRACTION = 0.99


class QuadraticOracle:
    """Interface for the structured pieces of g(x) = 1/2 x^T A x + b^T x + c.

    ``dual_eval`` only has to be exact up to an additive constant that does
    not depend on s; the maximizer is all that matters.
    """

    has_dual_deriv = False
    dim: int
    # A positive semidefinite: together with a conjugate domain inside [0, L]
    # the subproblem is strictly convex for every step size
    psd = False

    def eval(self, x) -> float:
        raise NotImplementedError

    def scalar(self) -> float:
        return 0.0

    def dual_eval(self, s, eta, x) -> float:
        raise NotImplementedError

    def dual_deriv(self, s, eta, x) -> float:
        raise CapabilityError(f"{type(self).__name__} does not provide the dual derivative")

    def solve_system(self, s, eta, x) -> np.ndarray:
        raise NotImplementedError

    def spectral_radius(self) -> float:
        """Largest |eigenvalue| of A, or an upper bound on it."""
        raise NotImplementedError

    def max_step_size(self, lipschitz=1.0, conjugate_nonnegative=False) -> float:
        """Supremum of step sizes keeping the subproblem strictly convex."""
        if self.psd and conjugate_nonnegative:
            return math.inf
        rho = self.spectral_radius()
        if rho == 0 or lipschitz == 0:
            return math.inf
        return 1.0 / (lipschitz * rho)


def generic_dual_deriv(apply_A, b, c, s, eta, x, solve_system) -> float:
    """phi'(s) = 1/2 z^T A z + b^T z + c with z = solve_system(s, eta, x)."""
    z = solve_system(s, eta, x)
    return 0.5 * float(z @ apply_A(z)) + float(np.asarray(b) @ z) + float(c)


def max_step_for(oracle: QuadraticOracle, h: OuterFunction) -> float:
    dom = h.domain()
    return oracle.max_step_size(h.lipschitz, conjugate_nonnegative=dom.lo >= 0)


def validate_step_size(eta, oracle: QuadraticOracle, h: OuterFunction) -> float:
    """Return the bound; raise ``StepSizeError`` when ``eta`` is not below it."""
    eta = check_step_size(eta)
    bound = max_step_for(oracle, h)
    if not eta < bound:
        raise StepSizeError(f"step size {eta} violates the bound {bound}", bound=bound)
    if eta >= STEP_WARN_FRACTION * bound:
        warnings.warn(
            f"step size {eta} is within 1% of the bound {bound}", RuntimeWarning, stacklevel=2
        )
    return bound


class DenseQuadraticOracle(QuadraticOracle):
    """Explicit symmetric A, for small problems and as a reference implementation."""

    has_dual_deriv = True

    def __init__(self, A, b, c=0.0):
        A = np.asarray(A, dtype=np.float64)
        b = as_vector(b, "b")
        if A.shape != (len(b), len(b)):
            raise ValueError(f"A has shape {A.shape}, b has length {len(b)}")
        self.dim = len(b)
        self.A = 0.5 * (A + A.T)
        self.b = b
        self.c = float(c)
        eig = np.linalg.eigvalsh(self.A)
        self._eig = eig
        self.psd = bool(eig.min() >= 0) if len(eig) else True

    def eval(self, x):
        return 0.5 * float(x @ self.A @ x) + float(self.b @ x) + self.c

    def scalar(self):
        return self.c

    def solve_system(self, s, eta, x):
        M = s * self.A + np.eye(len(x)) / eta
        return np.linalg.solve(M, x / eta - s * self.b)

    def dual_eval(self, s, eta, x):
        g = x / eta - s * self.b
        return -0.5 * float(g @ self.solve_system(s, eta, x)) + s * self.c

    def dual_deriv(self, s, eta, x):
        return generic_dual_deriv(self.A.__matmul__, self.b, self.c, s, eta, x, self.solve_system)

    def spectral_radius(self):
        return float(np.abs(self._eig).max()) if len(self._eig) else 0.0


class PhaseRetrievalOracle(QuadraticOracle):
    """g(x) = (a^T x)^2 - y, i.e. A = 2 a a^T, b = 0, c = -y."""

    has_dual_deriv = True
    psd = True

    def __init__(self, a, y):
        self.a = as_vector(a, "a")
        self.dim = len(self.a)
        self.y = float(y)
        if self.y < 0:
            raise ValueError(f"phase retrieval measurements are non-negative, got {y}")
        self._sq_norm = float(self.a @ self.a)

    def eval(self, x):
        return float(self.a @ x) ** 2 - self.y

    def scalar(self):
        return -self.y

    def solve_system(self, s, eta, x):
        # Sherman-Morrison on I/eta + 2 s a a^T
        coef = 2.0 * eta * s * float(self.a @ x) / (1.0 + 2.0 * eta * s * self._sq_norm)
        return x - coef * self.a

    def dual_eval(self, s, eta, x):
        return -0.5 * float((x / eta) @ self.solve_system(s, eta, x)) - s * self.y

    def dual_deriv(self, s, eta, x):
        z = self.solve_system(s, eta, x)
        return float(self.a @ z) ** 2 - self.y

    def spectral_radius(self):
        return 2.0 * self._sq_norm

    def max_step_size(self, lipschitz=1.0, conjugate_nonnegative=False):
        # the bound is used for both abs and logistic losses
        if self._sq_norm == 0:
            return math.inf
        return 1.0 / (2.0 * lipschitz * self._sq_norm)


def pr_eval(a, y, x):
    return PhaseRetrievalOracle(a, y).eval(as_vector(x, "x"))


def pr_solve_system(a, y, s, eta, x):
    return PhaseRetrievalOracle(a, y).solve_system(s, eta, as_vector(x, "x"))


def pr_dual_eval(a, y, s, eta, x):
    return PhaseRetrievalOracle(a, y).dual_eval(s, eta, as_vector(x, "x"))


def pr_dual_deriv(a, y, s, eta, x):
    return PhaseRetrievalOracle(a, y).dual_deriv(s, eta, as_vector(x, "x"))


def pr_max_step(a):
    return PhaseRetrievalOracle(a, 0.0).max_step_size()


def quad_dual_objective(oracle: QuadraticOracle, h: OuterFunction, s, eta, x) -> float:
    return oracle.dual_eval(s, eta, x) - float(h.conjugate(s))


class ConvexLipschitzOntoQuadratic(IncrementalOptimizer):
    """Exact incremental proximal point for f(x) = h(g(x)), g quadratic, h Lipschitz."""

    def __init__(self, x, h: OuterFunction):
        super().__init__(x)
        if not math.isfinite(h.lipschitz):
            raise CapabilityError(f"{h.kind} is not Lipschitz; quadratic inner functions need it")
        self.h = h

    def _maximize_dual(self, eta, oracle, x):
        h = self.h
        indicator = not h.conjugate_differentiable

        def neg_q(s):
            hc = 0.0 if indicator else float(h.conjugate(s))
            return -(oracle.dual_eval(s, eta, x) - hc)

        def q_prime(s):
            return oracle.dual_deriv(s, eta, x) - h.conjugate_slope(s)

        dom = h.domain()
        if dom.compact:
            lo, hi = dom.lo, dom.hi
        else:
            if not oracle.has_dual_deriv:
                raise CapabilityError(
                    f"{type(oracle).__name__} lacks dual_deriv, needed for {h.kind}"
                )
            lower, upper = bound_sequences(h)
            lo = _first(lower, lambda s: q_prime(s) > 0, "lower")
            hi = _first(upper, lambda s: q_prime(s) < 0, "upper")
        s = minimize_bounded(neg_q, Bracket(lo, hi, MINIMIZE_TOL, MAX_ITER)).x
        if oracle.has_dual_deriv:
            s = polish_root(q_prime, s, lo, hi)
        return s

    def step(self, eta, oracle: QuadraticOracle):
        if oracle.dim != self.dim:
            raise DimensionError(f"oracle has dimension {oracle.dim}, parameters have {self.dim}")
        eta = check_step_size(eta)
        validate_step_size(eta, oracle, self.h)
        x = self._x.copy()
        loss = float(self.h.eval(oracle.eval(x)))
        s = self._maximize_dual(eta, oracle, x)
        self._assign(oracle.solve_system(s, eta, x))
        return loss


def _first(seq, accept, side):
    last = None
    for s in seq:
        last = s
        if accept(s):
            return s
    raise SolverError(f"{side} bound scan exhausted at s={last} without a sign change")


def step_quad(opt: ConvexLipschitzOntoQuadratic, eta, oracle):
    return opt.step(eta, oracle)


__all__ = [
    "ConvexLipschitzOntoQuadratic",
    "DenseQuadraticOracle",
    "PhaseRetrievalOracle",
    "QuadraticOracle",
    "generic_dual_deriv",
    "max_step_for",
    "pr_dual_deriv",
    "pr_dual_eval",
    "pr_eval",
    "pr_max_step",
    "pr_solve_system",
    "quad_dual_objective",
    "step_quad",
    "validate_step_size",
]
