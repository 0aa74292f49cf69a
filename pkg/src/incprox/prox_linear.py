"""Incremental proximal point for costs h(a^T x + b) and h(a^T x + b) + r(x).

Each step solves the proximal subproblem through its one-dimensional dual,
then maps the dual maximizer back to the primal update.
"""

from __future__ import annotations

from typing import NamedTuple

from .core import (
    CapabilityError,
    IncrementalOptimizer,
    SolverError,
    as_vector,
    check_dim,
    check_step_size,
)
from .outer import OuterFunction, bound_sequences, solve_scalar_dual
from .regularizers import Regularizer, ZeroReg
from .solve1d import MAX_ITER, MINIMIZE_TOL, Bracket, minimize_bounded, polish_root


class DualCoefficients(NamedTuple):
    alpha: float
    beta: float


def dual_coefficients(eta, a, b, x) -> DualCoefficients:
    """alpha = eta * ||a||^2 and beta = a^T x + b."""
    return DualCoefficients(eta * float(a @ a), float(a @ x) + float(b))


class IncConvexOnLinear(IncrementalOptimizer):
    """Exact incremental proximal point for f(x) = h(a^T x + b)."""

    def __init__(self, x, h: OuterFunction):
        super().__init__(x)
        self.h = h

    def step(self, eta, a, b):
        eta = check_step_size(eta)
        a = as_vector(a, "a")
        check_dim(a, self.dim, "a")
        alpha, beta = dual_coefficients(eta, a, b, self._x)
        s = solve_scalar_dual(self.h, alpha, beta)
        self._assign(self._x - eta * s * a)
        return float(self.h.eval(beta))


def dual_objective(h: OuterFunction, r: Regularizer, eta, a, b, x, s) -> float:
    """q(s) = M_eta r(x - eta s a) + beta s - (alpha/2) s^2 - h*(s)."""
    alpha, beta = dual_coefficients(eta, a, b, x)
    return (
        r.envelope(eta, x - eta * s * a)
        + beta * s
        - 0.5 * alpha * s * s
        - float(h.conjugate(s))
    )


def primal_objective(h: OuterFunction, r: Regularizer, eta, a, b, x_prev, u) -> float:
    """h(a^T u + b) + r(u) + ||u - x_prev||^2 / (2 eta)."""
    diff = u - x_prev
    return float(h.eval(float(a @ u) + b)) + r.eval(u) + 0.5 * float(diff @ diff) / eta


class IncRegularizedConvexOnLinear(IncrementalOptimizer):
    """Exact incremental proximal point for f(x) = h(a^T x + b) + r(x)."""

    def __init__(self, x, h: OuterFunction, r: Regularizer | None = None):
        super().__init__(x)
        if not h.conjugate_has_compact_domain() and not h.conjugate_differentiable:
            raise CapabilityError(
                f"{h.kind}: non-compact conjugate domain needs a differentiable conjugate"
            )
        self.h = h
        self.r = r if r is not None else ZeroReg()

    def _maximize_dual(self, eta, a, b, x):
        h, r = self.h, self.r
        beta = float(a @ x) + float(b)
        alpha = eta * float(a @ a)
        indicator = not h.conjugate_differentiable

        def neg_q(s):
            # indicator conjugates vanish on their domain; the search stays inside it
            hc = 0.0 if indicator else float(h.conjugate(s))
            return -(r.envelope(eta, x - eta * s * a) + beta * s - 0.5 * alpha * s * s - hc)

        def q_prime(s):
            return float(a @ r.prox(eta, x - eta * s * a)) + b - h.conjugate_slope(s)

        dom = h.domain()
        if dom.compact:
            lo, hi = dom.lo, dom.hi
        else:
            lower, upper = bound_sequences(h)
            lo = _scan(q_prime, lower, positive=True)
            hi = _scan(q_prime, upper, positive=False)
        s = minimize_bounded(neg_q, Bracket(lo, hi, MINIMIZE_TOL, MAX_ITER)).x
        # Brent stalls where q is flat to rounding; finish on the derivative
        return polish_root(q_prime, s, lo, hi)

    def step(self, eta, a, b):
        eta = check_step_size(eta)
        a = as_vector(a, "a")
        check_dim(a, self.dim, "a")
        x = self._x.copy()
        loss = float(self.h.eval(float(a @ x) + float(b))) + self.r.eval(x)
        s = self._maximize_dual(eta, a, b, x)
        self._assign(self.r.prox(eta, x - eta * s * a))
        return loss


def _scan(q_prime, seq, positive):
    last = None
    for s in seq:
        last = s
        v = q_prime(s)
        if (v > 0) if positive else (v < 0):
            return s
    side = "lower" if positive else "upper"
    raise SolverError(f"{side} bound scan exhausted at s={last} without a sign change")


def step_conv_linear(opt: IncConvexOnLinear, eta, a, b):
    return opt.step(eta, a, b)


def step_reg_conv_linear(opt: IncRegularizedConvexOnLinear, eta, a, b):
    return opt.step(eta, a, b)


__all__ = [
    "DualCoefficients",
    "IncConvexOnLinear",
    "IncRegularizedConvexOnLinear",
    "dual_coefficients",
    "dual_objective",
    "primal_objective",
    "step_conv_linear",
    "step_reg_conv_linear",
]
