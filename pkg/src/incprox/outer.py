"""Outer convex functions h for costs of the form h(inner(x)).

Each function knows how to evaluate itself, its convex conjugate h*, the
conjugate's domain, and how to maximize the scalar dual

    q(s) = -(alpha / 2) s^2 + beta s - h*(s)

which is all the single-sample convex-onto-linear optimizer needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CapabilityError, SolverError
from .solve1d import BISECT_TOL, MAX_ITER, Bracket, bisect_root

# Largest k such that 2**-k is still a normal double.
_LOGISTIC_LOWER_SCAN = 1022
_LOGISTIC_UPPER_SCAN = 60
_SEQUENCE_TERMS = 63  # 2**0 .. 2**62


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    @property
    def compact(self):
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def __contains__(self, s):
        return self.lo <= s <= self.hi


def _scalar_or_array(v):
    return float(v) if np.ndim(v) == 0 else v


class OuterFunction:
    """Base class. Subclasses set the capability attributes below."""

    kind: str = ""
    lipschitz: float = math.inf
    conjugate_differentiable: bool = False

    def eval(self, z):
        raise NotImplementedError

    def derivative(self, z):
        """Derivative (or the conventional subgradient) of h, used by gradient baselines."""
        raise NotImplementedError

    def conjugate(self, s):
        raise NotImplementedError

    def conjugate_prime(self, s):
        raise CapabilityError(f"{self.kind}: conjugate is an indicator and is not differentiable")

    def conjugate_slope(self, s):
        """h*'(s) on dom(h*), with indicator conjugates contributing 0."""
        return self.conjugate_prime(s) if self.conjugate_differentiable else 0.0

    def domain(self) -> Interval:
        raise NotImplementedError

    def conjugate_has_compact_domain(self):
        return self.domain().compact

    def lower_bound_sequence(self):
        raise CapabilityError(f"{self.kind}: conjugate domain is compact, no bound sequences")

    def upper_bound_sequence(self):
        raise CapabilityError(f"{self.kind}: conjugate domain is compact, no bound sequences")

    def solve_dual(self, alpha, beta):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"

    def __eq__(self, other):
        return type(self) is type(other)

    def __hash__(self):
        return hash(type(self))


class HalfSquared(OuterFunction):
    """h(z) = z^2 / 2, self-conjugate on the whole real line."""

    kind = "half-squared"
    conjugate_differentiable = True

    def eval(self, z):
        return _scalar_or_array(0.5 * np.square(z))

    def derivative(self, z):
        return _scalar_or_array(np.asarray(z, dtype=np.float64))

    def conjugate(self, s):
        return _scalar_or_array(0.5 * np.square(s))

    def conjugate_prime(self, s):
        return _scalar_or_array(np.asarray(s, dtype=np.float64))

    def domain(self):
        return Interval(-math.inf, math.inf)

    def lower_bound_sequence(self):
        return (-float(2**j) for j in range(_SEQUENCE_TERMS))

    def upper_bound_sequence(self):
        return (float(2**j) for j in range(_SEQUENCE_TERMS))

    def solve_dual(self, alpha, beta):
        return beta / (1.0 + alpha)


def _entr(u):
    # u ln u with 0 ln 0 = 0
    return u * math.log(u) if u > 0 else 0.0


class Logistic(OuterFunction):
    """h(z) = ln(1 + exp(z)); conjugate is the negative binary entropy on [0, 1]."""

    kind = "logistic"
    lipschitz = 1.0
    conjugate_differentiable = True

    def eval(self, z):
        z = np.asarray(z, dtype=np.float64)
        return _scalar_or_array(np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z))))

    def derivative(self, z):
        z = np.asarray(z, dtype=np.float64)
        # sigmoid, branch-free and overflow-free
        e = np.exp(-np.abs(z))
        return _scalar_or_array(np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e)))

    def conjugate(self, s):
        if np.ndim(s) != 0:
            return np.array([self.conjugate(v) for v in np.ravel(s)]).reshape(np.shape(s))
        s = float(s)
        if s < 0 or s > 1:
            return math.inf
        return _entr(s) + _entr(1.0 - s)

    def conjugate_prime(self, s):
        s = float(s)
        if not 0 < s < 1:
            raise ValueError(f"logistic conjugate derivative needs 0 < s < 1, got {s}")
        return math.log(s) - math.log1p(-s)

    def conjugate_slope(self, s):
        # the entropy's slope diverges at both ends of [0, 1]
        if s <= 0:
            return -math.inf
        if s >= 1:
            return math.inf
        return self.conjugate_prime(s)

    def domain(self):
        return Interval(0.0, 1.0)

    def solve_dual(self, alpha, beta):
        return _logistic_dual(alpha, beta)


def _logistic_dual(alpha, beta):
    def qprime(s):
        if s <= 0:
            return math.inf
        if s >= 1:
            return -math.inf
        return -alpha * s + beta + math.log1p(-s) - math.log(s)

    mid = qprime(0.5)
    if mid == 0:
        return 0.5
    if mid < 0:
        # root in (0, 1/2): halve until the derivative turns positive
        hi = 0.5
        for k in range(2, _LOGISTIC_LOWER_SCAN + 1):
            lo = 2.0**-k
            if qprime(lo) > 0:
                break
            hi = lo
        else:
            raise SolverError(
                f"logistic dual: no positive derivative down to 2^-{_LOGISTIC_LOWER_SCAN} "
                f"(alpha={alpha}, beta={beta})"
            )
    else:
        lo = 0.5
        for k in range(2, _LOGISTIC_UPPER_SCAN + 1):
            hi = 1.0 - 2.0**-k
            if qprime(hi) < 0:
                break
            lo = hi
        else:
            raise SolverError(
                f"logistic dual: no negative derivative up to 1 - 2^-{_LOGISTIC_UPPER_SCAN} "
                f"(alpha={alpha}, beta={beta})"
            )
    return bisect_root(qprime, Bracket(lo, hi, BISECT_TOL, MAX_ITER))


class Hinge(OuterFunction):
    """h(z) = max(z, 0); conjugate is the indicator of [0, 1]."""

    kind = "hinge"
    lipschitz = 1.0

    def eval(self, z):
        return _scalar_or_array(np.maximum(np.asarray(z, dtype=np.float64), 0.0))

    def derivative(self, z):
        # subgradient 0 at the kink
        return _scalar_or_array((np.asarray(z) > 0).astype(np.float64))

    def conjugate(self, s):
        if np.ndim(s) != 0:
            return np.where((np.asarray(s) >= 0) & (np.asarray(s) <= 1), 0.0, np.inf)
        return 0.0 if 0 <= s <= 1 else math.inf

    def domain(self):
        return Interval(0.0, 1.0)

    def solve_dual(self, alpha, beta):
        if alpha == 0:
            return 1.0 if beta > 0 else 0.0
        return min(1.0, max(0.0, beta / alpha))


class AbsValue(OuterFunction):
    """h(z) = |z|; conjugate is the indicator of [-1, 1]."""

    kind = "abs"
    lipschitz = 1.0

    def eval(self, z):
        return _scalar_or_array(np.abs(np.asarray(z, dtype=np.float64)))

    def derivative(self, z):
        return _scalar_or_array(np.sign(np.asarray(z, dtype=np.float64)))

    def conjugate(self, s):
        if np.ndim(s) != 0:
            return np.where(np.abs(np.asarray(s)) <= 1, 0.0, np.inf)
        return 0.0 if -1 <= s <= 1 else math.inf

    def domain(self):
        return Interval(-1.0, 1.0)

    def solve_dual(self, alpha, beta):
        if alpha == 0:
            return float(np.sign(beta))
        return min(1.0, max(-1.0, beta / alpha))


OUTER_FUNCTIONS = {
    "half-squared": HalfSquared,
    "logistic": Logistic,
    "hinge": Hinge,
    "abs": AbsValue,
}


def make_outer(kind: str) -> OuterFunction:
    try:
        return OUTER_FUNCTIONS[kind]()
    except KeyError:
        raise ValueError(f"unknown outer function {kind!r}; choose from {sorted(OUTER_FUNCTIONS)}")


def conjugate_domain(h: OuterFunction) -> Interval:
    return h.domain()


def bound_sequences(h: OuterFunction):
    """Pair of generators scanning towards the left and right ends of dom(h*)."""
    if h.conjugate_has_compact_domain():
        raise CapabilityError(f"{h.kind}: conjugate domain is compact, no bound sequences")
    return h.lower_bound_sequence(), h.upper_bound_sequence()


def solve_scalar_dual(h: OuterFunction, alpha: float, beta: float) -> float:
    """Maximizer of -(alpha/2) s^2 + beta s - h*(s) over dom(h*)."""
    alpha = float(alpha)
    if alpha < 0 or math.isnan(alpha):
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    return float(h.solve_dual(alpha, float(beta)))


__all__ = [
    "AbsValue",
    "HalfSquared",
    "Hinge",
    "Interval",
    "Logistic",
    "OUTER_FUNCTIONS",
    "OuterFunction",
    "bound_sequences",
    "conjugate_domain",
    "make_outer",
    "solve_scalar_dual",
]
