"""One-dimensional solvers: bisection for decreasing functions and bounded
Brent minimization (golden section with parabolic interpolation)."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .core import SolverError

BISECT_TOL = 1e-12
MINIMIZE_TOL = 1e-10
MAX_ITER = 200

# relative guard only; the bracket tolerance is absolute
_EPS = 2.220446049250313e-16
_GOLDEN = 0.5 * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    tol: float = BISECT_TOL
    max_iter: int = MAX_ITER

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"empty bracket [{self.lo}, {self.hi}]")
        if not self.tol > 0:
            raise ValueError("bracket tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")

    @property
    def width(self):
        return self.hi - self.lo


def bisect_root(f, bracket: Bracket) -> float:
    """Root of a strictly decreasing ``f`` inside ``bracket``.

    Requires ``f(lo) > 0 > f(hi)``; an endpoint that is an exact root is
    returned as is. Returns the midpoint of the final bracket, whose width is
    at most ``bracket.tol``.
    """
    lo, hi = float(bracket.lo), float(bracket.hi)
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if not (f_lo > 0 > f_hi):
        raise SolverError(
            f"bisection needs f(lo) > 0 > f(hi), got f({lo})={f_lo}, f({hi})={f_hi}"
        )

    for _ in range(bracket.max_iter):
        if hi - lo <= bracket.tol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            # bracket is down to adjacent floats
            return mid
        f_mid = f(mid)
        if f_mid == 0:
            return mid
        if f_mid > 0:
            lo = mid
        else:
            hi = mid
    if hi - lo <= bracket.tol:
        return 0.5 * (lo + hi)
    raise SolverError(
        f"bisection did not reach width {bracket.tol} in {bracket.max_iter} iterations",
        best=0.5 * (lo + hi),
    )


@dataclass(frozen=True)
class BoundedMinimum:
    x: float
    fun: float
    converged: bool
    iterations: int

    def __iter__(self):
        # unpacks as (argmin, min value)
        return iter((self.x, self.fun))


def minimize_bounded(f, bracket: Bracket) -> BoundedMinimum:
    """Minimize a unimodal ``f`` over ``[lo, hi]`` with Brent's bounded method.

    ``f`` is only evaluated inside the closed interval. After the interior
    search the two endpoints are compared against the best interior point, so
    minima sitting exactly on the boundary are returned exactly. When the
    iteration cap is hit the best point so far is returned with
    ``converged=False`` and a ``RuntimeWarning``.
    """
    a, b = float(bracket.lo), float(bracket.hi)
    xatol = bracket.tol

    fulc = a + _GOLDEN * (b - a)
    nfc = xf = fulc
    rat = e = 0.0
    fx = f(xf)
    ffulc = fnfc = fx
    xm = 0.5 * (a + b)
    tol1 = _EPS * abs(xf) + xatol / 3.0
    tol2 = 2.0 * tol1

    converged = True
    it = 0
    while abs(xf - xm) > (tol2 - 0.5 * (b - a)):
        if it >= bracket.max_iter:
            converged = False
            break
        it += 1
        golden = True
        if abs(e) > tol1:
            # try a parabolic fit through the three best points
            golden = False
            r = (xf - nfc) * (fx - ffulc)
            q = (xf - fulc) * (fx - fnfc)
            p = (xf - fulc) * q - (xf - nfc) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            r = e
            e = rat
            if abs(p) < abs(0.5 * q * r) and q * (a - xf) < p < q * (b - xf):
                rat = p / q
                x = xf + rat
                if (x - a) < tol2 or (b - x) < tol2:
                    rat = tol1 if xm >= xf else -tol1
            else:
                golden = True
        if golden:
            e = (a - xf) if xf >= xm else (b - xf)
            rat = _GOLDEN * e

        step = max(abs(rat), tol1)
        x = xf + (step if rat >= 0 else -step)
        x = min(max(x, a), b)
        fu = f(x)
        if fu <= fx:
            if x >= xf:
                a = xf
            else:
                b = xf
            fulc, ffulc = nfc, fnfc
            nfc, fnfc = xf, fx
            xf, fx = x, fu
        else:
            if x < xf:
                a = x
            else:
                b = x
            if fu <= fnfc or nfc == xf:
                fulc, ffulc = nfc, fnfc
                nfc, fnfc = x, fu
            elif fu <= ffulc or fulc == xf or fulc == nfc:
                fulc, ffulc = x, fu
        xm = 0.5 * (a + b)
        tol1 = _EPS * abs(xf) + xatol / 3.0
        tol2 = 2.0 * tol1

    # ties prefer the lower endpoint
    f_lo = f(bracket.lo)
    if f_lo <= fx:
        xf, fx = float(bracket.lo), f_lo
    f_hi = f(bracket.hi)
    if f_hi < fx:
        xf, fx = float(bracket.hi), f_hi

    if not converged:
        warnings.warn(
            f"bounded minimization stopped after {bracket.max_iter} iterations",
            RuntimeWarning,
            stacklevel=2,
        )
    return BoundedMinimum(xf, fx, converged, it)


def polish_root(f, x0, lo, hi, start=1e-7):
    """Refine an approximate maximizer ``x0`` of a concave function on [lo, hi]
    given its decreasing derivative ``f``.

    A bracket around ``x0`` is widened geometrically until ``f`` changes sign
    and then bisected. Returns ``lo`` (``hi``) when ``f`` is non-positive
    (non-negative) all the way to that end.
    """
    w = start * max(1.0, abs(x0))
    while True:
        left = max(lo, x0 - w)
        f_left = f(left)
        if f_left > 0 or left == lo:
            break
        w *= 4.0
    w = start * max(1.0, abs(x0))
    while True:
        right = min(hi, x0 + w)
        f_right = f(right)
        if f_right < 0 or right == hi:
            break
        w *= 4.0
    if f_left <= 0 and f_right >= 0:
        # derivative vanishes around x0
        return x0
    if f_left <= 0:
        return left
    if f_right >= 0:
        return right
    return bisect_root(f, Bracket(left, right, BISECT_TOL, MAX_ITER))
