import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incprox.core import CapabilityError
from incprox.outer import (
    AbsValue,
    HalfSquared,
    Hinge,
    Logistic,
    bound_sequences,
    conjugate_domain,
    make_outer,
    solve_scalar_dual,
)

from oracles import zoom_argmin

ALL = [HalfSquared(), Logistic(), Hinge(), AbsValue()]


def test_values():
    assert HalfSquared().eval(2.0) == 2.0
    assert Logistic().eval(0.0) == pytest.approx(math.log(2))
    assert Hinge().eval(-1.0) == 0.0 and Hinge().eval(2.5) == 2.5
    assert AbsValue().eval(-3.0) == 3.0


def test_logistic_is_overflow_safe():
    assert Logistic().eval(800.0) == 800.0
    assert Logistic().eval(-800.0) == 0.0
    assert Logistic().derivative(-800.0) == 0.0
    assert Logistic().derivative(800.0) == 1.0


def test_conjugate_values():
    assert HalfSquared().conjugate(3.0) == 4.5
    assert Logistic().conjugate(0.0) == 0.0
    assert Logistic().conjugate(1.0) == 0.0
    assert Logistic().conjugate(0.5) == pytest.approx(-math.log(2))
    assert Logistic().conjugate(1.5) == math.inf
    assert Hinge().conjugate(0.5) == 0.0 and Hinge().conjugate(-0.1) == math.inf
    assert AbsValue().conjugate(-1.0) == 0.0 and AbsValue().conjugate(1.01) == math.inf


def test_domains_and_sequences():
    assert conjugate_domain(HalfSquared()).compact is False
    assert (conjugate_domain(Logistic()).lo, conjugate_domain(Logistic()).hi) == (0.0, 1.0)
    assert (conjugate_domain(AbsValue()).lo, conjugate_domain(AbsValue()).hi) == (-1.0, 1.0)
    lower, upper = bound_sequences(HalfSquared())
    lower, upper = list(lower), list(upper)
    assert lower[:3] == [-1.0, -2.0, -4.0] and upper[-1] == 2.0**62 and len(upper) == 63
    for h in (Logistic(), Hinge(), AbsValue()):
        with pytest.raises(CapabilityError):
            bound_sequences(h)


def test_indicator_conjugates_have_no_derivative():
    with pytest.raises(CapabilityError):
        Hinge().conjugate_prime(0.5)
    with pytest.raises(CapabilityError):
        AbsValue().conjugate_prime(0.5)


def test_make_outer():
    assert isinstance(make_outer("hinge"), Hinge)
    with pytest.raises(ValueError):
        make_outer("huber")


def test_scalar_dual_examples():
    assert solve_scalar_dual(HalfSquared(), 1.0, 1.0) == 0.5
    assert solve_scalar_dual(Hinge(), 4.0, 1.0) == 0.25
    assert solve_scalar_dual(Hinge(), 1.0, -1.0) == 0.0
    assert solve_scalar_dual(Hinge(), 0.0, 2.0) == 1.0
    assert solve_scalar_dual(AbsValue(), 0.0, -2.0) == -1.0
    assert solve_scalar_dual(AbsValue(), 0.0, 0.0) == 0.0
    # alpha = beta = 0: entropy term alone is maximized at 1/2
    assert solve_scalar_dual(Logistic(), 0.0, 0.0) == 0.5
    with pytest.raises(ValueError):
        solve_scalar_dual(HalfSquared(), -1.0, 0.0)


def _grid_dual(h, alpha, beta):
    dom = h.domain()
    lo = dom.lo if dom.compact else -abs(beta) - 1
    hi = dom.hi if dom.compact else abs(beta) + 1
    conj = np.vectorize(h.conjugate)
    s, _ = zoom_argmin(lambda s: 0.5 * alpha * s * s - beta * s + conj(s), lo, hi,
                       coarse=2001, fine=201, levels=4)
    return s


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(ALL), st.floats(0, 50), st.floats(-30, 30))
def test_scalar_dual_matches_grid(h, alpha, beta):
    got = solve_scalar_dual(h, alpha, beta)
    ref = _grid_dual(h, alpha, beta)

    def q(s):
        return -0.5 * alpha * s * s + beta * s - h.conjugate(s)

    assert q(got) >= q(ref) - 1e-9
    if alpha > 1e-3:  # strictly concave enough for the maximizer to be well determined
        assert abs(got - ref) < 1e-6


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 1e6), st.floats(-700, 700))
def test_logistic_dual_is_stationary(alpha, beta):
    s = solve_scalar_dual(Logistic(), alpha, beta)
    assert 0 < s <= 1  # 1 - exp(-beta) rounds to 1.0 for large beta

    def qp(u):
        if u <= 0:
            return math.inf
        if u >= 1:
            return -math.inf
        return -alpha * u + beta + math.log1p(-u) - math.log(u)

    # the root lies within the bisection tolerance of the returned point
    assert qp(s - 1e-12) >= 0 >= qp(s + 1e-12)


def test_logistic_dual_extreme_negative_beta():
    # root near exp(-60): below 2**-60, the scan must keep going
    s = solve_scalar_dual(Logistic(), 0.0, -60.0)
    assert s == pytest.approx(1.0 / (1.0 + math.exp(60.0)), rel=1e-3, abs=1e-13)
