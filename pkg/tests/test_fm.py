import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incprox.core import StepSizeError
from incprox.fm import (
    FMCTROracle,
    FMLayout,
    fm_ctr_step,
    fm_dense_quadratic,
    fm_eigenvalue_bound,
    fm_eval,
    fm_inverse_factors,
    fm_max_step,
)
from incprox.outer import AbsValue, Logistic
from incprox.prox_linear import IncConvexOnLinear
from incprox.prox_quadratic import ConvexLipschitzOntoQuadratic

from oracles import dense_phi, quad_prox_oracle


def _fm_double_sum(layout, x, a):
    w0, w, V = layout.decompose(x)
    total = w0[0] + w @ a
    for i, j in itertools.combinations(range(layout.d), 2):
        total += a[i] * a[j] * V[:, i] @ V[:, j]
    return total


def _random_instance(rng, d, k, sparse=True):
    layout = FMLayout(d, k)
    if sparse:
        a = (rng.random(d) < 0.6).astype(float) * rng.uniform(0.2, 2.0, size=d)
    else:
        a = rng.normal(size=d)
    y = rng.choice([-1, 1])
    x = rng.normal(size=layout.total)
    return layout, a, y, x


def test_layout():
    layout = FMLayout(3, 2)
    assert (layout.linear, layout.pairwise, layout.total) == (4, 6, 10)
    x = np.arange(10.0)
    w0, w, V = layout.decompose(x)
    assert w0.tolist() == [0.0] and w.tolist() == [1.0, 2.0, 3.0] and V.shape == (2, 3)
    assert layout.concat(w0, w, V).tobytes() == x.tobytes()
    with pytest.raises(ValueError):
        FMLayout(3, 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_layout_round_trip(d, k, seed):
    layout = FMLayout(d, k)
    x = np.random.default_rng(seed).normal(size=layout.total)
    assert layout.concat(*layout.decompose(x)).tobytes() == x.tobytes()


def test_fm_eval_examples():
    layout = FMLayout(2, 2)
    x = layout.concat(1.0, [1.0, 2.0], np.array([[1.0, 2.0], [1.0, 0.0]]))
    assert fm_eval(layout, x, np.array([1.0, 1.0])) == 6.0
    assert fm_eval(layout, x, np.zeros(2)) == 1.0
    assert fm_eval(layout, x, np.array([0.0, 3.0])) == 1.0 + 6.0


def test_fm_eval_matches_double_sum():
    rng = np.random.default_rng(0)
    for _ in range(100):
        layout, a, _, x = _random_instance(rng, int(rng.integers(1, 7)), int(rng.integers(1, 4)))
        assert fm_eval(layout, x, a) == pytest.approx(_fm_double_sum(layout, x, a), rel=1e-12,
                                                      abs=1e-12)


def test_g_eval():
    layout = FMLayout(2, 2)
    x = layout.concat(1.0, [1.0, 2.0], np.array([[1.0, 2.0], [1.0, 0.0]]))
    assert FMCTROracle([1.0, 1.0], 1, layout).eval(x) == -6.0
    assert FMCTROracle([1.0, 1.0], -1, layout).eval(x) == 6.0
    x0 = layout.concat(2.0, [1.0, 2.0], np.ones((2, 2)))
    assert FMCTROracle([0.0, 0.0], 1, layout).eval(x0) == -2.0
    assert FMCTROracle([0.0, 0.0], 1, layout).scalar() == 0.0


def test_max_step_examples():
    assert fm_max_step([1.0, 1.0, 1.0, 0.0]) == 0.5
    assert fm_max_step([1.0, 0.0]) == 1.0
    assert fm_max_step([2.0, 1.0]) == 0.25
    assert fm_max_step([0.0, 0.0]) == math.inf
    # n ones: 1 / max(1, n - 1)
    for n in range(1, 8):
        assert fm_max_step(np.ones(n)) == 1.0 / max(1, n - 1)


def test_eigenvalue_bound_holds():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        d = int(rng.integers(1, 8))
        a = rng.normal(size=d) if rng.random() < 0.5 else (rng.random(d) < 0.5).astype(float)
        tilde = np.outer(a, a) - np.diag(a * a)
        assert np.abs(np.linalg.eigvalsh(tilde)).max() <= fm_eigenvalue_bound(a) + 1e-10


def test_inverse_factor_examples():
    f = fm_inverse_factors([1.0, 0.0, 2.0], 1, 0.0, 0.1)
    assert f.D.tolist() == [0.1, 0.1] and f.gamma == 0.0
    a, y, eta, s = np.array([1.0, 1.0]), 1, 0.25, 0.5
    f = fm_inverse_factors(a, y, s, eta)
    dense = np.linalg.inv(-y * s * (np.outer(a, a) - np.diag(a * a)) + np.eye(2) / eta)
    assert np.abs(f.dense() - dense).max() <= 1e-10


def test_inverse_factors_validate():
    with pytest.raises(ValueError):
        fm_inverse_factors([1.0, 1.0], 1, 1.5, 0.1)
    with pytest.raises(StepSizeError):
        fm_inverse_factors([1.0, 1.0, 1.0], 1, 0.5, 0.5)


def test_kronecker_inverse_matches_dense():
    rng = np.random.default_rng(2)
    for _ in range(500):
        d, k = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        layout, a, y, _ = _random_instance(rng, d, k, sparse=rng.random() < 0.5)
        eta = rng.uniform(0.05, 0.95) * min(fm_max_step(a), 10.0)
        s = rng.uniform(0, 1)
        A, _, _ = fm_dense_quadratic(layout, a, y)
        lat = slice(layout.linear, layout.total)
        dense = np.linalg.inv(s * A[lat, lat] + np.eye(layout.pairwise) / eta)
        f = fm_inverse_factors(a, y, s, eta)
        block = eta * np.eye(d)
        block[np.ix_(f.mask, f.mask)] = f.dense()
        assert np.abs(np.kron(np.eye(k), block) - dense).max() <= 1e-8


def test_solve_system_matches_dense():
    rng = np.random.default_rng(3)
    for _ in range(200):
        d, k = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        layout, a, y, x = _random_instance(rng, d, k)
        eta = rng.uniform(0.05, 0.95) * min(fm_max_step(a), 10.0)
        s = rng.uniform(0, 1)
        A, b, _ = fm_dense_quadratic(layout, a, y)
        oracle = FMCTROracle(a, y, layout)
        ref = np.linalg.solve(s * A + np.eye(layout.total) / eta, x / eta - s * b)
        got = oracle.solve_system(s, eta, x)
        assert np.abs(got - ref).max() <= 1e-8 * max(1.0, np.abs(ref).max())
        inactive = np.zeros(layout.total, dtype=bool)
        _, w_in, V_in = layout.decompose(inactive)
        w_in[a == 0] = True
        V_in[:, a == 0] = True
        assert np.array_equal(got[inactive], x[inactive])
        assert np.allclose(oracle.solve_system(0.0, eta, x), x, rtol=1e-15, atol=0)


def test_mask_consistency():
    rng = np.random.default_rng(4)
    for _ in range(100):
        d, k = int(rng.integers(1, 7)), int(rng.integers(1, 4))
        layout, a, y, x = _random_instance(rng, d, k)
        eta = 0.5 * min(fm_max_step(a), 10.0)
        s = rng.uniform(0, 1)
        sparse = FMCTROracle(a, y, layout)
        full = FMCTROracle(a, y, layout, mask=np.arange(d))
        assert np.array_equal(sparse.solve_system(s, eta, x), full.solve_system(s, eta, x))


def test_dual_eval_differences_match_dense():
    rng = np.random.default_rng(5)
    for dense_a in (False, True):
        for _ in range(100):
            d, k = int(rng.integers(1, 5)), int(rng.integers(1, 4))
            layout, a, y, x = _random_instance(rng, d, k, sparse=not dense_a)
            eta = rng.uniform(0.05, 0.95) * min(fm_max_step(a), 10.0)
            s1, s2 = rng.uniform(0, 1, size=2)
            A, b, c = fm_dense_quadratic(layout, a, y)
            oracle = FMCTROracle(a, y, layout)
            got = oracle.dual_eval(s1, eta, x) - oracle.dual_eval(s2, eta, x)
            ref = dense_phi(A, b, c, s1, eta, x) - dense_phi(A, b, c, s2, eta, x)
            assert abs(got - ref) <= 1e-8 * max(1.0, abs(dense_phi(A, b, c, s1, eta, x)))


def test_zero_sample_moves_only_bias():
    layout = FMLayout(3, 2)
    rng = np.random.default_rng(6)
    x = rng.normal(size=layout.total)
    x0 = x.copy()
    y, eta = -1, 0.7
    fm_ctr_step(ConvexLipschitzOntoQuadratic(x, Logistic()), eta, np.zeros(3), y, layout)
    assert np.array_equal(x[1:], x0[1:])
    # the same step as a one-dimensional logistic prox on w0 with a = -y, b = 0
    w0 = x0[:1].copy()
    IncConvexOnLinear(w0, Logistic()).step(eta, np.array([-float(y)]), 0.0)
    assert x[0] == pytest.approx(w0[0], abs=1e-7)  # derivative-free dual search


def test_tiny_instance_matches_nested_grid():
    rng = np.random.default_rng(7)
    for _ in range(10):
        layout, a, y, x0 = _random_instance(rng, 2, 1, sparse=False)
        eta = 0.5 * min(fm_max_step(a), 10.0)
        x = x0.copy()
        fm_ctr_step(ConvexLipschitzOntoQuadratic(x, Logistic()), eta, a, y, layout)
        A, b, c = fm_dense_quadratic(layout, a, y)
        ref, _ = quad_prox_oracle("logistic", A, b, c, eta, x0, 0.0, 1.0)
        assert np.abs(x - ref).max() <= 1e-4


def test_repeated_steps_decrease_loss():
    rng = np.random.default_rng(8)
    layout = FMLayout(6, 3)
    a = np.zeros(6)
    a[[0, 2, 5]] = 1.0
    x = 0.1 * rng.normal(size=layout.total)
    opt = ConvexLipschitzOntoQuadratic(x, Logistic())
    losses = [fm_ctr_step(opt, 0.4, a, 1, layout) for _ in range(20)]
    assert all(l2 < l1 for l1, l2 in zip(losses, losses[1:]))


def test_fm_requires_logistic_and_valid_labels():
    layout = FMLayout(2, 1)
    with pytest.raises(ValueError):
        fm_ctr_step(ConvexLipschitzOntoQuadratic(np.zeros(5), AbsValue()), 0.1, [1, 0], 1, layout)
    with pytest.raises(ValueError):
        FMCTROracle([1.0, 0.0], 0, layout)
    with pytest.raises(StepSizeError):
        fm_ctr_step(ConvexLipschitzOntoQuadratic(np.zeros(5), Logistic()), 2.0, [2.0, 0.0], 1,
                    layout)
