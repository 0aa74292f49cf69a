"""Quadratic oracle for factorization-machine click-through-rate training.

Parameters are packed as ``x = [w0, w (d entries), V (k x d, row-major)]``
where column ``V[:, i]`` is the latent vector of feature i. For a sample
(a, y) the inner function is g(x) = -y * fm(x; a), a quadratic with

    b = (-y, -y a, 0),  c = 0,
    latent block of A: -y (a a^T - diag(a^2)), acting on every row of V.

So (s A + I/eta) restricted to a row of V is diag(1/eta + y s a_i^2) - y s a a^T,
whose inverse is D + gamma r r^T (Sherman-Morrison). Only features with
a_i != 0 are touched; all other coordinates see the plain eta * I block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DimensionError, StepSizeError, as_vector, check_step_size
from .outer import Logistic
from .prox_quadratic import ConvexLipschitzOntoQuadratic, QuadraticOracle


@dataclass(frozen=True)
class FMLayout:
    d: int
    k: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"feature count must be positive, got {self.d}")
        if self.k < 1:
            raise ValueError(f"embedding dimension must be positive, got {self.k}")

    @property
    def linear(self):
        return 1 + self.d

    @property
    def pairwise(self):
        return self.k * self.d

    @property
    def total(self):
        return 1 + self.d * (1 + self.k)

    def decompose(self, x):
        """Views (w0 as a length-1 array, w, V) into ``x``; writes go through."""
        if x.shape != (self.total,):
            raise DimensionError(f"expected {self.total} parameters, got shape {x.shape}")
        return x[:1], x[1:self.linear], x[self.linear:].reshape(self.k, self.d)

    def concat(self, w0, w, V):
        return np.concatenate([np.atleast_1d(np.asarray(w0, dtype=np.float64)),
                               np.asarray(w, dtype=np.float64),
                               np.asarray(V, dtype=np.float64).reshape(-1)])


def fm_eval(layout: FMLayout, x, a) -> float:
    """w0 + <w, a> + sum_{i<j} a_i a_j <v_i, v_j>, in O(k nnz(a))."""
    a = as_vector(a, "a")
    if a.shape != (layout.d,):
        raise DimensionError(f"sample has {a.shape[0]} features, layout has {layout.d}")
    w0, w, V = layout.decompose(np.asarray(x, dtype=np.float64))
    mask = np.flatnonzero(a)
    am, Vm = a[mask], V[:, mask]
    summed = Vm @ am
    pair = 0.5 * (float(summed @ summed) - float(np.sum(am**2 * np.sum(Vm**2, axis=0))))
    return float(w0[0]) + float(w[mask] @ am) + pair


def fm_eigenvalue_bound(a) -> float:
    """Upper bound on |eigenvalue| of a a^T - diag(a^2).

    The matrix is PSD minus a diagonal, so eigenvalues lie in
    [-max a_i^2, ||a||^2 - min_{a_i != 0} a_i^2].
    """
    a = as_vector(a, "a")
    sq = a[a != 0] ** 2
    if sq.size == 0:
        return 0.0
    return max(float(sq.max()), float(sq.sum() - sq.min()))


def fm_max_step(a) -> float:
    bound = fm_eigenvalue_bound(a)
    return math.inf if bound == 0 else 1.0 / bound


@dataclass(frozen=True)
class FMInverseFactors:
    """(D + gamma r r^T) restricted to the active features ``mask``."""

    mask: np.ndarray
    D: np.ndarray
    r: np.ndarray
    gamma: float

    def apply(self, Z):
        """Right-multiply the rows of Z (k x nnz) by the symmetric inverse block."""
        # correctly rounded sums: padding the mask with zero features is a bitwise no-op
        proj = np.array([math.fsum(row) for row in Z * self.r])
        return Z * self.D + self.gamma * np.outer(proj, self.r)

    def dense(self):
        return np.diag(self.D) + self.gamma * np.outer(self.r, self.r)


def _check_s(s):
    s = float(s)
    if not 0 <= s <= 1:
        raise ValueError(f"dual variable must lie in [0, 1], got {s}")
    return s


def fm_inverse_factors(a, y, s, eta, mask=None) -> FMInverseFactors:
    a = as_vector(a, "a")
    s = _check_s(s)
    eta = check_step_size(eta)
    bound = fm_max_step(a)
    if not eta < bound:
        raise StepSizeError(f"step size {eta} violates the bound {bound}", bound=bound)
    mask = np.flatnonzero(a) if mask is None else np.asarray(mask, dtype=np.intp)
    am = a[mask]
    denom = 1.0 + eta * y * s * am**2
    D = eta / denom
    r = eta * am / denom
    gamma = y * s / (1.0 - math.fsum(eta * y * s * am**2 / denom))
    return FMInverseFactors(mask, D, r, gamma)


class FMCTROracle(QuadraticOracle):
    """g(x) = -y * fm(x; a) for one click-through sample."""

    has_dual_deriv = False

    def __init__(self, a, y, layout: FMLayout, mask=None):
        a = as_vector(a, "a")
        if a.shape != (layout.d,):
            raise DimensionError(f"sample has {a.shape[0]} features, layout has {layout.d}")
        if y not in (-1, 1):
            raise ValueError(f"labels must be -1 or +1, got {y}")
        self.a = a
        self.y = float(y)
        self.layout = layout
        self.dim = layout.total
        # active features; a wider mask only adds exact no-op coordinates
        self.mask = np.flatnonzero(a) if mask is None else np.asarray(mask, dtype=np.intp)

    def eval(self, x):
        return -self.y * fm_eval(self.layout, x, self.a)

    def scalar(self):
        return 0.0

    def _biases(self, s, eta, x):
        w0, w, V = self.layout.decompose(x)
        z0 = float(w0[0]) / eta + s * self.y
        z_lin = w[self.mask] / eta + s * self.y * self.a[self.mask]
        Z = V[:, self.mask] / eta
        return z0, z_lin, Z

    def solve_system(self, s, eta, x):
        s = _check_s(s)
        factors = fm_inverse_factors(self.a, self.y, s, eta, self.mask)
        out = np.array(x, dtype=np.float64)
        w0, w, V = self.layout.decompose(out)
        am = self.a[self.mask]
        # (V/eta)(D + gamma r r^T) rewritten without dividing by eta, so that
        # features with a_i = 0 pass through bit-for-bit
        scale = factors.D / eta
        rs = am / (1.0 + eta * self.y * s * am**2)
        Vm = V[:, self.mask]
        proj = np.array([math.fsum(row) for row in Vm * rs])
        w0[0] += eta * s * self.y
        w[self.mask] += eta * s * self.y * am
        V[:, self.mask] = Vm * scale + (factors.gamma * eta) * np.outer(proj, rs)
        return out

    def dual_eval(self, s, eta, x):
        """Exact up to the s-independent contribution of inactive features."""
        s = _check_s(s)
        factors = fm_inverse_factors(self.a, self.y, s, eta, self.mask)
        z0, z_lin, Z = self._biases(s, eta, x)
        quad = eta * z0 * z0 + eta * float(z_lin @ z_lin) + float(np.sum(factors.apply(Z) * Z))
        return -0.5 * quad + s * self.scalar()

    def spectral_radius(self):
        return fm_eigenvalue_bound(self.a)


def fm_dense_quadratic(layout: FMLayout, a, y):
    """Materialize (A, b, c) of g for small instances; used by tests and as a reference."""
    a = as_vector(a, "a")
    d, k = layout.d, layout.k
    A = np.zeros((layout.total, layout.total))
    tilde = np.outer(a, a) - np.diag(a * a)
    for row in range(k):
        idx = layout.linear + row * d + np.arange(d)
        A[np.ix_(idx, idx)] = -y * tilde
    b = np.zeros(layout.total)
    b[0] = -y
    b[1:layout.linear] = -y * a
    return A, b, 0.0


def fm_ctr_step(opt: ConvexLipschitzOntoQuadratic, eta, a, y, layout: FMLayout) -> float:
    """One exact proximal step on ln(1 + exp(-y fm(x; a)))."""
    if not isinstance(opt.h, Logistic):
        raise ValueError("factorization-machine steps use the logistic loss")
    return opt.step(eta, FMCTROracle(a, y, layout))


__all__ = [
    "FMCTROracle",
    "FMInverseFactors",
    "FMLayout",
    "fm_ctr_step",
    "fm_dense_quadratic",
    "fm_eigenvalue_bound",
    "fm_eval",
    "fm_inverse_factors",
    "fm_max_step",
]
