"""Regularizers r(x) with closed-form proximal operators.

The Moreau envelope is derived from the prox for every regularizer:

    M_eta r(x) = r(p) + ||p - x||^2 / (2 eta),   p = prox_{eta r}(x)

so prox and envelope can never disagree.
"""

from __future__ import annotations

import numpy as np


class Regularizer:
    kind = ""

    def __init__(self, mu=0.0):
        mu = float(mu)
        if not mu >= 0:
            raise ValueError(f"regularization coefficient must be non-negative, got {mu}")
        self.mu = mu

    def eval(self, x) -> float:
        raise NotImplementedError

    def prox(self, eta, x) -> np.ndarray:
        raise NotImplementedError

    def subgradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def envelope(self, eta, x) -> float:
        p = self.prox(eta, x)
        diff = p - x
        return self.eval(p) + 0.5 * float(diff @ diff) / eta

    def __repr__(self):
        return f"{type(self).__name__}({self.mu})"


class L1Reg(Regularizer):
    """mu * ||x||_1; prox is soft thresholding at eta * mu."""

    kind = "l1"

    def eval(self, x):
        return self.mu * float(np.abs(x).sum())

    def prox(self, eta, x):
        x = np.asarray(x, dtype=np.float64)
        return np.sign(x) * np.maximum(np.abs(x) - eta * self.mu, 0.0)

    def subgradient(self, x):
        return self.mu * np.sign(x)


class L2SquaredReg(Regularizer):
    """(mu / 2) * ||x||_2^2."""

    kind = "l2-squared"

    def eval(self, x):
        x = np.asarray(x, dtype=np.float64)
        return 0.5 * self.mu * float(x @ x)

    def prox(self, eta, x):
        return np.asarray(x, dtype=np.float64) / (1.0 + self.mu * eta)

    def subgradient(self, x):
        return self.mu * np.asarray(x, dtype=np.float64)


class L2NormReg(Regularizer):
    """mu * ||x||_2 (not squared); prox shrinks the whole vector towards 0."""

    kind = "l2-norm"

    def eval(self, x):
        return self.mu * float(np.linalg.norm(x))

    def prox(self, eta, x):
        x = np.asarray(x, dtype=np.float64)
        thresh = eta * self.mu
        nrm = float(np.linalg.norm(x))
        if thresh == 0:
            return x.copy()
        return (1.0 - thresh / max(thresh, nrm)) * x

    def subgradient(self, x):
        x = np.asarray(x, dtype=np.float64)
        nrm = float(np.linalg.norm(x))
        return self.mu * x / nrm if nrm > 0 else np.zeros_like(x)


class ZeroReg(Regularizer):
    kind = "zero"

    def __init__(self, mu=0.0):
        super().__init__(0.0)

    def eval(self, x):
        return 0.0

    def prox(self, eta, x):
        return np.array(x, dtype=np.float64)

    def subgradient(self, x):
        return np.zeros_like(np.asarray(x, dtype=np.float64))

    def envelope(self, eta, x):
        return 0.0


REGULARIZERS = {
    "l1": L1Reg,
    "l2-squared": L2SquaredReg,
    "l2-norm": L2NormReg,
    "zero": ZeroReg,
}


def make_regularizer(kind: str, mu: float = 0.0) -> Regularizer:
    try:
        cls = REGULARIZERS[kind]
    except KeyError:
        raise ValueError(f"unknown regularizer {kind!r}; choose from {sorted(REGULARIZERS)}")
    return cls(mu)


def reg_eval(r: Regularizer, x) -> float:
    return r.eval(x)


def reg_prox(r: Regularizer, eta: float, x) -> np.ndarray:
    if not eta > 0:
        raise ValueError(f"prox parameter must be positive, got {eta}")
    return r.prox(eta, x)


def reg_envelope(r: Regularizer, eta: float, x) -> float:
    if not eta > 0:
        raise ValueError(f"envelope parameter must be positive, got {eta}")
    return r.envelope(eta, x)
