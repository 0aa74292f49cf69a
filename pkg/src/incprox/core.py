"""Shared types for the incremental optimizers.

Every optimizer in this package owns a parameter vector ``x`` and exposes a
``step`` method that observes one sample (or one mini-batch), replaces ``x``
by the exact proximal point of the observed cost, and returns the loss
evaluated at the parameters held *before* the step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# The one generator used repo-wide. PCG64 streams are bit-identical across
# platforms for a given seed.
RNG_ALGORITHM = "PCG64"


class IncProxError(Exception):
    """Base class of all errors raised by this package."""


class DimensionError(IncProxError, ValueError):
    pass


class StepSizeError(IncProxError, ValueError):
    """A step size violates a bound required for the step to be well defined."""

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class SolverError(IncProxError, RuntimeError):
    """An inner solver failed to converge or to bracket its solution."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class CapabilityError(IncProxError, TypeError):
    """An operation was requested that the function or oracle does not support."""


class NonFiniteError(IncProxError, FloatingPointError):
    pass


@dataclass(frozen=True)
class StepSchedule:
    """Step-size schedule: ``constant`` or ``inverse-sqrt`` (scale / sqrt(t))."""

    kind: str = "constant"
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "inverse-sqrt"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"schedule scale must be positive and finite, got {self.scale}")

    def __call__(self, t):
        return schedule_step_size(self, t)

    @property
    def max_step_size(self):
        # both kinds are non-increasing, so t=1 is the largest step
        return self.scale


def schedule_step_size(schedule: StepSchedule, t: int) -> float:
    if t < 1:
        raise ValueError(f"step counter starts at 1, got {t}")
    if schedule.kind == "constant":
        return schedule.scale
    return schedule.scale / math.sqrt(t)


@dataclass(frozen=True)
class RngSpec:
    seed: int
    algorithm: str = RNG_ALGORITHM

    def __post_init__(self):
        if self.algorithm != RNG_ALGORITHM:
            raise ValueError(f"only {RNG_ALGORITHM} is supported, got {self.algorithm!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(int(self.seed)))


def as_vector(v, name="vector"):
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def check_step_size(eta):
    eta = float(eta)
    if not (eta > 0 and math.isfinite(eta)):
        raise StepSizeError(f"step size must be positive and finite, got {eta}")
    return eta


def check_dim(v, d, name):
    if v.shape[-1] != d:
        raise DimensionError(f"{name} has dimension {v.shape[-1]}, parameters have {d}")


class IncrementalOptimizer:
    """Base class holding the parameter vector.

    The vector passed to the constructor is updated in place, so callers that
    keep a reference to it observe the training progress, mirroring the usual
    ``optimizer = Opt(x, ...); optimizer.step(...)`` idiom.
    """

    def __init__(self, x):
        x = np.asarray(x)
        if x.dtype != np.float64 or x.ndim != 1:
            raise DimensionError("parameters must be a one-dimensional float64 array")
        if not np.all(np.isfinite(x)):
            raise NonFiniteError("initial parameters contain NaN or Inf")
        self._x = x

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def dim(self) -> int:
        return self._x.shape[0]

    def _assign(self, new_x):
        if not np.all(np.isfinite(new_x)):
            raise NonFiniteError("step produced non-finite parameters")
        self._x[:] = new_x

    def step(self, eta, *observation):
        raise NotImplementedError
