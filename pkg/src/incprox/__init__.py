"""Exact incremental proximal-point optimizers computed through convex duality."""

from .core import (
    CapabilityError,
    DimensionError,
    IncProxError,
    NonFiniteError,
    RngSpec,
    SolverError,
    StepSchedule,
    StepSizeError,
    schedule_step_size,
)
from .fm import FMCTROracle, FMLayout, fm_ctr_step, fm_eval, fm_max_step
from .outer import AbsValue, HalfSquared, Hinge, Logistic, make_outer, solve_scalar_dual
from .prox_linear import IncConvexOnLinear, IncRegularizedConvexOnLinear
from .prox_minibatch import MiniBatchConvLinOptimizer
from .prox_quadratic import (
    ConvexLipschitzOntoQuadratic,
    DenseQuadraticOracle,
    PhaseRetrievalOracle,
    QuadraticOracle,
    validate_step_size,
)
from .regularizers import L1Reg, L2NormReg, L2SquaredReg, ZeroReg, make_regularizer

__version__ = "0.1.0"

__all__ = [
    "AbsValue",
    "CapabilityError",
    "ConvexLipschitzOntoQuadratic",
    "DenseQuadraticOracle",
    "DimensionError",
    "FMCTROracle",
    "FMLayout",
    "HalfSquared",
    "Hinge",
    "IncConvexOnLinear",
    "IncProxError",
    "IncRegularizedConvexOnLinear",
    "L1Reg",
    "L2NormReg",
    "L2SquaredReg",
    "Logistic",
    "MiniBatchConvLinOptimizer",
    "NonFiniteError",
    "PhaseRetrievalOracle",
    "QuadraticOracle",
    "RngSpec",
    "SolverError",
    "StepSchedule",
    "StepSizeError",
    "ZeroReg",
    "fm_ctr_step",
    "fm_eval",
    "fm_max_step",
    "make_outer",
    "make_regularizer",
    "schedule_step_size",
    "solve_scalar_dual",
    "validate_step_size",
]
