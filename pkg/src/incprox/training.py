"""Training loop shared by the CLI: optimizer construction, epochs, metrics CSV."""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import (
    IncrementalOptimizer,
    NonFiniteError,
    RngSpec,
    StepSchedule,
    StepSizeError,
    as_vector,
    check_step_size,
)
from .data import (
    LINEAR_PROBLEMS,
    PROBLEMS,
    Dataset,
    default_format,
    fm_total_dim,
    generate_dataset,
    parse_dataset,
    read_truth,
    truth_path,
)
from .fm import FMCTROracle, FMLayout
from .outer import AbsValue, HalfSquared, Hinge, Logistic, OuterFunction
from .prox_linear import IncConvexOnLinear, IncRegularizedConvexOnLinear
from .prox_minibatch import MAX_BATCH, MiniBatchConvLinOptimizer
from .prox_quadratic import ConvexLipschitzOntoQuadratic, PhaseRetrievalOracle, max_step_for
from .regularizers import Regularizer, ZeroReg, make_regularizer

OUTER_FOR_PROBLEM = {
    "least-squares": HalfSquared,
    "robust-regression": AbsValue,
    "logistic": Logistic,
    "hinge": Hinge,
    "phase-retrieval": AbsValue,
    "fm-ctr": Logistic,
}
MINIBATCH_PROBLEMS = ("least-squares", "logistic", "hinge")
OPTIMIZERS = ("prox", "sgd-baseline")
CSV_COLUMNS = ("epoch", "avg_loss", "dist_to_truth", "wall_ms")


@dataclass
class TrainingConfig:
    problem: str
    optimizer: str = "prox"
    reg_kind: str = "zero"
    reg_coef: float = 0.0
    schedule: StepSchedule = field(default_factory=StepSchedule)
    epochs: int = 1
    batch_size: int = 1
    dim: int | None = None
    embedding_dim: int = 4
    samples: int = 100
    seed: int = 0
    data: str | None = None
    shuffle: bool = True
    init_scale: float | None = None

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}; choose from {PROBLEMS}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}; choose from {OPTIMIZERS}")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not 1 <= self.batch_size <= MAX_BATCH:
            raise ValueError(f"batch size must be in [1, {MAX_BATCH}]")
        if self.batch_size > 1 and self.problem not in MINIBATCH_PROBLEMS:
            raise ValueError(f"mini-batches are supported for {MINIBATCH_PROBLEMS} only")
        if self.problem == "fm-ctr" and self.embedding_dim < 1:
            raise ValueError("fm-ctr needs an embedding dimension of at least 1")
        regularized = self.reg_kind != "zero" and self.reg_coef > 0
        if regularized and (self.problem not in LINEAR_PROBLEMS or self.batch_size > 1):
            raise ValueError("regularizers apply to single-sample linear problems only")
        make_regularizer(self.reg_kind, self.reg_coef)
        RngSpec(self.seed)
        return self

    def effective_init_scale(self):
        if self.init_scale is not None:
            return self.init_scale
        # x = 0 is a stationary point of both quadratic problems
        return 0.1 if self.problem in ("phase-retrieval", "fm-ctr") else 0.0

    def digest(self):
        payload = asdict(self)
        payload["schedule"] = asdict(self.schedule)
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    avg_loss: float
    dist_to_truth: float | None
    wall_ms: float


# ---- subgradient baseline -----------------------------------------------


class SGDBaseline(IncrementalOptimizer):
    """Plain incremental (sub)gradient steps, x <- x - eta * grad f(x)."""

    def __init__(self, x, h: OuterFunction, r: Regularizer | None = None):
        super().__init__(x)
        self.h = h
        self.r = r if r is not None else ZeroReg()

    def step(self, eta, a, b):
        eta = check_step_size(eta)
        a = as_vector(a, "a")
        # overflow is reported by _assign as divergence
        with np.errstate(over="ignore", invalid="ignore"):
            beta = float(a @ self._x) + float(b)
            loss = float(self.h.eval(beta)) + self.r.eval(self._x)
            grad = float(self.h.derivative(beta)) * a + self.r.subgradient(self._x)
            update = self._x - eta * grad
        self._assign(update)
        return loss

    def step_batch(self, eta, A, b):
        eta = check_step_size(eta)
        with np.errstate(over="ignore", invalid="ignore"):
            c = A @ self._x + b
            losses = np.asarray(self.h.eval(c), dtype=np.float64)
            grad = A.T @ np.asarray(self.h.derivative(c)) / A.shape[0]
            update = self._x - eta * grad
        self._assign(update)
        return losses

    def step_quadratic(self, eta, oracle):
        eta = check_step_size(eta)
        with np.errstate(over="ignore", invalid="ignore"):
            g = oracle.eval(self._x)
            loss = float(self.h.eval(g))
            grad = float(self.h.derivative(g)) * oracle_gradient(oracle, self._x)
            update = self._x - eta * grad
        self._assign(update)
        return loss


def sgd_baseline_step(state: SGDBaseline, eta, a, b, h: OuterFunction | None = None):
    if h is not None and h != state.h:
        raise ValueError("outer function does not match the optimizer state")
    return state.step(eta, a, b)


def oracle_gradient(oracle, x) -> np.ndarray:
    """Gradient of the inner quadratic g at x."""
    if isinstance(oracle, PhaseRetrievalOracle):
        return 2.0 * float(oracle.a @ x) * oracle.a
    if isinstance(oracle, FMCTROracle):
        layout, a, y = oracle.layout, oracle.a, oracle.y
        grad = np.zeros(layout.total)
        gw0, gw, gV = layout.decompose(grad)
        _, _, V = layout.decompose(x)
        gw0[0] = 1.0
        gw[:] = a
        summed = V @ a
        gV[:] = np.outer(summed, a) - V * (a * a)
        return -y * grad
    return oracle.A @ x + oracle.b


# ---- training loop ------------------------------------------------------


def _distance(problem, x, truth):
    if truth is None or truth.shape != x.shape:
        return None
    d = float(np.linalg.norm(x - truth))
    if problem == "phase-retrieval":
        # the planted signal is only identifiable up to a global sign
        d = min(d, float(np.linalg.norm(x + truth)))
    return d


def _param_dim(config, ds):
    return fm_total_dim(ds.dim, config.embedding_dim) if config.problem == "fm-ctr" else ds.dim


def _oracle(config, ds, i, layout):
    if config.problem == "phase-retrieval":
        return PhaseRetrievalOracle(ds.A[i], ds.target[i])
    return FMCTROracle(ds.A[i], int(ds.target[i]), layout)


def step_bound(config, ds, h=None) -> float:
    """Smallest step-size bound over the dataset for the quadratic problems."""
    if config.problem not in ("phase-retrieval", "fm-ctr"):
        return math.inf
    h = h or OUTER_FOR_PROBLEM[config.problem]()
    layout = FMLayout(ds.dim, config.embedding_dim) if config.problem == "fm-ctr" else None
    return min(max_step_for(_oracle(config, ds, i, layout), h) for i in range(len(ds)))


def load_or_generate(config: TrainingConfig):
    if config.data is not None:
        ds = parse_dataset(config.data, default_format(config.problem), config.dim)
        tp = truth_path(config.data)
        return ds, (read_truth(tp) if tp.exists() else None)
    if config.dim is None:
        raise ValueError("dimension is required when no data file is given")
    return generate_dataset(
        config.problem, config.samples, config.dim, config.seed, embedding_dim=config.embedding_dim
    )


def run_training(config: TrainingConfig, dataset: Dataset | None = None, truth=None, *,
                 on_epoch=None, timing=True):
    """Train and return the list of per-epoch metrics.

    Each epoch visits the samples in a seeded random order (or sequentially
    with ``shuffle=False``) in ceil(n / batch_size) steps. The reported loss
    is the mean of the pre-step losses of every visited sample. Raises
    ``StepSizeError`` before any step when a quadratic problem's bound is
    violated, and ``NonFiniteError`` (carrying the metrics so far as
    ``.metrics``) on divergence.
    """
    config.validate()
    if dataset is None:
        dataset, truth = load_or_generate(config)
    ds = dataset
    h = OUTER_FOR_PROBLEM[config.problem]()
    r = make_regularizer(config.reg_kind, config.reg_coef)
    rng = RngSpec(config.seed).generator()

    quadratic = config.problem in ("phase-retrieval", "fm-ctr")
    layout = FMLayout(ds.dim, config.embedding_dim) if config.problem == "fm-ctr" else None
    if quadratic and config.optimizer == "prox":
        bound = step_bound(config, ds, h)
        if not config.schedule.max_step_size < bound:
            raise StepSizeError(
                f"step size {config.schedule.max_step_size} is not below the dataset bound {bound}",
                bound=bound,
            )

    x = config.effective_init_scale() * rng.standard_normal(_param_dim(config, ds))
    if config.optimizer == "sgd-baseline":
        opt = SGDBaseline(x, h, r)
    elif quadratic:
        opt = ConvexLipschitzOntoQuadratic(x, h)
    elif config.batch_size > 1:
        opt = MiniBatchConvLinOptimizer(x, h)
    elif isinstance(r, ZeroReg) or r.mu == 0:
        opt = IncConvexOnLinear(x, h)
    else:
        opt = IncRegularizedConvexOnLinear(x, h, r)

    n, m = len(ds), config.batch_size
    metrics = []
    t = 0
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        total = 0.0
        try:
            for lo in range(0, n, m):
                idx = order[lo:lo + m]
                t += 1
                eta = config.schedule(t)
                if quadratic:
                    oracle = _oracle(config, ds, idx[0], layout)
                    if config.optimizer == "sgd-baseline":
                        total += opt.step_quadratic(eta, oracle)
                    else:
                        total += opt.step(eta, oracle)
                elif m > 1:
                    A, b = ds.A[idx], ds.target[idx]
                    step = opt.step_batch if config.optimizer == "sgd-baseline" else opt.step
                    total += float(np.sum(step(eta, A, b)))
                else:
                    total += opt.step(eta, ds.A[idx[0]], ds.target[idx[0]])
        except NonFiniteError as exc:
            exc.metrics = metrics
            raise
        wall = (time.perf_counter() - start) * 1e3 if timing else float("nan")
        avg = total / n
        if not math.isfinite(avg):
            err = NonFiniteError(f"average loss overflowed in epoch {epoch}")
            err.metrics = metrics
            raise err
        row = EpochMetrics(epoch, avg, _distance(config.problem, opt.x, truth), wall)
        metrics.append(row)
        if on_epoch is not None:
            on_epoch(row)
    return metrics


def format_metrics_csv(config: TrainingConfig, metrics, *, timing=False) -> str:
    """Metrics CSV. ``wall_ms`` stays empty unless ``timing`` so output is reproducible."""
    lines = [
        f"# config_sha256={config.digest()}",
        f"# seed={config.seed}",
        f"# rng={RngSpec(config.seed).algorithm}",
        ",".join(CSV_COLUMNS),
    ]
    for row in metrics:
        dist = "" if row.dist_to_truth is None else repr(row.dist_to_truth)
        wall = f"{row.wall_ms:.3f}" if timing and math.isfinite(row.wall_ms) else ""
        lines.append(f"{row.epoch},{row.avg_loss!r},{dist},{wall}")
    return "\n".join(lines) + "\n"
