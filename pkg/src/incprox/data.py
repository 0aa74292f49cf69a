"""Datasets: synthetic generation, dense/sparse text formats, ground-truth sidecars.

Dense rows are ``target,a1,...,ad``. Sparse rows are ``y idx:val ...`` with
1-based, strictly increasing indices. The meaning of ``target`` depends on
the problem:

- least-squares, robust-regression: b in h(a^T x + b)
- logistic, hinge: labels are folded into the row, a <- -y a, with b = 0
  (logistic) or b = 1 (hinge margin), so every linear problem is h(a^T x + b)
- phase-retrieval: the measurement y = (a^T x)^2
- fm-ctr (sparse): the click label y in {-1, +1}
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import RngSpec

LINEAR_PROBLEMS = ("least-squares", "robust-regression", "logistic", "hinge")
QUADRATIC_PROBLEMS = ("phase-retrieval", "fm-ctr")
PROBLEMS = LINEAR_PROBLEMS + QUADRATIC_PROBLEMS


class DatasetFormatError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass
class Dataset:
    A: np.ndarray  # n x d feature rows
    target: np.ndarray  # n values, see module docstring
    fmt: str = "dense"

    def __post_init__(self):
        if self.fmt not in ("dense", "sparse"):
            raise ValueError(f"unknown dataset format {self.fmt!r}")
        if self.A.ndim != 2 or self.A.shape[0] != self.target.shape[0]:
            raise ValueError(f"inconsistent dataset shapes {self.A.shape} and {self.target.shape}")

    def __len__(self):
        return self.A.shape[0]

    @property
    def dim(self):
        return self.A.shape[1]


def default_format(problem):
    return "sparse" if problem == "fm-ctr" else "dense"


def fm_total_dim(d, k):
    return 1 + d * (1 + k)


# ---- generation ---------------------------------------------------------


def generate_dataset(problem, n, d, seed, *, noise=0.0, embedding_dim=4, active_fields=3):
    """Synthetic dataset with a planted solution; returns ``(dataset, truth)``."""
    if problem not in PROBLEMS:
        raise ValueError(f"unknown problem {problem!r}; choose from {PROBLEMS}")
    if n < 1 or d < 1:
        raise ValueError(f"need at least one sample and one feature, got n={n}, d={d}")
    if noise < 0:
        raise ValueError("noise level must be non-negative")
    rng = RngSpec(seed).generator()

    if problem == "fm-ctr":
        return _generate_fm(rng, n, d, embedding_dim, active_fields)

    truth = rng.standard_normal(d)
    A = rng.standard_normal((n, d))
    margin = A @ truth
    if problem == "least-squares":
        target = -margin + noise * rng.standard_normal(n)
    elif problem == "robust-regression":
        # sparse gross outliers on top of optional dense noise
        target = -margin + noise * rng.standard_normal(n)
        outliers = rng.random(n) < 0.1
        target[outliers] += 10.0 * rng.standard_normal(int(outliers.sum()))
    elif problem in ("logistic", "hinge"):
        prob = 1.0 / (1.0 + np.exp(-margin))
        y = np.where(rng.random(n) < prob, 1.0, -1.0)
        A = -y[:, None] * A
        target = np.zeros(n) if problem == "logistic" else np.ones(n)
    else:  # phase retrieval
        target = margin**2
        if noise:
            target = np.abs(target + noise * rng.standard_normal(n))
    return Dataset(A, target, "dense"), truth


def _generate_fm(rng, n, d, k, active):
    if k < 1:
        raise ValueError("embedding dimension must be at least 1")
    if not 1 <= active <= d:
        raise ValueError(f"active fields must be in [1, {d}], got {active}")
    w0 = rng.standard_normal()
    w = rng.standard_normal(d)
    V = rng.standard_normal((k, d)) / math.sqrt(k)
    truth = np.concatenate([[w0], w, V.reshape(-1)])
    A = np.zeros((n, d))
    for i in range(n):
        A[i, rng.choice(d, size=active, replace=False)] = 1.0
    # planted model scores
    summed = A @ V.T
    score = w0 + A @ w + 0.5 * (np.sum(summed**2, axis=1) - A @ np.sum(V**2, axis=0))
    y = np.where(rng.random(n) < 1.0 / (1.0 + np.exp(-score)), 1.0, -1.0)
    return Dataset(A, y, "sparse"), truth


# ---- text formats -------------------------------------------------------


def _fmt(v):
    return repr(float(v))


def write_dataset(ds: Dataset, path):
    with open(path, "w", encoding="utf-8") as f:
        for row, t in zip(ds.A, ds.target):
            if ds.fmt == "dense":
                f.write(",".join([_fmt(t)] + [_fmt(v) for v in row]) + "\n")
            else:
                nz = np.flatnonzero(row)
                label = str(int(t)) if float(t).is_integer() else _fmt(t)
                f.write(" ".join([label] + [f"{i + 1}:{_fmt(row[i])}" for i in nz]) + "\n")


def _float(tok, lineno):
    try:
        v = float(tok)
    except ValueError:
        raise DatasetFormatError(f"not a number: {tok!r}", lineno) from None
    if not math.isfinite(v):
        raise DatasetFormatError(f"non-finite value {tok!r}", lineno)
    return v


def parse_dataset(path, fmt="dense", dim=None) -> Dataset:
    """Read a dataset file. ``dim`` is required to bound sparse indices, else inferred."""
    if fmt not in ("dense", "sparse"):
        raise ValueError(f"unknown dataset format {fmt!r}")
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    rows, targets = [], []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if fmt == "dense":
            vals = [_float(tok, lineno) for tok in line.split(",")]
            if len(vals) < 2:
                raise DatasetFormatError("need a target and at least one feature", lineno)
            if rows and len(vals) - 1 != len(rows[0]):
                raise DatasetFormatError(
                    f"expected {len(rows[0])} features, got {len(vals) - 1}", lineno
                )
            targets.append(vals[0])
            rows.append(vals[1:])
        else:
            toks = line.split()
            targets.append(_float(toks[0], lineno))
            entries, last = {}, 0
            for tok in toks[1:]:
                idx_s, sep, val_s = tok.partition(":")
                if not sep:
                    raise DatasetFormatError(f"expected idx:val, got {tok!r}", lineno)
                try:
                    idx = int(idx_s)
                except ValueError:
                    raise DatasetFormatError(f"bad index {idx_s!r}", lineno) from None
                if idx < 1:
                    raise DatasetFormatError(f"indices are 1-based, got {idx}", lineno)
                if idx <= last:
                    raise DatasetFormatError(f"indices not increasing at {idx}", lineno)
                if dim is not None and idx > dim:
                    raise DatasetFormatError(f"index {idx} out of range for dimension {dim}", lineno)
                entries[idx - 1] = _float(val_s, lineno)
                last = idx
            rows.append(entries)
    if not rows:
        raise DatasetFormatError(f"{path}: no observations")

    if fmt == "dense":
        A = np.array(rows, dtype=np.float64)
        if dim is not None and A.shape[1] != dim:
            raise DatasetFormatError(f"rows have {A.shape[1]} features, expected {dim}")
    else:
        d = dim if dim is not None else max((max(r) + 1 for r in rows if r), default=1)
        A = np.zeros((len(rows), d))
        for i, r in enumerate(rows):
            for j, v in r.items():
                A[i, j] = v
    return Dataset(A, np.array(targets, dtype=np.float64), fmt)


def truth_path(data_path):
    return Path(f"{data_path}.truth.csv")


def write_truth(path, truth):
    Path(path).write_text(",".join(_fmt(v) for v in truth) + "\n", encoding="utf-8")


def read_truth(path) -> np.ndarray:
    text = Path(path).read_text(encoding="utf-8").strip()
    return np.array([float(t) for t in text.split(",")], dtype=np.float64)
