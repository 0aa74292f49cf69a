"""Command-line entry point: ``incprox generate`` and ``incprox train``.

Exit codes: 0 success, 1 data or runtime error, 2 usage error,
3 step size above the dataset bound, 4 divergence (non-finite parameters).
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .core import IncProxError, NonFiniteError, StepSchedule, StepSizeError
from .data import PROBLEMS, generate_dataset, read_truth, truth_path, write_dataset, write_truth
from .training import TrainingConfig, format_metrics_csv, load_or_generate, run_training

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_STEP_BOUND, EXIT_DIVERGED = 0, 1, 2, 3, 4

_REG_KINDS = {"none": "zero", "l1": "l1", "l2": "l2-squared", "l2norm": "l2-norm"}
_SCHEDULES = {"const": "constant", "inv-sqrt": "inverse-sqrt"}
_OPTIMIZERS = {"prox": "prox", "sgd": "sgd-baseline", "sgd-baseline": "sgd-baseline"}


def _build_parser():
    parser = argparse.ArgumentParser(prog="incprox", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic dataset and its ground truth")
    gen.add_argument("--problem", required=True, choices=PROBLEMS)
    gen.add_argument("--dim", type=int, required=True, help="feature count d")
    gen.add_argument("--samples", type=int, required=True)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True, type=Path)
    gen.add_argument("--noise", type=float, default=0.0)
    gen.add_argument("--embedding-dim", type=int, default=4, help="fm-ctr latent dimension k")
    gen.add_argument("--active-fields", type=int, default=3, help="fm-ctr ones per sample")

    tr = sub.add_parser("train", help="train and write per-epoch metrics")
    tr.add_argument("--problem", required=True, choices=PROBLEMS)
    tr.add_argument("--optimizer", choices=sorted(_OPTIMIZERS), default="prox")
    tr.add_argument("--step-size", type=float, required=True)
    tr.add_argument("--schedule", choices=sorted(_SCHEDULES), default="const")
    tr.add_argument("--epochs", type=int, default=10)
    tr.add_argument("--batch-size", type=int, default=1)
    tr.add_argument("--reg", choices=sorted(_REG_KINDS), default="none")
    tr.add_argument("--reg-coef", type=float, default=0.0)
    tr.add_argument("--data", help="dataset file; generated in memory when omitted")
    tr.add_argument("--truth", type=Path, help="ground truth (default: DATA.truth.csv if present)")
    tr.add_argument("--out", required=True, type=Path)
    tr.add_argument("--dim", type=int, help="feature count d (sparse bound or generation)")
    tr.add_argument("--samples", type=int, default=100, help="sample count when generating")
    tr.add_argument("--embedding-dim", type=int, default=4)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--shuffle", action=argparse.BooleanOptionalAction, default=True)
    tr.add_argument("--init-scale", type=float, help="std of the random initial parameters")
    tr.add_argument("--timing", action="store_true", help="fill the wall_ms column")
    tr.add_argument("--trials", type=int, default=1, help="independent seeds run in parallel")
    return parser


def _config_from_args(args) -> TrainingConfig:
    return TrainingConfig(
        problem=args.problem,
        optimizer=_OPTIMIZERS[args.optimizer],
        reg_kind=_REG_KINDS[args.reg],
        reg_coef=args.reg_coef,
        schedule=StepSchedule(_SCHEDULES[args.schedule], args.step_size),
        epochs=args.epochs,
        batch_size=args.batch_size,
        dim=args.dim,
        embedding_dim=args.embedding_dim,
        samples=args.samples,
        seed=args.seed,
        data=args.data,
        shuffle=args.shuffle,
        init_scale=args.init_scale,
    ).validate()


def _train_one(config: TrainingConfig, out: Path, truth_file, timing):
    """Run one training job; returns (exit code, message)."""
    try:
        dataset, truth = load_or_generate(config)
        if truth_file is not None:
            truth = read_truth(truth_file)
        metrics = run_training(config, dataset, truth, timing=timing)
    except StepSizeError as exc:
        return EXIT_STEP_BOUND, f"step size rejected: {exc}"
    except NonFiniteError as exc:
        out.write_text(format_metrics_csv(config, getattr(exc, "metrics", []), timing=timing))
        return EXIT_DIVERGED, f"training diverged: {exc}"
    except (IncProxError, ValueError, OSError) as exc:
        return EXIT_ERROR, f"error: {exc}"
    out.write_text(format_metrics_csv(config, metrics, timing=timing))
    last = metrics[-1]
    return EXIT_OK, f"wrote {out} ({len(metrics)} epochs, final avg_loss {last.avg_loss:.6g})"


def _trial_out(out: Path, seed):
    return out.with_name(f"{out.stem}-seed{seed}{out.suffix}")


def cmd_generate(args):
    try:
        ds, truth = generate_dataset(
            args.problem, args.samples, args.dim, args.seed,
            noise=args.noise, embedding_dim=args.embedding_dim, active_fields=args.active_fields,
        )
        write_dataset(ds, args.out)
        write_truth(truth_path(args.out), truth)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"wrote {args.out} and {truth_path(args.out)}")
    return EXIT_OK


def cmd_train(args):
    try:
        config = _config_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.trials < 1:
        print("error: --trials must be at least 1", file=sys.stderr)
        return EXIT_USAGE

    if args.trials == 1:
        results = [_train_one(config, args.out, args.truth, args.timing)]
    else:
        seeds = [config.seed + i for i in range(args.trials)]
        with ProcessPoolExecutor() as pool:
            futures = [
                pool.submit(_train_one, replace(config, seed=seed), _trial_out(args.out, seed),
                            args.truth, args.timing)
                for seed in seeds
            ]
            results = [f.result() for f in futures]

    worst = EXIT_OK
    for code, msg in results:
        print(msg, file=sys.stderr if code else sys.stdout)
        worst = max(worst, code)
    return worst


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.command == "generate":
        return cmd_generate(args)
    return cmd_train(args)


if __name__ == "__main__":
    sys.exit(main())
