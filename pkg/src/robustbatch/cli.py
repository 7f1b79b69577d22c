"""Command-line interface: dataset generation, estimation, sweeps, solver checks.

Exit codes: 0 success, 1 check failure, 2 usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import harness, synth
from .filtering import FilterConfig, learn_with_filter
from .knorm import SolverConfig, brute_force_k_norm, k_norm
from .haar import build_basis
from .shape import round_to_distribution
from .types import ShapeParams, load_dataset, save_dataset


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--step-size", type=float, default=None,
                        help="ascent step (default 1/||M||_F)")
    parser.add_argument("--max-outer-iters", type=int, default=500)
    parser.add_argument("--dykstra-iters", type=int, default=100)
    parser.add_argument("--feas-tol", type=float, default=1e-6)
    parser.add_argument("--value-tol", type=float, default=1e-4)


def _solver_from_args(args, ell: int) -> SolverConfig:
    return SolverConfig(
        ell=ell,
        step_size=args.step_size,
        max_outer_iters=args.max_outer_iters,
        dykstra_iters=args.dykstra_iters,
        feas_tol=args.feas_tol,
        value_tol=args.value_tol,
    )


def _cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    pieces = args.pieces if args.structured else None
    mu, nu = synth.sample_adversarial_pair(args.n, args.delta_adv, rng, pieces)
    data = synth.generate_corrupted_dataset(mu, nu, args.batches, args.eps, args.k, rng)
    save_dataset(data, args.out)
    bad = len(data.ground_truth.corrupted_indices)
    print(f"wrote {args.out}: N={data.N} batches ({data.N - bad} clean, {bad} corrupted), "
          f"n={data.n}, k={data.k}")
    return 0


def _cmd_estimate(args) -> int:
    data = load_dataset(args.infile)
    shape = ShapeParams(pieces=args.pieces, degree=args.degree)
    config = FilterConfig(
        threshold_c=args.threshold_c,
        plateau_window=args.plateau_window,
        solver=_solver_from_args(args, shape.ell),
    )
    raw, state = learn_with_filter(data, shape, eps=args.eps, omega=args.omega,
                                   config=config)
    doc = {
        "raw_estimate": raw.probs.tolist(),
        "rounds": state.rounds,
        "stop_reason": state.stop_reason,
        "knorm_trace": list(state.knorm_trace),
        "final_weights": state.weights.weights.tolist(),
    }
    if args.round:
        doc["rounded_estimate"] = round_to_distribution(raw.probs, shape).probs.tolist()
    if args.out:
        Path(args.out).write_text(json.dumps(doc))
        print(f"wrote {args.out}: stopped after {state.rounds} rounds ({state.stop_reason})")
    else:
        print(json.dumps(doc))
    return 0


def _cmd_experiment(args) -> int:
    config, filter_config = harness.load_experiment_config(args.config)
    records = harness.run_experiment(config, filter_config, csv_path=args.out,
                                     threads=args.threads)
    print(f"wrote {args.out}: {len(records)} records "
          f"({config.experiment_id}, {config.trials} trials)")
    return 0


def _cmd_oracle_check(args) -> int:
    if args.n > 16:
        print(f"oracle check refused: n={args.n} exceeds the brute-force limit 16",
              file=sys.stderr)
        return 2
    rng = np.random.default_rng(args.seed)
    basis = build_basis(int(math.log2(args.n)))
    config = _solver_from_args(args, args.ell)
    worst = 0.0
    for _ in range(args.trials):
        M = rng.normal(size=(args.n, args.n))
        M = (M + M.T) / 2.0
        value, _, _ = k_norm(basis, M, config)
        exact = brute_force_k_norm(M, args.n, args.ell)
        worst = max(worst, exact - value)
    print(f"max dominance violation over {args.trials} trials: {worst:.3e}")
    return 0 if worst <= 1e-3 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustbatch",
        description="Robust estimation of discrete distributions from corrupted batches",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser(
        "gen",
        help="generate a synthetic corrupted dataset (JSON)",
        epilog='dataset JSON: {"n": int, "k": int, "batches": [[int counts per '
               'symbol]], "ground_truth": {"mu": [float], "nu": [float], '
               '"corrupted_indices": [int]}}',
    )
    gen.add_argument("--n", type=int, required=True, help="domain size (even)")
    gen.add_argument("--k", type=int, required=True, help="samples per batch")
    gen.add_argument("--batches", type=int, required=True, help="number of batches N")
    gen.add_argument("--eps", type=float, default=0.0, help="corrupted fraction")
    gen.add_argument("--delta-adv", type=float, default=0.5,
                     help="distance of the planted corruption distribution")
    gen.add_argument("--pieces", type=int, default=5)
    gen.add_argument("--structured", action="store_true",
                     help="draw a piecewise-constant truth instead of an arbitrary one")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_gen)

    est = sub.add_parser(
        "estimate",
        help="run the filter on a dataset file",
        epilog='estimate JSON: {"raw_estimate": [float], "rounds": int, '
               '"stop_reason": str, "knorm_trace": [float], "final_weights": '
               '[float], "rounded_estimate": [float] with --round}',
    )
    est.add_argument("--in", dest="infile", required=True)
    est.add_argument("--pieces", type=int, default=5)
    est.add_argument("--degree", type=int, default=0)
    est.add_argument("--eps", type=float, default=0.0)
    est.add_argument("--omega", type=float, default=0.0)
    est.add_argument("--round", action=argparse.BooleanOptionalAction, default=True,
                     help="also emit the shape-rounded estimate")
    est.add_argument("--threshold-c", type=float, default=2.0)
    est.add_argument("--plateau-window", type=int, default=1)
    _add_solver_flags(est)
    est.add_argument("--out", default=None)
    est.set_defaults(func=_cmd_estimate)

    exp = sub.add_parser(
        "experiment",
        help="run a benchmark sweep from a JSON config",
        epilog="config JSON mirrors harness.ExperimentConfig; CSV columns: "
               "experiment_id, experiment_type, trial, param_name, param_value, "
               "estimator, error_ak, error_tv, rounds, stop_reason, runtime_ms, seed",
    )
    exp.add_argument("--config", required=True)
    exp.add_argument("--out", required=True)
    exp.add_argument("--threads", type=int, default=1)
    exp.set_defaults(func=_cmd_experiment)

    oc = sub.add_parser("oracle-check",
                        help="compare the solver against brute-force enumeration")
    oc.add_argument("--n", type=int, default=8)
    oc.add_argument("--ell", type=int, default=2)
    oc.add_argument("--trials", type=int, default=50)
    oc.add_argument("--seed", type=int, default=0)
    _add_solver_flags(oc)
    oc.set_defaults(func=_cmd_oracle_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
