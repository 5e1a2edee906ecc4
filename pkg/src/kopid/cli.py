"""Command-line interface: simulate datasets, identify systems, run benchmarks.

Exit codes: 0 on success, 2 on invalid configuration or arguments, 3 when
some estimator runs failed but the harness completed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from .benchmark import ExperimentConfig, InvalidConfigError, run_benchmark
from .estimators import kop_estimate, ls_op
from .hammerstein import (
    LegendreBasis,
    basis_matrix,
    load_dataset,
    random_system,
    save_dataset,
    simulate,
    snr_to_sigma2,
)
from .tensor_ops import toeplitz_mat

EXIT_OK = 0
EXIT_BAD_CONFIG = 2
EXIT_PARTIAL_FAILURE = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kopid",
        description="Hammerstein system identification toolkit "
        "(KOP kernel-based and least-squares overparameterization estimators).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a random system and dataset")
    sim.add_argument("--n", type=int, default=30, help="impulse response length")
    sim.add_argument("--p", type=int, default=5, help="number of basis coefficients")
    sim.add_argument("--N", type=int, default=1000, help="number of samples")
    sim.add_argument("--snr", type=float, default=10.0, help="signal-to-noise ratio")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", type=Path, required=True, help="output CSV path")

    ident = sub.add_parser("identify", help="estimate a system from a dataset")
    ident.add_argument("dataset", type=Path, help="CSV dataset written by `simulate`")
    ident.add_argument("--method", choices=("kop", "lsop"), default="kop")
    ident.add_argument("--n", type=int, default=None, help="impulse response length")
    ident.add_argument("--p", type=int, default=None, help="number of basis coefficients")
    ident.add_argument("--seed", type=int, default=0)
    ident.add_argument("--out", type=Path, default=None, help="report JSON (default stdout)")

    bench = sub.add_parser("benchmark", help="run the Monte Carlo comparison study")
    bench.add_argument("--config", type=Path, default=None, help="JSON config file")
    bench.add_argument("--runs", type=int, default=None)
    bench.add_argument("--snr", type=float, action="append", default=None,
                       help="SNR level (repeatable)")
    bench.add_argument("--n", type=int, default=None)
    bench.add_argument("--p", type=int, default=None)
    bench.add_argument("--N", type=int, default=None)
    bench.add_argument("--seed", type=int, default=None)
    bench.add_argument("--out", type=str, default=None, help="output directory")
    bench.add_argument("--workers", type=int, default=None)
    bench.add_argument("--estimators", type=str, default=None,
                       help="comma-separated subset of kop,lsop")
    bench.add_argument("--paper-scale", action="store_true", default=None,
                       help="run the full 200-runs-per-SNR study")
    return parser


def _cmd_simulate(args) -> int:
    rng = np.random.default_rng(args.seed)
    system = random_system(rng, args.n, args.p)
    u = rng.standard_normal(args.N)
    sigma2 = snr_to_sigma2(system, u, args.snr)
    record = simulate(system, u, np.sqrt(sigma2), rng, snr=args.snr)
    save_dataset(
        record,
        args.out,
        meta={
            "n": args.n,
            "p": args.p,
            "seed": args.seed,
            "g": system.g.tolist(),
            "c": system.c.tolist(),
            "tail_energy": system.tail_energy,
        },
    )
    print(f"wrote {args.out} ({args.N} samples, snr={args.snr:g}, sigma2={sigma2:.6g})")
    return EXIT_OK


def _cmd_identify(args) -> int:
    record = load_dataset(args.dataset)
    n = args.n or record.meta.get("n")
    p = args.p or record.meta.get("p")
    if not n or not p:
        print("error: --n and --p are required when the dataset has no metadata",
              file=sys.stderr)
        return EXIT_BAD_CONFIG
    basis = LegendreBasis(int(p))
    t0 = time.perf_counter()
    try:
        if args.method == "lsop":
            Phi = toeplitz_mat(basis_matrix(record.u, basis), int(n))
            report = ls_op(record.y, Phi, int(n), int(p))
        else:
            report = kop_estimate(record.y, record.u, basis, int(n), seed=args.seed)
    except Exception as err:  # noqa: BLE001 - report and signal via exit code
        print(f"error: estimation failed: {err}", file=sys.stderr)
        return EXIT_PARTIAL_FAILURE
    payload = report.to_dict()
    payload["timings"]["total_s"] = time.perf_counter() - t0
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    if args.config:
        config = ExperimentConfig.from_json(args.config)
    else:
        config = ExperimentConfig()
    overrides = {}
    if args.runs is not None:
        overrides["runs"] = args.runs
    if args.snr:
        overrides["snrs"] = tuple(args.snr)
    if args.n is not None:
        overrides["n"] = args.n
    if args.p is not None:
        overrides["p"] = args.p
    if args.N is not None:
        overrides["N"] = args.N
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["outdir"] = args.out
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.estimators is not None:
        overrides["estimators"] = tuple(args.estimators.split(","))
    if args.paper_scale:
        overrides["paper_scale"] = True
    config = dataclasses.replace(config, **overrides)

    results = run_benchmark(config)
    failures = sum(1 for r in results if r.error)
    print(f"completed {len(results)} estimator runs -> {config.outdir}"
          + (f" ({failures} failures)" if failures else ""))
    return EXIT_PARTIAL_FAILURE if failures else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "identify":
            return _cmd_identify(args)
        return _cmd_benchmark(args)
    except InvalidConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
