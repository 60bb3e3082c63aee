"""Command-line surface: reproducible, scriptable runs of every subsystem.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 resource or
budget error.  Every run is fully determined by its flags; defaults are
echoed into the output so no configuration stays silent.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, groundstate, verify
from .dyadic import config_to_csv_lines, induce_tree
from .experiments import (
    DEFAULT_EXPERIMENT_DEPTH_PAD,
    STATISTICS,
    BallRegion,
    CubeRegion,
    ExperimentRow,
    estimate_variances,
    fit_exponent,
    poisson_baseline,
    summary_json,
    write_rows_csv,
)
from .groundstate import CountOverflowError
from .numtheory import DimensionError, base_level
from .oracle import OracleBudgetError
from .partition_function import (
    ConvergenceError,
    MemoryBudgetError,
    build_tables,
    log_partition,
)
from .sampler import SamplerState, sample_partition, sample_points

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3


def _json_float(x: float) -> float:
    # json emits repr, which round-trips float64 exactly
    return float(x)


def _config_dict(args, fields) -> dict:
    return {name: getattr(args, name) for name in fields}


def cmd_ground(args) -> int:
    n, d = args.n, args.d
    row = {
        "command": "ground",
        "n": n,
        "d": d,
        "L": str(groundstate.ground_energy(n, d)),
        "D": str(groundstate.energy_increment(n, d)),
        "h": base_level(n, d),
    }
    try:
        # cap at what an exact decimal print can carry; past it report the log weight
        row["b"] = str(groundstate.count_ground_states(n, d, max_bits=12_000))
    except CountOverflowError:
        row["log_gsw"] = _json_float(groundstate.ground_state_weight(n, d).value)
    if args.json:
        print(json.dumps(row))
    else:
        parts = [f"L_{n} = {row['L']}", f"D_{n} = {row['D']}", f"h_{n} = {row['h']}"]
        if "b" in row:
            parts.append(f"b_{n} = {row['b']}")
        else:
            parts.append(f"log GSW({n}) = {row['log_gsw']!r}")
        print("  ".join(parts))
    return EXIT_OK


def cmd_logz(args) -> int:
    res = log_partition(args.n, args.beta, args.d, tol=args.tol,
                        depth_pad_start=args.depth_pad)
    lower = groundstate.log_z_ground(args.n, args.beta, args.d).value
    upper = -args.beta * groundstate.ground_energy(args.n, args.d)
    lower_slack = res.value - lower
    upper_slack = upper - res.value
    payload = {
        "command": "logz",
        "n": args.n,
        "beta": args.beta,
        "d": args.d,
        "tol": args.tol,
        "depth_pad": args.depth_pad,
        "log_z": _json_float(res.value),
        "achieved_delta": _json_float(res.delta),
        "depth": res.depth,
        "lower_slack": _json_float(lower_slack),
        "upper_slack": _json_float(upper_slack),
    }
    if args.json:
        print(json.dumps(payload))
    else:
        print(
            f"log Z({args.n}, beta={args.beta!r}, d={args.d}) = {res.value!r}  "
            f"(delta {res.delta:.2e}, depth {res.depth}, "
            f"slacks lower {lower_slack:.3e} upper {upper_slack:.3e})"
        )
    if lower_slack < -1e-9 or upper_slack < -1e-9:
        print("bracket violated", file=sys.stderr)
        return EXIT_VERIFY_FAIL
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.verify_multinomial and args.beta != 0.0:
        print("--verify-multinomial requires --beta 0", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = build_tables(args.n, args.beta, args.d, args.depth_pad)
    meta_fields = ("n", "beta", "d", "seed", "reps", "depth_pad")
    level1_totals = np.zeros(1 << args.d)
    for rep in range(args.reps):
        state = SamplerState(tables, seed=args.seed, stream=rep)
        tree = sample_partition(args.n, args.beta, args.d, state)
        cfg = sample_points(tree, state)
        if args.verify and induce_tree(cfg) != tree:
            print(f"replica {rep}: round-trip mismatch", file=sys.stderr)
            return EXIT_VERIFY_FAIL
        if args.verify_ground and not groundstate.is_ground_state(tree):
            print(f"replica {rep}: sampled tree is not a ground state", file=sys.stderr)
            return EXIT_VERIFY_FAIL
        if args.verify_multinomial:
            level1_totals += tree.children_counts(0, (0,) * args.d)
        meta = (
            f"seed={args.seed} stream={rep} n={args.n} beta={args.beta!r} "
            f"d={args.d} depth_pad={args.depth_pad}"
        )
        path = out_dir / f"replica_{rep:05d}.csv"
        path.write_text("\n".join(config_to_csv_lines(cfg, metadata=meta)) + "\n")
    if args.verify_multinomial:
        # at beta = 0 the level-1 occupancies across replicas are multinomial
        total = args.n * args.reps
        cells = 1 << args.d
        expected = total / cells
        chi2 = float(((level1_totals - expected) ** 2 / expected).sum())
        from scipy import stats as sps

        p = float(sps.chi2.sf(chi2, cells - 1))
        if p <= 0.001:
            print(f"multinomial check failed: chi2={chi2:.1f} p={p:.2e}", file=sys.stderr)
            return EXIT_VERIFY_FAIL
    print(
        json.dumps(
            {
                "command": "sample",
                **_config_dict(args, meta_fields),
                "out": str(out_dir),
                "written": args.reps,
            }
        )
    )
    return EXIT_OK


SUITE_GRID = (256, 512, 1024, 2048, 4096, 8192)


def cmd_experiment(args) -> int:
    d = args.d
    grid = args.n_list or list(SUITE_GRID)
    if args.suite == "hyper":
        statistic = CubeRegion(level=1, coords=(0,) * d)
    elif args.suite == "boundary":
        statistic = BallRegion(center=(0.5,) * d, radius=0.3)
    elif args.suite == "linear":
        statistic = STATISTICS["coord1"]
    elif args.suite == "baseline":
        statistic = CubeRegion(level=1, coords=(0,) * d)
    else:  # pragma: no cover - argparse restricts choices
        raise AssertionError(args.suite)
    rows: list[ExperimentRow] = []
    for n in grid:
        if args.suite == "baseline":
            rows.append(poisson_baseline(n, d, statistic, args.reps, args.seed))
        else:
            rows.append(
                estimate_variances(
                    [statistic], n, args.beta, d, args.reps, args.seed,
                    depth_pad=args.depth_pad,
                )[0]
            )
    fit = None
    try:
        fit = fit_exponent(rows)
    except ValueError as exc:
        print(f"exponent fit unavailable: {exc}", file=sys.stderr)
    config = _config_dict(args, ("suite", "beta", "d", "reps", "seed", "depth_pad"))
    config["n_list"] = grid
    out = Path(args.out) if args.out else None
    if out:
        write_rows_csv(out.with_suffix(".csv"), rows)
        out.with_suffix(".json").write_text(summary_json(rows, fit, config) + "\n")
        print(f"wrote {out.with_suffix('.csv')} and {out.with_suffix('.json')}")
    else:
        print(summary_json(rows, fit, config))
    return EXIT_OK


def cmd_verify(args) -> int:
    results = verify.run_suite(args.suite)
    width = max(len(f"{r.suite}:{r.name}") for r in results)
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        failed += not r.passed
        detail = f"  ({r.detail})" if r.detail else ""
        print(f"{status}  {r.suite + ':' + r.name:<{width}}{detail}")
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hcgas",
        description="Exact ground states, partition functions, perfect sampling, "
        "and hyperuniformity experiments for the hierarchical Coulomb gas.",
    )
    parser.add_argument("--version", action="version", version=f"hcgas {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ground", help="exact ground-state energy, increment, count")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("logz", help="log partition function with bracket slacks")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--depth-pad", type=int, default=4, dest="depth_pad")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_logz)

    p = sub.add_parser("sample", help="write perfectly sampled point CSVs")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth-pad", type=int, default=8, dest="depth_pad")
    p.add_argument("--out", type=str, required=True)
    p.add_argument("--verify", action="store_true",
                   help="assert the tree/point round trip for every replica")
    p.add_argument("--verify-ground", action="store_true", dest="verify_ground",
                   help="assert every sampled tree is a ground state (use large beta)")
    p.add_argument("--verify-multinomial", action="store_true", dest="verify_multinomial",
                   help="chi-square the pooled level-1 counts (requires beta 0)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("experiment", help="variance-scaling Monte Carlo suites")
    p.add_argument("--suite", choices=("hyper", "boundary", "linear", "baseline"),
                   required=True)
    p.add_argument("--n-list", type=int, nargs="+", dest="n_list")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--reps", type=int, default=4000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth-pad", type=int, default=DEFAULT_EXPERIMENT_DEPTH_PAD,
                   dest="depth_pad")
    p.add_argument("--out", type=str, default=None,
                   help="output path prefix for .csv and .json")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify", help="run pinned invariant suites")
    p.add_argument("--suite", required=True,
                   choices=tuple(verify.SUITES) + ("all",))
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (DimensionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MemoryBudgetError, OracleBudgetError, CountOverflowError, ConvergenceError) as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
