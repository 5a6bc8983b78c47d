"""Command-line front end: ``generate``, ``solve``, ``oracle`` and ``bench``.

Exit codes: 0 on success, 1 on usage or input errors, 2 when the solver fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .benders import hbd_solve
from .errors import HbdError, SchemaError
from .model import (
    CONSTRUCTIVE, EXPONENTIAL, SLACK, BendersConfig, ManualPenalties, generate_generic_instance,
    load_instance, report_to_json, save_instance,
)

EXIT_OK, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _pair(text: str) -> tuple:
    try:
        k, m = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected K,M, got {text!r}") from None
    return k, m


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hybrid-benders", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write generated instances as JSON")
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--seed", type=int, required=True, help="first instance seed")
    gen.add_argument("--out", type=Path, required=True)
    gen.add_argument("--max-n", type=int, default=None,
                     help="skip seeds whose instance has more binaries")
    gen.add_argument("--require-feasibility-cut", action="store_true",
                     help="skip instances where every master-feasible x has a feasible subproblem")

    solve = sub.add_parser("solve", help="run the hybrid Benders loop on one instance")
    solve.add_argument("--instance", type=Path, required=True)
    solve.add_argument("--conversion", choices=("slack", "exp"), default="slack")
    solve.add_argument("--penalties", choices=("constructive", "manual"), default="constructive")
    solve.add_argument("--manual-values", type=_floats, default=[1.0, 1.0, 1.0, 1.0],
                       metavar="X,PHI,CUT,MP", help="manual penalty weights")
    solve.add_argument("--multicut", type=_pair, default=None, metavar="K,M")
    solve.add_argument("--backend", choices=("exact", "sa"), default="exact")
    solve.add_argument("--epsilon", type=float, default=0.25)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--max-iterations", type=int, default=50)
    solve.add_argument("--report", type=Path, default=None,
                       help="write the JSON report here instead of stdout")

    orc = sub.add_parser("oracle", help="brute-force optimum of one instance")
    orc.add_argument("--instance", type=Path, required=True)

    bench = sub.add_parser("bench", help="sweep variants over a directory of instances")
    bench.add_argument("--instances", type=Path, required=True)
    bench.add_argument("--variants", required=True,
                       help="comma-separated labels, e.g. HBD_S_C,HBD_E_C,HBD_S_C_MC,SA")
    bench.add_argument("--out", type=Path, required=True)
    bench.add_argument("--backend", choices=("exact", "sa"), default="exact")
    bench.add_argument("--epsilon", type=float, default=0.25)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--max-iterations", type=int, default=50)
    bench.add_argument("--workers", type=int, default=1)
    bench.add_argument("--record-timing", action="store_true",
                       help="fill wall_time_ms (breaks byte-identical reruns)")
    return parser


def _read_instance(path: Path):
    try:
        return load_instance(path.read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except (SchemaError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_generate(args) -> int:
    if args.count < 0:
        raise UsageError("--count must be non-negative")
    args.out.mkdir(parents=True, exist_ok=True)
    seed, written = args.seed, 0
    while written < args.count:
        inst = generate_generic_instance(seed)
        keep = (args.max_n is None or inst.n <= args.max_n) and (
            not args.require_feasibility_cut or harness.requires_feasibility_cut(inst))
        if keep:
            (args.out / f"inst_{seed}.json").write_text(save_instance(inst))
            written += 1
        seed += 1
    print(f"wrote {written} instances to {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _read_instance(args.instance)
    if args.penalties == "manual":
        if len(args.manual_values) != 4:
            raise UsageError("--manual-values needs four numbers")
        penalties = ManualPenalties(*args.manual_values)
    else:
        penalties = CONSTRUCTIVE
    try:
        config = BendersConfig(
            conversion=EXPONENTIAL if args.conversion == "exp" else SLACK,
            penalties=penalties, multicut=args.multicut, epsilon=args.epsilon,
            max_iterations=args.max_iterations, backend=args.backend, rng_seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    text = report_to_json(hbd_solve(inst, config))
    if args.report is None:
        print(text)
    else:
        args.report.write_text(text + "\n")
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = _read_instance(args.instance)
    if inst.n > harness.ORACLE_MAX_N:
        raise UsageError(f"oracle supports n <= {harness.ORACLE_MAX_N}")
    res = harness.oracle_solve(inst)
    if res.feasible:
        doc = {"status": "Optimal", "optimum": res.optimum,
               "x": [int(v) for v in res.x], "y": [float(v) for v in res.y]}
    else:
        doc = {"status": "Infeasible"}
    print(json.dumps(doc))
    return EXIT_OK


def _instance_id(path: Path, inst) -> str:
    return str(inst.seed) if inst.seed is not None else path.stem


def _sort_key(ident: str):
    # numeric seeds in numeric order, then anything else by name
    return (0, int(ident), "") if ident.isdigit() else (1, 0, ident)


def cmd_bench(args) -> int:
    if not args.instances.is_dir():
        raise UsageError(f"{args.instances} is not a directory")
    paths = sorted(args.instances.glob("*.json"))
    if not paths:
        raise UsageError(f"no *.json instances in {args.instances}")
    instances = []
    for path in paths:
        inst = _read_instance(path)
        instances.append((_instance_id(path, inst), inst))
    instances.sort(key=lambda pair: _sort_key(pair[0]))
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    options = dict(backend=args.backend, epsilon=args.epsilon, seed=args.seed,
                   max_iterations=args.max_iterations)
    try:
        for label in variants:
            harness.variant_config(label, **options)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _, summary = harness.run_benchmark(instances, variants, args.out, workers=args.workers,
                                       record_timing=args.record_timing, **options)
    overall = summary["overall"]
    print(f"{overall['count']} runs: feasibility {overall['feasibility_rate']:.3f}, "
          f"optimality {overall['optimality_rate']:.3f}; wrote {args.out / 'results.csv'}")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "oracle": cmd_oracle,
            "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HbdError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
