"""Command line entry point: ``tspaco {gen,solve,bench,stats,oracle}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import stats
from .core import OracleRefusedError, brute_force_optimum
from .formats import FormatError, load_instance, save_instance
from .generate import DISTRIBUTIONS, GenConfig, generate_batch
from .harness import ExperimentConfig, default_output_dir, run_experiment, summary_rows, write_report
from .solvers import SOLVERS, AcoParams, run_solver

log = logging.getLogger("tspaco")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # None means "not given"; defaults are resolved after parsing
    d = argparse.SUPPRESS if suppress else None
    g = parser.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=d, help="master / run seed (default 0)")
    g.add_argument("--ants", type=int, default=d, help="ants per iteration (default 10)")
    g.add_argument("--iterations", type=int, default=d, help="colony iterations (default 100)")
    g.add_argument("--alpha", type=float, default=d, help="pheromone exponent (default 1.0)")
    g.add_argument("--beta", type=float, default=d, help="heuristic exponent (default 2.0)")
    g.add_argument("--rho", type=float, default=d, help="evaporation rate (default 0.5)")
    g.add_argument("--deposit", type=float, default=d, help="pheromone deposit (default 1.0)")
    g.add_argument("--format", choices=("csv", "json"), default=d,
                   help="report format for bench (default csv); json switches other commands to JSON output")
    g.add_argument("--out", type=Path, default=d, help="output file or directory")
    g.add_argument("-v", "--verbose", action="store_true", default=d)


_PARAM_FLAGS = {
    "ants": "num_ants",
    "iterations": "num_iterations",
    "alpha": "alpha",
    "beta": "beta",
    "rho": "evaporation_rate",
    "deposit": "pheromone_deposit",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tspaco",
        description="Nearest Neighbor, ant colony and belief-weighted ant colony TSP solvers with a benchmark harness.",
    )
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("gen", help="generate random instances as matrix files")
    _global_flags(p, suppress=True)
    p.add_argument("--n", type=int, required=True, help="node count")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--distribution", choices=("random",) + DISTRIBUTIONS, default="random")

    p = sub.add_parser("solve", help="solve one instance with one solver")
    _global_flags(p, suppress=True)
    p.add_argument("instance", type=Path)
    p.add_argument("--solver", choices=SOLVERS, default="ai_aco")
    p.add_argument("--input-format", choices=("matrix", "tsplib"), default=None,
                   help="instance file format (default: detect)")

    p = sub.add_parser("bench", help="run the benchmark experiment")
    _global_flags(p, suppress=True)
    p.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
    p.add_argument("--sizes", type=_int_list, help="comma-separated node sizes")
    p.add_argument("--graphs", type=int, help="graphs per size")
    p.add_argument("--solvers", type=_str_list, help=f"comma-separated subset of {','.join(SOLVERS)}")
    p.add_argument("--distribution", choices=("random",) + DISTRIBUTIONS)
    p.add_argument("--workers", type=int, help="parallel worker processes (timing is then flagged concurrent)")

    p = sub.add_parser("stats", help="paired tests on two numeric CSV columns")
    _global_flags(p, suppress=True)
    p.add_argument("csv", type=Path)
    p.add_argument("column_a")
    p.add_argument("column_b")

    p = sub.add_parser("oracle", help="exact optimum by enumeration (n <= 11)")
    _global_flags(p, suppress=True)
    p.add_argument("instance", type=Path)
    p.add_argument("--input-format", choices=("matrix", "tsplib"), default=None)
    return parser


def _params(args, base: AcoParams | None = None) -> AcoParams:
    given = {f: getattr(args, a) for a, f in _PARAM_FLAGS.items() if getattr(args, a) is not None}
    return replace(base or AcoParams(), **given)


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(payload))
    else:
        print(text)


def cmd_gen(args) -> int:
    out = args.out or default_output_dir() / "instances"
    batch = generate_batch(GenConfig(args.n, distribution=args.distribution), args.count, _seed(args))
    for k, inst in enumerate(batch):
        path = save_instance(inst, Path(out) / f"n{args.n}_s{_seed(args)}_g{k}.txt")
        print(path)
    return 0


def cmd_solve(args) -> int:
    inst = load_instance(args.instance, args.input_format)
    res = run_solver(args.solver, inst, _params(args), _seed(args))
    tour = list(res.best_tour.order)
    _emit(
        args,
        {"solver": args.solver, "length": res.best_length, "time_s": res.wall_time, "tour": tour},
        f"length {res.best_length:.6f}\ntime_s {res.wall_time:.6f}\ntour {' '.join(map(str, tour))}",
    )
    return 0


def cmd_bench(args) -> int:
    data = {}
    if args.config:
        data = json.loads(args.config.read_text())
    cfg = ExperimentConfig.from_dict(data)
    if args.sizes is not None:
        cfg.node_sizes = args.sizes
    if args.graphs is not None:
        cfg.graphs_per_size = args.graphs
    if args.solvers is not None:
        cfg.solvers = args.solvers
    if args.distribution is not None:
        cfg.distribution = args.distribution
    if args.workers is not None:
        cfg.workers = args.workers
    # flags given on the command line win over the config file
    cfg.aco_params = _params(args, cfg.aco_params)
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.format is not None:
        cfg.output_format = args.format
    if args.out is not None:
        cfg.output_path = args.out
    cfg = ExperimentConfig.from_dict(cfg.to_dict())  # re-validate after overrides

    def progress(done: int, total: int) -> None:
        log.info("run %d/%d", done, total)

    report = run_experiment(cfg, progress)
    written = write_report(report, cfg.output_format, cfg.output_path or default_output_dir())
    header, rows = summary_rows(report)
    print(",".join(header))
    for row in rows:
        print(",".join(row))
    for path in written:
        print(f"wrote {path}", file=sys.stderr)
    if not report.complete:
        print(f"warning: {len(report.errors)} runs failed, report is partial", file=sys.stderr)
        return 1
    return 0


def _read_column(path: Path, name: str) -> list[float]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or name not in reader.fieldnames:
            raise ValueError(f"column {name!r} not found in {path}")
        return [float(row[name]) for row in reader]


def cmd_stats(args) -> int:
    a = _read_column(args.csv, args.column_a)
    b = _read_column(args.csv, args.column_b)
    results = {}
    for key, fn in (
        ("paired_t", stats.paired_t_test),
        ("wilcoxon_signed_rank", stats.wilcoxon_signed_rank),
        ("mann_whitney_u", stats.mann_whitney_u),
    ):
        try:
            results[key] = fn(a, b)
        except stats.StatsError as exc:
            results[key] = str(exc)
    payload = {
        k: (v if isinstance(v, str) else {"statistic": v.statistic, "p_value": v.p_value,
                                          "n_effective": v.n_effective, "degenerate": v.degenerate})
        for k, v in results.items()
    }
    lines = []
    for k, v in results.items():
        if isinstance(v, str):
            lines.append(f"{k}: not applicable ({v})")
        else:
            lines.append(f"{k}: statistic = {v.statistic:.6g}, p-value = {v.p_value:.6g} (n = {v.n_effective})")
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_oracle(args) -> int:
    inst = load_instance(args.instance, args.input_format)
    tour, length = brute_force_optimum(inst)
    _emit(
        args,
        {"length": length, "tour": list(tour.order)},
        f"length {length:.6f}\ntour {' '.join(map(str, tour.order))}",
    )
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "solve": cmd_solve,
    "bench": cmd_bench,
    "stats": cmd_stats,
    "oracle": cmd_oracle,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (FormatError, OracleRefusedError, ValueError, OSError) as exc:
        print(f"tspaco {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
