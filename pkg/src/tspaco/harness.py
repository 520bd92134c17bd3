"""Seeded benchmark runs over generated instances and Table-1-style reports."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import stats
from .generate import GenConfig, InstanceCharacteristics, derive_seed, generate_batch, instance_characteristics
from .solvers import SOLVERS, AcoParams, run_solver

log = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "TSPACO_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"

RUNS_COLUMNS = (
    "graph_id",
    "n",
    "solver",
    "tour_length",
    "wall_time_s",
    "seed",
    "density",
    "avg_edge_weight",
    "std_edge_weight",
    "cv_edge_weight",
    "edge_weight_range",
)
CHARACTERISTICS = (
    "density",
    "avg_edge_weight",
    "std_edge_weight",
    "cv_edge_weight",
    "edge_weight_range",
)
SOLVER_LABELS = {"nn": "NN", "aco": "ACO", "ai_aco": "AI ACO"}


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))


@dataclass
class ExperimentConfig:
    node_sizes: list[int] = field(default_factory=lambda: [25, 50, 100, 250, 500])
    graphs_per_size: int = 50
    solvers: list[str] = field(default_factory=lambda: list(SOLVERS))
    aco_params: AcoParams = field(default_factory=AcoParams)
    master_seed: int = 0
    output_format: str = "csv"
    output_path: Path | None = None
    distribution: str = "random"
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.node_sizes:
            raise ValueError("node_sizes must not be empty")
        if any(n < 2 for n in self.node_sizes):
            raise ValueError(f"node sizes must be >= 2, got {self.node_sizes}")
        if not self.solvers:
            raise ValueError("solvers must not be empty")
        unknown = set(self.solvers) - set(SOLVERS)
        if unknown:
            raise ValueError(f"unknown solvers {sorted(unknown)}; expected a subset of {SOLVERS}")
        # canonical order keeps aggregation independent of how solvers were listed
        self.solvers = [s for s in SOLVERS if s in self.solvers]
        if self.graphs_per_size < 1:
            raise ValueError("graphs_per_size must be >= 1")
        if self.output_format not in ("csv", "json"):
            raise ValueError(f"output_format must be csv or json, got {self.output_format!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.output_path is not None:
            self.output_path = Path(self.output_path)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        if isinstance(data.get("aco_params"), dict):
            data["aco_params"] = AcoParams(**data["aco_params"])
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["output_path"] = None if self.output_path is None else str(self.output_path)
        return d


@dataclass
class RunRecord:
    graph_id: int
    n: int
    solver: str
    tour_length: float
    wall_time_s: float
    seed: int
    characteristics: InstanceCharacteristics
    concurrent: bool = False

    def row(self) -> dict[str, Any]:
        out = {
            "graph_id": self.graph_id,
            "n": self.n,
            "solver": self.solver,
            "tour_length": self.tour_length,
            "wall_time_s": self.wall_time_s,
            "seed": self.seed,
        }
        out.update(asdict(self.characteristics))
        return out


@dataclass
class ErrorRecord:
    graph_id: int
    n: int
    solver: str | None
    message: str


@dataclass
class SolverSummary:
    length_mean: float
    length_std: float
    time_mean: float
    time_std: float
    count: int


@dataclass
class SizeBlock:
    n: int
    graphs: int
    solvers: dict[str, SolverSummary]
    improvement_pct_mean: float | None = None
    improvement_pct_std: float | None = None
    time_increase_s: float | None = None
    time_increase_pct: float | None = None
    tests: dict[str, stats.TestResult | None] = field(default_factory=dict)
    correlations: dict[str, stats.TestResult | None] = field(default_factory=dict)


@dataclass
class Report:
    config: dict[str, Any]
    sizes: list[SizeBlock]
    runs: list[RunRecord]
    errors: list[ErrorRecord] = field(default_factory=list)
    overall_tests: dict[str, stats.TestResult | None] = field(default_factory=dict)
    execution_mode: str = "sequential"

    @property
    def complete(self) -> bool:
        return not self.errors

    def improvements(self, n: int) -> dict[int, float]:
        """Per-graph improvement % of the belief-weighted colony over the basic one."""
        return improvement_by_graph([r for r in self.runs if r.n == n])

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["complete"] = self.complete
        return d


# -- running -------------------------------------------------------------------


def improvement_pct(aco_length: float, ai_length: float) -> float:
    return (aco_length - ai_length) / aco_length * 100.0


def improvement_by_graph(runs: Iterable[RunRecord]) -> dict[int, float]:
    by: dict[int, dict[str, float]] = {}
    for r in runs:
        by.setdefault(r.graph_id, {})[r.solver] = r.tour_length
    return {
        g: improvement_pct(v["aco"], v["ai_aco"])
        for g, v in sorted(by.items())
        if "aco" in v and "ai_aco" in v
    }


def run_seed(master_seed: int, n: int, graph_id: int, solver: str) -> int:
    return derive_seed(master_seed, "run", n, graph_id, solver)


def size_seed(master_seed: int, n: int) -> int:
    return derive_seed(master_seed, "size", n)


def _run_one(task: tuple) -> tuple:
    graph_id, n, solver, instance, params, seed = task
    try:
        res = run_solver(solver, instance, params, seed)
    except Exception as exc:  # recorded as an error row, the experiment carries on
        return graph_id, n, solver, seed, None, None, f"{type(exc).__name__}: {exc}"
    return graph_id, n, solver, seed, res.best_length, res.wall_time, None


def run_experiment(config: ExperimentConfig, progress=None) -> Report:
    """Generate instances per size, run every selected solver, aggregate.

    ``progress``, if given, is called with ``(done, total)`` after each run.
    """
    runs: list[RunRecord] = []
    errors: list[ErrorRecord] = []
    tasks = []
    chars: dict[tuple[int, int], InstanceCharacteristics] = {}
    for n in config.node_sizes:
        try:
            batch = generate_batch(
                GenConfig(n, distribution=config.distribution),
                config.graphs_per_size,
                size_seed(config.master_seed, n),
            )
        except Exception as exc:
            log.error("generation failed for n=%d: %s", n, exc)
            errors.extend(
                ErrorRecord(g, n, None, f"generation: {exc}") for g in range(config.graphs_per_size)
            )
            continue
        for graph_id, inst in enumerate(batch):
            chars[(n, graph_id)] = instance_characteristics(inst)
            for solver in config.solvers:
                seed = run_seed(config.master_seed, n, graph_id, solver)
                tasks.append((graph_id, n, solver, inst, config.aco_params, seed))

    concurrent = config.workers > 1
    if concurrent:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = []
            for i, out in enumerate(pool.map(_run_one, tasks)):
                outcomes.append(out)
                if progress:
                    progress(i + 1, len(tasks))
    else:
        outcomes = []
        for i, task in enumerate(tasks):
            outcomes.append(_run_one(task))
            if progress:
                progress(i + 1, len(tasks))

    for graph_id, n, solver, seed, length, wall, err in outcomes:
        if err is not None:
            errors.append(ErrorRecord(graph_id, n, solver, err))
            continue
        runs.append(
            RunRecord(graph_id, n, solver, length, wall, seed, chars[(n, graph_id)], concurrent)
        )
    order = {s: i for i, s in enumerate(SOLVERS)}
    runs.sort(key=lambda r: (r.n, r.graph_id, order[r.solver]))
    errors.sort(key=lambda e: (e.n, e.graph_id, order.get(e.solver, -1)))
    # a graph with any failed run is dropped from the paired aggregates
    failed = {(e.n, e.graph_id) for e in errors}
    kept = [r for r in runs if (r.n, r.graph_id) not in failed]
    sizes = [aggregate_size(n, [r for r in kept if r.n == n], config.solvers) for n in config.node_sizes]
    return Report(
        config=config.to_dict(),
        sizes=sizes,
        runs=runs,
        errors=errors,
        overall_tests=_paired_tests(kept),
        execution_mode="parallel" if concurrent else "sequential",
    )


# -- aggregation -----------------------------------------------------------


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    if not values:
        return math.nan, math.nan
    d = stats.descriptive(values)
    return d.mean, d.std


def _safe(test, *args) -> stats.TestResult | None:
    try:
        return test(*args)
    except stats.StatsError as exc:
        log.info("%s skipped: %s", test.__name__, exc)
        return None


def _paired_columns(runs: Sequence[RunRecord]) -> tuple[list[RunRecord], list[RunRecord]]:
    by: dict[tuple[int, int], dict[str, RunRecord]] = {}
    for r in runs:
        by.setdefault((r.n, r.graph_id), {})[r.solver] = r
    pairs = [v for _, v in sorted(by.items()) if "aco" in v and "ai_aco" in v]
    return [p["aco"] for p in pairs], [p["ai_aco"] for p in pairs]


def _paired_tests(runs: Sequence[RunRecord]) -> dict[str, stats.TestResult | None]:
    aco, ai = _paired_columns(runs)
    if not aco:
        return {}
    a_len = [r.tour_length for r in aco]
    b_len = [r.tour_length for r in ai]
    return {
        "paired_t_length": _safe(stats.paired_t_test, a_len, b_len),
        "wilcoxon_length": _safe(stats.wilcoxon_signed_rank, a_len, b_len),
        "mann_whitney_length": _safe(stats.mann_whitney_u, a_len, b_len),
        "paired_t_time": _safe(
            stats.paired_t_test, [r.wall_time_s for r in aco], [r.wall_time_s for r in ai]
        ),
    }


def aggregate_size(n: int, runs: Sequence[RunRecord], solvers: Sequence[str]) -> SizeBlock:
    summaries = {}
    for s in solvers:
        rs = [r for r in runs if r.solver == s]
        lm, ls = _mean_std([r.tour_length for r in rs])
        tm, ts = _mean_std([r.wall_time_s for r in rs])
        summaries[s] = SolverSummary(lm, ls, tm, ts, len(rs))
    block = SizeBlock(n=n, graphs=len({r.graph_id for r in runs}), solvers=summaries)
    aco, ai = _paired_columns(runs)
    if not aco:
        return block
    imp = [improvement_pct(a.tour_length, b.tour_length) for a, b in zip(aco, ai)]
    block.improvement_pct_mean, block.improvement_pct_std = _mean_std(imp)
    t_aco = float(np.mean([r.wall_time_s for r in aco]))
    t_ai = float(np.mean([r.wall_time_s for r in ai]))
    block.time_increase_s = t_ai - t_aco
    block.time_increase_pct = (t_ai - t_aco) / t_aco * 100.0 if t_aco > 0 else math.nan
    block.tests = _paired_tests(runs)
    for c in CHARACTERISTICS:
        xs = [getattr(r.characteristics, c) for r in aco]
        block.correlations[c] = _safe(stats.spearman, xs, imp) if len(imp) >= 3 else None
    return block


# -- report output -------------------------------------------------------------


def fmt_float(x: Any) -> str:
    if isinstance(x, bool) or not isinstance(x, (float, np.floating)):
        return str(x)
    return f"{float(x):.6g}"


def summary_rows(report: Report) -> tuple[list[str], list[list[str]]]:
    """Table-1-shaped rows: one metric per row, one column per node size."""
    header = ["Metric"] + [f"{b.n} Nodes" for b in report.sizes]
    solvers = [s for s in SOLVERS if s in report.config["solvers"]]
    rows: list[list[str]] = []

    def add(label: str, values: list[Any]) -> None:
        rows.append([label] + ["" if v is None else fmt_float(float(v)) for v in values])

    for s in solvers:
        lab = SOLVER_LABELS[s]
        add(f"{lab} Tour Length (mean)", [b.solvers[s].length_mean for b in report.sizes])
        add(f"{lab} Tour Length (std)", [b.solvers[s].length_std for b in report.sizes])
    paired = "aco" in solvers and "ai_aco" in solvers
    if paired:
        add("Improvement % (mean)", [b.improvement_pct_mean for b in report.sizes])
        add("Improvement % (std)", [b.improvement_pct_std for b in report.sizes])
    for s in solvers:
        lab = SOLVER_LABELS[s]
        add(f"{lab} Time s (mean)", [b.solvers[s].time_mean for b in report.sizes])
        add(f"{lab} Time s (std)", [b.solvers[s].time_std for b in report.sizes])
    if paired:
        add("Time Increase s", [b.time_increase_s for b in report.sizes])
        add("Time Increase %", [b.time_increase_pct for b in report.sizes])
    return header, rows


def _test_rows(report: Report) -> list[list[str]]:
    rows = []

    def add(scope: str, name: str, target: str, t: stats.TestResult | None) -> None:
        if t is None:
            rows.append([scope, name, target, "", "", "", ""])
        else:
            rows.append(
                [scope, name, target, fmt_float(float(t.statistic)), fmt_float(float(t.p_value)),
                 str(t.n_effective), str(t.degenerate).lower()]
            )

    for b in report.sizes:
        for name, t in b.tests.items():
            add(str(b.n), name, "", t)
        for c, t in b.correlations.items():
            add(str(b.n), "spearman_improvement", c, t)
    for name, t in report.overall_tests.items():
        add("all", name, "", t)
    return rows


def write_report(report: Report, format: str = "csv", path: str | Path | None = None) -> list[Path]:
    """Write the report; returns the files written.

    ``csv`` writes ``runs.csv``, ``summary.csv`` and ``tests.csv`` (plus
    ``errors.csv`` when runs failed) into the directory ``path``. ``json``
    writes one document to ``path``, or to ``path/report.json`` when ``path``
    is a directory.
    """
    target = Path(path) if path is not None else default_output_dir()
    if format == "json":
        if target.suffix.lower() != ".json":
            target = target / "report.json"
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w") as fh:
            json.dump(_jsonable(report.to_dict()), fh, indent=2)
            fh.write("\n")
        return [target]
    if format != "csv":
        raise ValueError(f"unknown report format {format!r}")

    target.mkdir(parents=True, exist_ok=True)
    written = []
    runs_path = target / "runs.csv"
    with open(runs_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RUNS_COLUMNS)
        for r in report.runs:
            row = r.row()
            w.writerow([fmt_float(row[c]) for c in RUNS_COLUMNS])
    written.append(runs_path)

    header, rows = summary_rows(report)
    summary_path = target / "summary.csv"
    with open(summary_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    written.append(summary_path)

    tests_path = target / "tests.csv"
    with open(tests_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scope", "test", "characteristic", "statistic", "p_value", "n_effective", "degenerate"])
        w.writerows(_test_rows(report))
    written.append(tests_path)

    if report.errors:
        err_path = target / "errors.csv"
        with open(err_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["graph_id", "n", "solver", "message"])
            for e in report.errors:
                w.writerow([e.graph_id, e.n, e.solver or "", e.message])
        written.append(err_path)
    return written


def _jsonable(obj: Any) -> Any:
    # NaN/inf are not valid JSON; encode them as strings
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def load_report(path: str | Path) -> dict[str, Any]:
    """Read a JSON report back as plain data (non-finite floats restored)."""

    def restore(obj: Any) -> Any:
        if isinstance(obj, dict):
            return {k: restore(v) for k, v in obj.items()}
        if isinstance(obj, list):
            return [restore(v) for v in obj]
        if obj in ("nan", "inf", "-inf"):
            return float(obj)
        return obj

    with open(path) as fh:
        return restore(json.load(fh))
