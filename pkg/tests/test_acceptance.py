"""End-to-end acceptance checks.

Each check records one PASS/FAIL line, printed together in the ``acceptance``
section of the pytest terminal summary. The experiment batches take roughly
ten to fifteen minutes on one core; deselect them with ``-m "not slow"``.
"""

import csv
import io
import itertools
import math
import subprocess
import sys

import mpmath
import numpy as np
import pytest

from tspaco import stats
from tspaco.core import TspInstance, brute_force_optimum
from tspaco.formats import FormatError, load_instance
from tspaco.generate import GenConfig, derive_seed, generate_batch
from tspaco.harness import ExperimentConfig, run_experiment, run_seed, size_seed
from tspaco.solvers import (
    AcoParams,
    elitist_deposit,
    evaporate_and_deposit,
    free_energy,
    initial_pheromone,
    selection_probabilities,
    solve_aco,
    solve_ai_aco,
)

MASTER_SEED = 0
TREND_SIZES = (25, 50, 100)
TREND_GRAPHS = 30
# interleaved timing pairs per size; the largest size is costly, so fewer graphs
TIMING_GRAPHS = {25: 40, 50: 40, 100: 30, 250: 20}


def record(log, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    log.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def trend_report():
    cfg = ExperimentConfig(
        node_sizes=list(TREND_SIZES), graphs_per_size=TREND_GRAPHS, master_seed=MASTER_SEED
    )
    return run_experiment(cfg)


# -- experiment level ----------------------------------------------------------


@pytest.mark.slow
def test_improvement_trend(trend_report, acceptance_log):
    ok = True
    parts = []
    for block in trend_report.sizes:
        imp = block.improvement_pct_mean
        p = block.tests["paired_t_length"].p_value
        good = 0 < imp <= 15 and p < 0.1
        ok &= good
        parts.append(f"n={block.n} mean={imp:.3f}% p={p:.3g}{'' if good else ' (miss)'}")
    record(acceptance_log, "improvement trend, mean in (0,15]% and paired t p<0.1", ok, "; ".join(parts))


@pytest.mark.slow
def test_baseline_ordering(trend_report, acceptance_log):
    ok = True
    parts = []
    for block in trend_report.sizes:
        ratio = block.solvers["nn"].length_mean / block.solvers["aco"].length_mean
        ok &= ratio >= 1.3
        parts.append(f"n={block.n} NN/ACO={ratio:.3f}")
    record(acceptance_log, "baseline ordering, NN/ACO >= 1.3", ok, "; ".join(parts))


def _interleaved_overhead(n, graphs):
    batch = generate_batch(GenConfig(n), graphs, size_seed(MASTER_SEED, n))
    params = AcoParams()
    t_aco, t_ai = [], []
    for g, inst in enumerate(batch):
        runs = [
            (solve_aco, run_seed(MASTER_SEED, n, g, "aco"), t_aco),
            (solve_ai_aco, run_seed(MASTER_SEED, n, g, "ai_aco"), t_ai),
        ]
        if g % 2:
            runs.reverse()  # alternate which solver runs first
        for solve, seed, acc in runs:
            acc.append(solve(inst, params, seed).wall_time)
    a, b = float(np.mean(t_aco)), float(np.mean(t_ai))
    return (b - a) / a * 100.0


@pytest.mark.slow
def test_overhead_bound(acceptance_log):
    ov = {n: _interleaved_overhead(n, g) for n, g in TIMING_GRAPHS.items()}
    sizes = sorted(ov)
    monotone = all(ov[a] >= ov[b] for a, b in zip(sizes, sizes[1:]))
    ok = ov[50] <= 20 and ov[250] <= 10 and monotone
    detail = ", ".join(f"n={n} {ov[n]:+.2f}%" for n in sizes)
    detail += f"; <=20% at 50: {ov[50] <= 20}; <=10% at 250: {ov[250] <= 10}; non-increasing: {monotone}"
    record(acceptance_log, "time overhead (sequential, interleaved)", ok, detail)


@pytest.mark.slow
def test_oracle_equivalence(acceptance_log):
    batch = generate_batch(GenConfig(8), 20, derive_seed(MASTER_SEED, "oracle"))
    params = AcoParams()
    within = 0
    aco_lengths, ai_lengths = [], []
    for g, inst in enumerate(batch):
        _, opt = brute_force_optimum(inst)
        a = solve_aco(inst, params, run_seed(MASTER_SEED, 8, g, "aco")).best_length
        b = solve_ai_aco(inst, params, run_seed(MASTER_SEED, 8, g, "ai_aco")).best_length
        within += a <= 1.1 * opt
        aco_lengths.append(a)
        ai_lengths.append(b)
    ok = within >= 18 and np.mean(ai_lengths) <= np.mean(aco_lengths)
    detail = (f"ACO within 10% on {within}/20; mean ACO={np.mean(aco_lengths):.6f} "
              f"AI ACO={np.mean(ai_lengths):.6f}")
    record(acceptance_log, "oracle equivalence at n=8", ok, detail)


# -- properties ----------------------------------------------------------------


def test_belief_cancellation(acceptance_log):
    rng = np.random.default_rng(derive_seed(MASTER_SEED, "cancel"))
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(3, 16))
        w = rng.uniform(0.1, 100, size=(n, n))
        w = (w + w.T) / 2
        np.fill_diagonal(w, 0)
        tau = rng.uniform(1e-3, 10, size=(n, n))
        params = AcoParams(alpha=float(rng.uniform(0, 5)), beta=float(rng.uniform(0, 5)))
        cur = int(rng.integers(n))
        others = np.array([j for j in range(n) if j != cur])
        avail = np.sort(rng.choice(others, size=int(rng.integers(1, n)), replace=False))
        inst = TspInstance(w)
        lo = selection_probabilities(tau, inst, cur, avail, params, 0.1)
        hi = selection_probabilities(tau, inst, cur, avail, params, 0.9)
        worst = max(worst, float(np.max(np.abs(lo - hi))))

    identical = True
    for k, n in enumerate((8, 15, 25)):
        inst = generate_batch(GenConfig(n), 1, derive_seed(MASTER_SEED, "pinned", n))[0]
        params = AcoParams(num_iterations=40)
        dyn = solve_ai_aco(inst, params, k)
        pinned = solve_ai_aco(inst, params, k, fixed_belief=0.5)
        identical &= dyn.best_tour.order == pinned.best_tour.order
        identical &= [d.length for d in dyn.diagnostics] == [d.length for d in pinned.diagnostics]
    ok = worst < 1e-12 and identical
    record(acceptance_log, "belief cancellation", ok,
           f"max |p(0.1)-p(0.9)| = {worst:.3g} over 1000 configs; pinned vs dynamic traces identical: {identical}")


def test_free_energy_bound(acceptance_log):
    rng = np.random.default_rng(derive_seed(MASTER_SEED, "free-energy"))
    bs = rng.uniform(0, 1, size=100_000)
    bs[:4] = (0.0, 1.0, 0.5, 0.0)
    ls = rng.uniform(0, 1000, size=100_000)
    gaps = np.array([free_energy(float(b), float(L)) - L for b, L in zip(bs, ls)])
    bounded = bool(np.all(gaps >= 0) and np.all(gaps <= math.log(2) + 1e-12))
    edges = all(free_energy(b, L) == L for b in (0.0, 1.0) for L in (0.0, 3.7, 1e6))
    ok = bounded and edges
    record(acceptance_log, "free-energy bound", ok,
           f"1e5 samples, max F-L = {gaps.max():.15f} (ln 2 = {math.log(2):.15f}); F = L at b in {{0,1}}: {edges}")


def test_pheromone_suite(acceptance_log):
    rng = np.random.default_rng(derive_seed(MASTER_SEED, "pheromone"))
    checks = {}

    n = 9
    params = AcoParams(evaporation_rate=0.3, pheromone_deposit=1.7)
    tau = rng.uniform(0.5, 5, size=(n, n))
    expect = tau * (1 - 0.3)
    checks["evaporation exact"] = np.array_equal(evaporate_and_deposit(tau.copy(), [], [], params), expect)

    order = list(rng.permutation(n))
    out = evaporate_and_deposit(tau.copy(), [order], [12.5], params)
    diff = out - expect
    mask = np.zeros((n, n), dtype=bool)
    for i in range(n):
        mask[order[i], order[(i + 1) % n]] = True
    checks["deposit on cycle edges only"] = (
        np.all(diff[~mask] == 0) and np.allclose(diff[mask], 1.7 / 12.5, rtol=1e-12, atol=0)
    )

    before = tau.copy()
    after = elitist_deposit(tau.copy(), order, 12.5, params)
    d = after - before
    checks["elitist adds 2*deposit/L"] = (
        np.all(d[~mask] == 0) and np.allclose(d[mask], 2 * 1.7 / 12.5, rtol=1e-12, atol=0)
    )

    positive = True
    tau = initial_pheromone(12)
    for _ in range(10_000):
        p = AcoParams(evaporation_rate=float(rng.uniform(0.01, 0.99)),
                      pheromone_deposit=float(rng.uniform(1e-6, 10)))
        k = int(rng.integers(0, 4))
        tours = [list(rng.permutation(12)) for _ in range(k)]
        lengths = list(rng.uniform(1, 1e6, size=k))
        evaporate_and_deposit(tau, tours, lengths, p)
        if rng.random() < 0.3:
            elitist_deposit(tau, list(rng.permutation(12)), float(rng.uniform(1, 1e6)), p)
        if not (np.all(tau > 0) and np.all(np.isfinite(tau))):
            positive = False
            break
    checks["positive over 1e4 iterations"] = positive
    ok = all(checks.values())
    record(acceptance_log, "pheromone suite", ok, ", ".join(f"{k}: {bool(v)}" for k, v in checks.items()))


# -- statistics oracle ---------------------------------------------------------


def _enum_wilcoxon(d):
    ranks = stats.rankdata(np.abs(d))
    w = min(ranks[d > 0].sum(), ranks[d < 0].sum())
    hits = sum(sum(r for r, s in zip(ranks, signs) if s) <= w + 1e-9
               for signs in itertools.product((0, 1), repeat=len(d)))
    return min(1.0, 2 * hits / 2 ** len(d))


def _enum_mwu(a, b):
    pooled = np.concatenate([a, b])
    ranks = stats.rankdata(pooled)
    obs = ranks[: len(a)].sum()
    sums = [sum(c) for c in itertools.combinations(ranks.tolist(), len(a))]
    lo = sum(s <= obs + 1e-9 for s in sums)
    hi = sum(s >= obs - 1e-9 for s in sums)
    return min(1.0, 2 * min(lo, hi) / len(sums))


def test_statistics_oracle(acceptance_log):
    rng = np.random.default_rng(derive_seed(MASTER_SEED, "stats-oracle"))
    worst_w = worst_u = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 11))
        d = rng.permutation(np.arange(1, 41))[:n] * rng.choice([-1.0, 1.0], size=n) / 7
        got = stats.wilcoxon_signed_rank(d, np.zeros(n), method="exact").p_value
        worst_w = max(worst_w, abs(got - _enum_wilcoxon(d)))

        n1, n2 = (int(x) for x in rng.integers(1, 11, size=2))
        vals = rng.permutation(np.arange(100))[: n1 + n2] / 3
        a, b = vals[:n1], vals[n1:]
        got = stats.mann_whitney_u(a, b, method="exact").p_value
        worst_u = max(worst_u, abs(got - _enum_mwu(a, b)))

    t = stats.paired_t_test([1, 2, 3, 4, 5], [0, 0, 0, 0, 0])
    x = mpmath.mpf(4) / (4 + mpmath.mpf(t.statistic) ** 2)
    independent = float(mpmath.betainc(2, 0.5, 0, x, regularized=True))
    t_ok = abs(t.p_value - 0.0132) <= 5e-4 and abs(t.p_value - independent) < 1e-12
    ok = worst_w < 1e-12 and worst_u < 1e-12 and t_ok
    record(acceptance_log, "statistics oracle", ok,
           f"200 tie-free cases each: max Wilcoxon gap {worst_w:.3g}, max Mann-Whitney gap {worst_u:.3g}; "
           f"paired t p = {t.p_value:.6f} (independent {independent:.6f})")


# -- command line --------------------------------------------------------------


def _runs_without_time(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    drop = rows[0].index("wall_time_s")
    buf = io.StringIO()
    csv.writer(buf).writerows([r[:drop] + r[drop + 1:] for r in rows])
    return buf.getvalue()


@pytest.mark.slow
def test_determinism(tmp_path, acceptance_log):
    outputs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        proc = subprocess.run(
            [sys.executable, "-m", "tspaco", "bench", "--sizes", "25", "--graphs", "10", "--seed", "1",
             "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append(_runs_without_time(out / "runs.csv"))
    ok = outputs[0] == outputs[1] and outputs[0].count("\n") == 1 + 10 * 3
    record(acceptance_log, "determinism of bench runs.csv", ok,
           f"byte-identical excluding wall time: {outputs[0] == outputs[1]}")


def test_ingestion(tmp_path, acceptance_log):
    tsp = tmp_path / "two.tsp"
    tsp.write_text("NAME: two\nTYPE: TSP\nDIMENSION: 2\nEDGE_WEIGHT_TYPE: EUC_2D\n"
                   "NODE_COORD_SECTION\n1 0 0\n2 3 4\nEOF\n")
    weight = float(load_instance(tsp).weights[0, 1])
    asym = tmp_path / "asym.txt"
    asym.write_text("3\n0 1 2\n1 0 3\n2 4 0\n")
    try:
        load_instance(asym)
        message = None
    except FormatError as exc:
        message = str(exc)
    ok = weight == 5 and message is not None and "asymmetric" in message
    record(acceptance_log, "ingestion", ok, f"EUC_2D weight = {weight:g}; asymmetric file rejected with: {message}")
