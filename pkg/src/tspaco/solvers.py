"""Nearest Neighbor, basic ACO and belief-weighted ACO with an elitist deposit.

Random stream discipline for both colony solvers: one ``numpy`` Generator per
run, seeded from the run seed. Each ant draws its start node with one
``integers`` call, then exactly one ``random()`` per edge choice (including
the forced last choice), in ant order within an iteration.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Tour, TourDiagnostics, TspInstance, cycle_length, validate_tour

log = logging.getLogger(__name__)

MIN_DISTANCE = 1e-12
BELIEF_PRIOR = 0.5
BELIEF_MIN = 0.1
BELIEF_MAX = 0.9
PROB_SUM_TOL = 1e-9
# evaporation never takes a trail below this (smallest normal double)
PHEROMONE_FLOOR = float(np.finfo(float).tiny)


class DegenerateDistanceWarning(RuntimeWarning):
    """An edge shorter than ``MIN_DISTANCE`` had its heuristic term capped."""


@dataclass(frozen=True)
class AcoParams:
    num_ants: int = 10
    num_iterations: int = 100
    alpha: float = 1.0
    beta: float = 2.0
    evaporation_rate: float = 0.5
    pheromone_deposit: float = 1.0

    def __post_init__(self) -> None:
        if self.num_ants < 1 or self.num_iterations < 1:
            raise ValueError("num_ants and num_iterations must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if not 0 < self.evaporation_rate < 1:
            raise ValueError("evaporation_rate must lie in (0, 1)")
        if self.pheromone_deposit <= 0:
            raise ValueError("pheromone_deposit must be positive")


@dataclass
class SolveResult:
    best_tour: Tour
    best_length: float
    wall_time: float
    iterations_run: int
    per_iteration_best: list[float] = field(default_factory=list)
    diagnostics: list[TourDiagnostics] | None = None


def initial_pheromone(n: int) -> np.ndarray:
    return np.ones((n, n))


# -- Nearest Neighbor ------------------------------------------------------


def nearest_neighbor(instance: TspInstance, start: int = 0) -> SolveResult:
    """Greedy construction; ties go to the lowest node index."""
    n = instance.n
    if not 0 <= start < n:
        raise ValueError(f"start node {start} outside 0..{n - 1}")
    t0 = time.perf_counter()
    w = instance.weights
    unvisited = np.ones(n, dtype=bool)
    unvisited[start] = False
    order = [start]
    cur = start
    for _ in range(n - 1):
        row = np.where(unvisited, w[cur], np.inf)
        nxt = int(np.argmin(row))  # argmin returns the first minimum
        order.append(nxt)
        unvisited[nxt] = False
        cur = nxt
    elapsed = time.perf_counter() - t0
    tour = Tour(tuple(order), n)
    length = cycle_length(w, tour.order)
    return SolveResult(tour, length, elapsed, 1, [length])


# -- selection ---------------------------------------------------------------


def heuristic_row(distances: np.ndarray, beta: float) -> np.ndarray:
    """``(1/d)**beta`` with distances below ``MIN_DISTANCE`` capped."""
    d = np.asarray(distances, dtype=float)
    if (d < MIN_DISTANCE).any():
        warnings.warn(
            f"distance below {MIN_DISTANCE:g}; heuristic capped at (1/{MIN_DISTANCE:g})**beta",
            DegenerateDistanceWarning,
            stacklevel=3,
        )
        d = np.maximum(d, MIN_DISTANCE)
    return (1.0 / d) ** beta


def heuristic_matrix(instance: TspInstance, beta: float) -> np.ndarray:
    """Off-diagonal ``(1/d)**beta``, cached on the instance per ``beta``; diagonal is 0."""
    cache = instance.__dict__.setdefault("_heuristic_cache", {})
    h = cache.get(beta)
    if h is None:
        n = instance.n
        off = ~np.eye(n, dtype=bool)
        h = np.zeros((n, n))
        h[off] = heuristic_row(instance.weights[off], beta)
        h.flags.writeable = False
        cache[beta] = h
    return h


def selection_probabilities(
    pheromone: np.ndarray,
    instance: TspInstance,
    current: int,
    available: Sequence[int] | np.ndarray,
    params: AcoParams,
    belief: float = 1.0,
) -> np.ndarray:
    """Probability of moving from ``current`` to each node of ``available``.

    Weights are ``tau**alpha * (1/d)**beta * belief``, normalised to one. A
    scalar belief multiplies every weight alike, so it drops out of the
    normalised vector.
    """
    avail = np.asarray(available, dtype=np.intp)
    if avail.size == 0:
        raise ValueError("no available nodes to choose from")
    if (avail == current).any():
        raise ValueError(f"current node {current} listed as available")
    tau = pheromone[current, avail] ** params.alpha
    eta = heuristic_matrix(instance, params.beta)[current, avail]
    weights = tau * eta * belief
    return weights / weights.sum()


def choose_next_node(
    probabilities: np.ndarray, available: Sequence[int] | np.ndarray, rng: np.random.Generator
) -> int:
    """Inverse-CDF categorical draw consuming exactly one ``rng.random()``."""
    p = np.asarray(probabilities, dtype=float)
    avail = np.asarray(available)
    if p.shape != avail.shape:
        raise ValueError(f"{p.size} probabilities for {avail.size} available nodes")
    if avail.size == 0:
        raise ValueError("no available nodes to choose from")
    cdf = np.cumsum(p)
    if abs(cdf[-1] - 1.0) > PROB_SUM_TOL:
        raise ValueError(f"probabilities sum to {cdf[-1]!r}, expected 1")
    u = rng.random() * cdf[-1]
    k = int(np.searchsorted(cdf, u, side="right"))
    if k >= avail.size:
        # u rounded up onto the last cdf value; take the last node with mass
        k = int(np.flatnonzero(p > 0)[-1])
    return int(avail[k])


# -- belief and free energy ----------------------------------------------


def update_belief(current_partial_length: float, best_length: float | None) -> float:
    """Confidence in a partial tour relative to the best known length.

    Returns the prior 0.5 while no best is known, otherwise
    ``1 - partial/best`` clamped to [0.1, 0.9].
    """
    if current_partial_length < 0:
        raise ValueError("partial length must be non-negative")
    if best_length is None or math.isinf(best_length):
        return BELIEF_PRIOR
    if best_length <= 0:
        raise ValueError(f"best length must be positive, got {best_length!r}")
    raw = 1.0 - current_partial_length / best_length
    return max(BELIEF_MIN, min(BELIEF_MAX, raw))


def free_energy(belief: float, path_length: float) -> float:
    """Path length plus the binary entropy (nats) of the belief."""
    if path_length < 0:
        raise ValueError("path length must be non-negative")
    if not 0 <= belief <= 1:
        raise ValueError(f"belief must lie in [0, 1], got {belief!r}")
    if 0 < belief < 1:
        uncertainty = -belief * math.log(belief) - (1 - belief) * math.log(1 - belief)
    else:
        uncertainty = 0.0
    return path_length + uncertainty


# -- pheromone updates -----------------------------------------------------


def _cycle_edges(order: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    src = np.asarray(order, dtype=np.intp)
    return src, np.roll(src, -1)


def evaporate_and_deposit(
    pheromone: np.ndarray,
    tours: Sequence[Tour | Sequence[int]],
    lengths: Sequence[float],
    params: AcoParams,
) -> np.ndarray:
    """Scale every trail by ``1 - rho``, then add ``deposit/length`` on each tour's
    directed cycle edges. Updates ``pheromone`` in place and returns it."""
    if len(tours) != len(lengths):
        raise ValueError("tours and lengths differ in count")
    for length in lengths:
        if not length > 0:
            raise ValueError(f"tour length must be positive, got {length!r}")
    pheromone *= 1.0 - params.evaporation_rate
    np.maximum(pheromone, PHEROMONE_FLOOR, out=pheromone)
    for tour, length in zip(tours, lengths):
        order = tour.order if isinstance(tour, Tour) else tour
        src, dst = _cycle_edges(order)
        # directed cycle edges are distinct, so buffered fancy-index += is exact
        pheromone[src, dst] += params.pheromone_deposit / length
    return pheromone


def elitist_deposit(
    pheromone: np.ndarray, best_tour: Tour | Sequence[int], best_length: float, params: AcoParams
) -> np.ndarray:
    """Add ``2*deposit/best_length`` on each directed cycle edge of the best tour, in place."""
    if not best_length > 0:
        raise ValueError(f"best length must be positive, got {best_length!r}")
    order = best_tour.order if isinstance(best_tour, Tour) else best_tour
    src, dst = _cycle_edges(order)
    pheromone[src, dst] += 2.0 * params.pheromone_deposit / best_length
    return pheromone


# -- colony solvers --------------------------------------------------------


def _run_colony(
    instance: TspInstance,
    params: AcoParams,
    seed: int,
    *,
    active_inference: bool,
    fixed_belief: float | None = None,
    record_diagnostics: bool = True,
) -> SolveResult:
    n = instance.n
    w = instance.weights
    # plain lists make the per-step partial sum cheap
    w_rows = w.tolist() if active_inference else None
    rng = np.random.default_rng(int(seed) & 0xFFFF_FFFF_FFFF_FFFF)
    pheromone = initial_pheromone(n)
    best_order: list[int] | None = None
    best_length = math.inf
    trace: list[float] = []
    diagnostics: list[TourDiagnostics] | None = (
        [] if active_inference and record_diagnostics else None
    )

    t0 = time.perf_counter()
    for _ in range(params.num_iterations):
        tours: list[list[int]] = []
        lengths: list[float] = []
        for _ in range(params.num_ants):
            start = int(rng.integers(n))
            order = [start]
            unvisited = np.ones(n, dtype=bool)
            unvisited[start] = False
            belief = BELIEF_PRIOR if active_inference else 1.0
            partial = 0.0
            cur = start
            for _ in range(n - 1):
                available = np.flatnonzero(unvisited)
                b = fixed_belief if fixed_belief is not None else belief
                p = selection_probabilities(pheromone, instance, cur, available, params, b)
                nxt = choose_next_node(p, available, rng)
                order.append(nxt)
                unvisited[nxt] = False
                if active_inference:
                    partial += w_rows[cur][nxt]
                    if best_order is not None:
                        belief = update_belief(partial, best_length)
                cur = nxt
            length = cycle_length(w, order)
            tours.append(order)
            lengths.append(length)
            if diagnostics is not None:
                diagnostics.append(TourDiagnostics(length, belief, free_energy(belief, length)))
            if length < best_length:
                best_length = length
                best_order = order
        evaporate_and_deposit(pheromone, tours, lengths, params)
        if active_inference:
            elitist_deposit(pheromone, best_order, best_length, params)
        trace.append(best_length)
    elapsed = time.perf_counter() - t0

    best_tour = Tour(tuple(best_order), n)
    validate_tour(instance, best_tour)
    return SolveResult(
        best_tour=best_tour,
        best_length=best_length,
        wall_time=elapsed,
        iterations_run=params.num_iterations,
        per_iteration_best=trace,
        diagnostics=diagnostics,
    )


def solve_aco(instance: TspInstance, params: AcoParams | None = None, seed: int = 0) -> SolveResult:
    """Basic ant colony: constant belief, evaporation plus per-ant deposit, no elitism."""
    return _run_colony(instance, params or AcoParams(), seed, active_inference=False)


def solve_ai_aco(
    instance: TspInstance,
    params: AcoParams | None = None,
    seed: int = 0,
    *,
    fixed_belief: float | None = None,
    record_diagnostics: bool = True,
) -> SolveResult:
    """Ant colony with per-ant belief tracking, free-energy diagnostics and an
    elitist deposit on the global best each iteration.

    ``fixed_belief`` pins the belief fed to node selection (bookkeeping still
    runs); it exists to check that a scalar belief leaves the search unchanged.
    """
    return _run_colony(
        instance,
        params or AcoParams(),
        seed,
        active_inference=True,
        fixed_belief=fixed_belief,
        record_diagnostics=record_diagnostics,
    )


SOLVERS = ("nn", "aco", "ai_aco")


def run_solver(name: str, instance: TspInstance, params: AcoParams, seed: int) -> SolveResult:
    if name == "nn":
        return nearest_neighbor(instance, 0)
    if name == "aco":
        return solve_aco(instance, params, seed)
    if name == "ai_aco":
        return solve_ai_aco(instance, params, seed)
    raise ValueError(f"unknown solver {name!r}; expected one of {SOLVERS}")
