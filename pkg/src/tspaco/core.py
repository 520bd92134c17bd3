"""Instance and tour representations, tour evaluation and a brute-force oracle."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

#: largest instance the exhaustive oracle will accept
BRUTE_FORCE_MAX_N = 11

SYMMETRY_TOL = 1e-9


class InstanceError(ValueError):
    """Raised when a weight matrix violates the instance invariants."""


class InvalidTourError(ValueError):
    """Raised when a tour is not a permutation of the instance's nodes.

    ``reason`` is one of ``"size_mismatch"``, ``"out_of_range"`` or
    ``"duplicate"``; ``node`` names the first offending node
    where that makes sense.
    """

    def __init__(self, reason: str, node: int | None = None, message: str | None = None):
        self.reason = reason
        self.node = node
        super().__init__(message or f"{reason}" + ("" if node is None else f" (node {node})"))


class OracleRefusedError(ValueError):
    """Raised when brute-force enumeration is requested for too large an instance."""


@dataclass(frozen=True, eq=False)
class TspInstance:
    """Complete symmetric TSP instance.

    The weight matrix is copied and made read-only on construction.
    ``floor_weight`` is set by the random generator to the post-scaling value
    of floored (masked) edges; it is ``None`` for loaded instances.
    """

    weights: np.ndarray
    name: str | None = None
    floor_weight: float | None = None

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InstanceError(f"weight matrix must be square, got shape {w.shape}")
        n = w.shape[0]
        if n < 2:
            raise InstanceError(f"instance needs at least 2 nodes, got {n}")
        if not np.all(np.isfinite(w)):
            raise InstanceError("weight matrix contains non-finite entries")
        diag = np.diag(w)
        if np.any(diag != 0):
            i = int(np.flatnonzero(diag != 0)[0])
            raise InstanceError(f"nonzero diagonal entry at ({i}, {i}): {float(diag[i])!r}")
        asym = np.abs(w - w.T)
        if np.any(asym > SYMMETRY_TOL):
            i, j = np.unravel_index(int(np.argmax(asym)), asym.shape)
            raise InstanceError(
                f"asymmetric weights: w[{i}][{j}]={float(w[i, j])!r} != w[{j}][{i}]={float(w[j, i])!r}"
            )
        off = ~np.eye(n, dtype=bool)
        if np.any(w[off] <= 0):
            i, j = np.argwhere((w <= 0) & off)[0]
            raise InstanceError(f"non-positive off-diagonal weight at ({i}, {j}): {float(w[i, j])!r}")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class Tour:
    """Open permutation of node indices; the closing edge back to ``order[0]`` is implicit."""

    order: tuple[int, ...]
    instance_n: int = field(default=-1)

    def __post_init__(self) -> None:
        object.__setattr__(self, "order", tuple(int(v) for v in self.order))
        if self.instance_n == -1:
            object.__setattr__(self, "instance_n", len(self.order))

    @classmethod
    def of(cls, order: Iterable[int], instance: TspInstance | None = None) -> "Tour":
        order = tuple(int(v) for v in order)
        return cls(order, instance.n if instance is not None else len(order))

    def __len__(self) -> int:
        return len(self.order)

    def rotated(self, k: int) -> "Tour":
        k %= max(len(self.order), 1)
        return Tour(self.order[k:] + self.order[:k], self.instance_n)

    def reversed(self) -> "Tour":
        return Tour(self.order[::-1], self.instance_n)

    def edges(self) -> list[tuple[int, int]]:
        """Directed cycle edges in traversal order, closing edge last."""
        o = self.order
        return [(o[i], o[(i + 1) % len(o)]) for i in range(len(o))]


@dataclass(frozen=True)
class TourDiagnostics:
    length: float
    belief_at_completion: float
    free_energy: float


def _as_order(tour: Tour | Sequence[int]) -> tuple[int, ...]:
    if isinstance(tour, Tour):
        return tour.order
    return tuple(int(v) for v in tour)


def validate_tour(instance: TspInstance, tour: Tour | Sequence[int]) -> None:
    """Raise :class:`InvalidTourError` unless ``tour`` is a permutation of ``range(instance.n)``."""
    order = _as_order(tour)
    n = instance.n
    if isinstance(tour, Tour) and tour.instance_n != n:
        raise InvalidTourError(
            "size_mismatch", message=f"tour built for n={tour.instance_n}, instance has n={n}"
        )
    if len(order) != n:
        raise InvalidTourError(
            "size_mismatch", message=f"tour has {len(order)} nodes, instance has {n}"
        )
    seen = [False] * n
    for v in order:
        if not 0 <= v < n:
            raise InvalidTourError("out_of_range", v, f"node {v} outside 0..{n - 1}")
        if seen[v]:
            raise InvalidTourError("duplicate", v, f"duplicate node {v}")
        seen[v] = True


def cycle_length(weights: np.ndarray, order: Sequence[int] | np.ndarray) -> float:
    """Cycle cost of ``order`` without validation.

    ``math.fsum`` is correctly rounded, so the result does not depend on the
    rotation or direction the cycle is stored in.
    """
    idx = np.asarray(order, dtype=np.intp)
    return math.fsum(weights[idx, np.roll(idx, -1)].tolist())


def tour_length(instance: TspInstance, tour: Tour | Sequence[int]) -> float:
    """Total length of the closed tour, including the return edge."""
    validate_tour(instance, tour)
    return cycle_length(instance.weights, _as_order(tour))


def brute_force_optimum(instance: TspInstance) -> tuple[Tour, float]:
    """Exact optimum by enumeration with node 0 fixed and mirror images skipped.

    Only for ``n <= 11``; (n-1)!/2 cycles are evaluated.
    """
    n = instance.n
    if n > BRUTE_FORCE_MAX_N:
        raise OracleRefusedError(
            f"brute force refused for n={n} (limit {BRUTE_FORCE_MAX_N})"
        )
    w = instance.weights.tolist()
    best_order: tuple[int, ...] = tuple(range(n))
    best = cycle_length(instance.weights, best_order)
    for rest in itertools.permutations(range(1, n)):
        # each cycle appears twice (once per direction); keep rest[0] <= rest[-1]
        if rest[0] > rest[-1]:
            continue
        order = (0,) + rest
        length = w[0][rest[0]] + w[rest[-1]][0]
        for a, b in zip(rest, rest[1:]):
            length += w[a][b]
        if length < best - 1e-12:
            best = float(length)
            best_order = order
    return Tour(best_order, n), cycle_length(instance.weights, best_order)
