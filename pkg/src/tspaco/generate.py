"""Random symmetric instances drawn from four weight distributions, and instance metrics."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .core import TspInstance

DISTRIBUTIONS = ("uniform", "normal", "exponential", "lognormal")

MAX_GENERATION_ATTEMPTS = 8


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenConfig:
    n: int
    distribution: str = "random"
    density_threshold_range: tuple[float, float] = (0.3, 1.0)
    floor_value: float = 0.01
    scale_target: float = 9.9
    scale_percentile: float = 95.0
    offset: float = 0.1

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.distribution != "random" and self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")
        lo, hi = self.density_threshold_range
        if not 0 < lo <= hi <= 1:
            raise ValueError(f"density_threshold_range must satisfy 0 < low <= high <= 1, got {(lo, hi)}")
        if self.floor_value <= 0:
            raise ValueError("floor_value must be positive")
        if not 0 < self.scale_percentile <= 100:
            raise ValueError("scale_percentile must be in (0, 100]")


@dataclass(frozen=True)
class InstanceCharacteristics:
    density: float
    avg_edge_weight: float
    std_edge_weight: float
    cv_edge_weight: float
    edge_weight_range: float


def derive_seed(*parts: int | str) -> int:
    """Stable 64-bit seed from a tuple of ints/strings (blake2b, little-endian)."""
    key = "\x1f".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def _sample_matrix(rng: np.random.Generator, dist: str, n: int) -> np.ndarray:
    shape = (n, n)
    if dist == "uniform":
        low = rng.uniform(0.1, 1)
        high = rng.uniform(low + 0.5, low + 5)
        return rng.uniform(low, high, size=shape)
    if dist == "normal":
        mean = rng.uniform(1, 5)
        std = rng.uniform(0.1, 2)
        return np.abs(rng.normal(mean, std, size=shape))
    if dist == "exponential":
        scale = rng.uniform(0.5, 2)
        return rng.exponential(scale, size=shape)
    mean = rng.uniform(0, 2)
    sigma = rng.uniform(0.1, 1)
    return rng.lognormal(mean, sigma, size=shape)


def _attempt(config: GenConfig, rng: np.random.Generator) -> tuple[np.ndarray, float] | None:
    n = config.n
    if config.distribution == "random":
        dist = DISTRIBUTIONS[int(rng.integers(len(DISTRIBUTIONS)))]
    else:
        dist = config.distribution
    m = _sample_matrix(rng, dist, n)
    m = (m + m.T) / 2
    np.fill_diagonal(m, 0.0)

    # keep-mask drawn on the upper triangle and mirrored so symmetry survives
    threshold = rng.uniform(*config.density_threshold_range)
    iu = np.triu_indices(n, k=1)
    keep_upper = rng.random(len(iu[0])) < threshold
    keep = np.zeros((n, n), dtype=bool)
    keep[iu] = keep_upper
    keep |= keep.T
    off = ~np.eye(n, dtype=bool)
    m = np.where(keep | ~off, m, config.floor_value)

    positive = m[m > 0]
    if positive.size == 0:
        return None
    ref = np.percentile(positive, config.scale_percentile)
    if not np.isfinite(ref) or ref <= 0:
        return None
    scale = config.scale_target / ref
    m = m * scale + config.offset
    np.fill_diagonal(m, 0.0)
    return m, config.floor_value * scale + config.offset


def generate_instance(config: GenConfig, seed: int, name: str | None = None) -> TspInstance:
    """Draw one instance; pure function of ``(config, seed)``.

    A degenerate draw (no positive entry to scale by) is retried on the next
    substream, up to ``MAX_GENERATION_ATTEMPTS`` times.
    """
    seed = int(seed) & 0xFFFF_FFFF_FFFF_FFFF
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        rng = np.random.default_rng([seed, attempt])
        out = _attempt(config, rng)
        if out is not None:
            weights, floor_weight = out
            return TspInstance(weights, name=name, floor_weight=floor_weight)
    raise GenerationError(
        f"no usable sample after {MAX_GENERATION_ATTEMPTS} attempts (seed={seed})"
    )


def generate_batch(config: GenConfig, count: int, master_seed: int) -> list[TspInstance]:
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    out = []
    for k in range(count):
        try:
            out.append(generate_instance(config, derive_seed(master_seed, k), name=f"g{k}"))
        except GenerationError as exc:
            raise GenerationError(f"instance {k}: {exc}") from exc
    return out


def instance_characteristics(instance: TspInstance) -> InstanceCharacteristics:
    """Density and edge-weight statistics over the off-diagonal entries.

    Density counts entries strictly above the instance's floor weight (all
    off-diagonal entries when no floor is known). Spread statistics use the
    population standard deviation.
    """
    w = instance.weights
    n = instance.n
    vals = w[~np.eye(n, dtype=bool)]
    if instance.floor_weight is None:
        dense = np.count_nonzero(vals > 0)
    else:
        tol = 1e-12 * max(1.0, abs(instance.floor_weight))
        dense = np.count_nonzero(vals > instance.floor_weight + tol)
    density = dense / (n * (n - 1))
    pos = vals[vals > 0]
    mean = float(pos.mean())
    std = float(pos.std())
    return InstanceCharacteristics(
        density=float(density),
        avg_edge_weight=mean,
        std_edge_weight=std,
        cv_edge_weight=std / mean if mean > 0 else 0.0,
        edge_weight_range=float(pos.max() - pos.min()),
    )
