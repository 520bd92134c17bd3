"""Paired and two-sample tests used to compare solver outputs.

Everything here is self-contained: Student-t tail probabilities come from a
continued-fraction evaluation of the regularized incomplete beta function,
and exact nonparametric null distributions are built by counting.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

WILCOXON_EXACT_MAX_N = 15
MWU_NORMAL_MIN_N = 8

PAIRED_T = "paired_t"
WILCOXON = "wilcoxon_signed_rank"
MANN_WHITNEY = "mann_whitney_u"
SPEARMAN = "spearman"


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str
    n_effective: int
    degenerate: bool = False

    __test__ = False  # not a pytest class


@dataclass(frozen=True)
class Descriptive:
    mean: float
    std: float
    min: float
    q25: float
    median: float
    q75: float
    max: float
    count: int
    single_sample: bool = False


def _values(x: Sequence[float] | np.ndarray) -> np.ndarray:
    v = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(v)):
        raise StatsError("series contains non-finite values")
    return v


def descriptive(series: Sequence[float]) -> Descriptive:
    """Summary with sample std (n-1) and linearly interpolated quartiles.

    A single value reports std 0 and sets ``single_sample``.
    """
    v = _values(series)
    if v.size == 0:
        raise StatsError("empty series")
    q25, med, q75 = np.percentile(v, [25, 50, 75])
    single = v.size == 1
    # v.std can leave rounding residue on constant input
    constant = single or v.min() == v.max()
    return Descriptive(
        mean=float(v.mean()),
        std=0.0 if constant else float(v.std(ddof=1)),
        min=float(v.min()),
        q25=float(q25),
        median=float(med),
        q75=float(q75),
        max=float(v.max()),
        count=int(v.size),
        single_sample=single,
    )


# -- special functions -----------------------------------------------------


def _betacf(a: float, b: float, x: float, max_iter: int = 500, eps: float = 1e-16) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta failed to converge (a={a}, b={b}, x={x})")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isnan(t):
        return float("nan")
    if math.isinf(t):
        return 0.0
    p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return min(1.0, max(0.0, p))


def _normal_two_sided_p(z: float) -> float:
    return min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def rankdata(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Ranks starting at 1, ties get the average of the ranks they span."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(v.size)
    sorted_v = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _tie_term(ranked: np.ndarray) -> float:
    return float(sum(t**3 - t for t in Counter(ranked.tolist()).values()))


# -- tests -------------------------------------------------------------------


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Two-sided paired t-test on ``a - b``."""
    x, y = _values(a), _values(b)
    if x.size != y.size:
        raise StatsError(f"paired samples differ in length ({x.size} vs {y.size})")
    n = x.size
    if n < 2:
        raise StatsError("paired t-test needs at least 2 pairs")
    d = x - y
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return TestResult(0.0, 1.0, PAIRED_T, n, degenerate=True)
        return TestResult(math.copysign(math.inf, mean), 0.0, PAIRED_T, n, degenerate=True)
    t = mean / (sd / math.sqrt(n))
    return TestResult(t, student_t_two_sided_p(t, n - 1), PAIRED_T, n)


def _signed_rank_null_counts(doubled_ranks: Sequence[int]) -> list[int]:
    """Number of sign assignments giving each value of 2*W+, by counting."""
    total = sum(doubled_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    hi = 0
    for r in doubled_ranks:
        hi += r
        for s in range(hi, r - 1, -1):
            counts[s] += counts[s - r]
    return counts


def _check_method(method: str) -> None:
    if method not in ("auto", "exact", "normal"):
        raise ValueError(f"method must be auto, exact or normal, got {method!r}")


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float], method: str = "auto") -> TestResult:
    """Two-sided signed-rank test on ``a - b`` with zero differences dropped.

    The statistic is ``min(W+, W-)``. With ``method="auto"`` the exact null
    distribution is used for up to 15 nonzero differences, otherwise a normal
    approximation with tie and continuity corrections.
    """
    _check_method(method)
    x, y = _values(a), _values(b)
    if x.size != y.size:
        raise StatsError(f"paired samples differ in length ({x.size} vs {y.size})")
    d = x - y
    d = d[d != 0]
    n = d.size
    if n == 0:
        raise StatsError("all differences are zero; signed-rank test undefined")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)

    if method == "exact" or (method == "auto" and n <= WILCOXON_EXACT_MAX_N):
        doubled = [int(round(2 * r)) for r in ranks]
        counts = _signed_rank_null_counts(doubled)
        k = int(round(2 * w))
        p = 2.0 * sum(counts[: k + 1]) / 2.0**n
        return TestResult(w, min(1.0, p), WILCOXON, n)

    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - _tie_term(ranks) / 48.0
    if var <= 0:
        return TestResult(w, 1.0, WILCOXON, n, degenerate=True)
    diff = w - mean
    z = (diff - 0.5 * math.copysign(1.0, diff) if diff != 0 else 0.0) / math.sqrt(var)
    return TestResult(w, _normal_two_sided_p(z), WILCOXON, n)


def _rank_sum_null_counts(doubled_ranks: Sequence[int], k: int) -> dict[int, int]:
    """Counts of 2*(rank sum) over all size-``k`` subsets of the pooled ranks."""
    # layers[j] maps doubled sum -> number of j-subsets
    layers: list[dict[int, int]] = [dict() for _ in range(k + 1)]
    layers[0][0] = 1
    for r in doubled_ranks:
        for j in range(min(k, len(doubled_ranks)), 0, -1):
            prev = layers[j - 1]
            if not prev:
                continue
            cur = layers[j]
            for s, c in prev.items():
                cur[s + r] = cur.get(s + r, 0) + c
    return layers[k]


def mann_whitney_u(a: Sequence[float], b: Sequence[float], method: str = "auto") -> TestResult:
    """Two-sided rank-sum test reporting ``U1`` for sample ``a``.

    ``method="auto"`` uses the normal approximation (tie- and
    continuity-corrected) once both samples have at least 8 values, otherwise
    the exact permutation distribution of the pooled ranks.
    """
    _check_method(method)
    x, y = _values(a), _values(b)
    n1, n2 = x.size, y.size
    if n1 == 0 or n2 == 0:
        raise StatsError("both samples must be non-empty")
    ranks = rankdata(np.concatenate([x, y]))
    r1 = float(ranks[:n1].sum())
    u1 = r1 - n1 * (n1 + 1) / 2.0
    mu = n1 * n2 / 2.0

    use_normal = method == "normal" or (
        method == "auto" and n1 >= MWU_NORMAL_MIN_N and n2 >= MWU_NORMAL_MIN_N
    )
    if use_normal:
        big_n = n1 + n2
        var = n1 * n2 / 12.0 * ((big_n + 1) - _tie_term(ranks) / (big_n * (big_n - 1)))
        if var <= 0:
            return TestResult(u1, 1.0, MANN_WHITNEY, n1 + n2, degenerate=True)
        diff = abs(u1 - mu)
        z = max(diff - 0.5, 0.0) / math.sqrt(var)
        return TestResult(u1, _normal_two_sided_p(z), MANN_WHITNEY, n1 + n2)

    # exact null of the smaller sample's rank sum (the other is determined)
    doubled = [int(round(2 * r)) for r in ranks]
    if n1 <= n2:
        k, obs = n1, int(round(2 * r1))
    else:
        k, obs = n2, int(round(2 * float(ranks[n1:].sum())))
    counts = _rank_sum_null_counts(doubled, k)
    total = sum(counts.values())
    lower = sum(c for s, c in counts.items() if s <= obs)
    upper = sum(c for s, c in counts.items() if s >= obs)
    p = min(1.0, 2.0 * min(lower, upper) / total)
    return TestResult(u1, p, MANN_WHITNEY, n1 + n2)


def spearman(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Rank correlation; ``statistic`` is rho. p from a t approximation with n-2 df."""
    x, y = _values(a), _values(b)
    if x.size != y.size:
        raise StatsError(f"samples differ in length ({x.size} vs {y.size})")
    n = x.size
    if n < 3:
        raise StatsError("spearman needs at least 3 pairs")
    rx, ry = rankdata(x), rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float((rx * rx).sum()) * float((ry * ry).sum()))
    if denom == 0.0:
        return TestResult(float("nan"), 1.0, SPEARMAN, n, degenerate=True)
    rho = max(-1.0, min(1.0, float((rx * ry).sum()) / denom))
    if abs(rho) == 1.0:
        return TestResult(rho, 0.0, SPEARMAN, n)
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return TestResult(rho, student_t_two_sided_p(t, n - 2), SPEARMAN, n)
