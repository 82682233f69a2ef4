"""Meta-evaluation statistics: construct correlations, distribution shape,
tie rates, discriminative power with Bonferroni-corrected one-sided t-tests,
distinguishability, and perturbation autocorrelation.

Correlation statistics are authored here (point-biserial via the group-mean
formula, Kendall tau-b via sort-and-merge counting, Spearman via midranks);
scipy supplies only the t and normal distribution functions for p-values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as _stats

from .errors import DegenerateInputError, ShapeError


@dataclass(frozen=True)
class ScoreVector:
    """Per-instance metric values for one model, aligned by sorted task
    order so vectors from different models are position-comparable."""

    metric_id: str
    model_id: str
    values: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class MetaParams:
    tie_epsilon: float = 1e-6
    base_alpha: float = 0.05
    kendall_variant: str = "tau_b"

    def __post_init__(self) -> None:
        if self.tie_epsilon <= 0:
            raise ValueError("tie_epsilon must be positive")
        if not 0 < self.base_alpha < 1:
            raise ValueError("base_alpha must be in (0, 1)")
        if self.kendall_variant != "tau_b":
            raise ValueError(f"unsupported kendall variant {self.kendall_variant!r}")


@dataclass(frozen=True)
class DistributionSummary:
    median: float
    midhinge: float
    mean: float
    std_dev: float
    skewness: float | None  # None when variance is zero
    excess_kurtosis: float | None


@dataclass(frozen=True)
class PairHypothesis:
    model_a: str
    model_b: str
    p_value: float


@dataclass(frozen=True)
class SignificanceReport:
    pairs: tuple[PairHypothesis, ...]
    alpha: float
    significant_count: int

    @property
    def n_hypotheses(self) -> int:
        return len(self.pairs)

    def sorted_p_values(self) -> tuple[float, ...]:
        return tuple(sorted(pair.p_value for pair in self.pairs))


@dataclass(frozen=True)
class RobustnessReport:
    delta_mean: float
    tau: float
    tau_p: float
    rho: float
    rho_p: float


def _check_aligned(x: Sequence[float], y: Sequence[float], minimum: int) -> int:
    if len(x) != len(y):
        raise ShapeError(f"misaligned sequences: {len(x)} vs {len(y)}")
    if len(x) < minimum:
        raise DegenerateInputError(f"need at least {minimum} observations, got {len(x)}")
    return len(x)


def point_biserial(
    binary: Sequence[int], continuous: Sequence[float]
) -> tuple[float, float]:
    """Correlation of a 0/1 variable with a continuous one.

    Equals the Pearson correlation of the coding; computed here as
    (M1 - M0) / s * sqrt(p*q) with the population standard deviation.
    Two-sided p-value from the t distribution with n-2 df.
    """
    n = _check_aligned(binary, continuous, 3)
    if any(b not in (0, 1) for b in binary):
        raise DegenerateInputError("binary sequence must contain only 0 and 1")
    n1 = sum(binary)
    n0 = n - n1
    if n1 == 0 or n0 == 0:
        raise DegenerateInputError("binary sequence must contain both classes")
    values = np.asarray(continuous, dtype=np.float64)
    std = float(np.std(values))  # population
    if std == 0.0:
        raise DegenerateInputError("continuous sequence has zero variance")
    flags = np.asarray(binary, dtype=bool)
    m1 = float(values[flags].mean())
    m0 = float(values[~flags].mean())
    r = (m1 - m0) / std * math.sqrt(n1 * n0 / (n * n))
    if abs(r) >= 1.0:
        return (1.0 if r > 0 else -1.0), 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(_stats.t.sf(abs(t), n - 2))
    return r, p


def _merge_count(arr: list[float]) -> tuple[list[float], int]:
    """Mergesort counting strict inversions (pairs i<j with arr[i]>arr[j])."""
    if len(arr) <= 1:
        return arr, 0
    mid = len(arr) // 2
    left, a = _merge_count(arr[:mid])
    right, b = _merge_count(arr[mid:])
    merged: list[float] = []
    inversions = a + b
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            merged.append(right[j])
            inversions += len(left) - i
            j += 1
    merged.extend(left[i:])
    merged.extend(right[j:])
    return merged, inversions


def _tie_term(sorted_values: Sequence[float], fn) -> int:
    total = 0
    i = 0
    n = len(sorted_values)
    while i < n:
        j = i
        while j + 1 < n and sorted_values[j + 1] == sorted_values[i]:
            j += 1
        total += fn(j - i + 1)
        i = j + 1
    return total


def _exact_kendall_p(n: int, dis: int, tot: int) -> float:
    """Two-sided exact p-value for the no-ties case: tail mass of the
    discordant count over all n! permutations (Mahonian distribution)."""
    counts = [1]
    for m in range(2, n + 1):
        new = [0] * (len(counts) + (m - 1))
        running = 0
        for k in range(len(new)):
            running += counts[k] if k < len(counts) else 0
            if k - m >= 0:
                running -= counts[k - m]
            new[k] = running
        counts = new
    total = math.factorial(n)
    d_low = min(dis, tot - dis)
    d_high = max(dis, tot - dis)
    p = (sum(counts[: d_low + 1]) + sum(counts[d_high:])) / total
    return min(1.0, p)


def kendall_tau(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Tie-corrected Kendall tau-b with p-value.

    The statistic comes from sort-based concordant/discordant counting; the
    p-value is exact (permutation null) for n <= 10 without ties, otherwise
    the standard normal approximation with tie-corrected variance.
    """
    n = _check_aligned(x, y, 2)
    tot = n * (n - 1) // 2
    pairs = sorted(zip(x, y))
    xs = [p[0] for p in pairs]
    ys = [p[1] for p in pairs]
    xtie = _tie_term(xs, lambda t: t * (t - 1) // 2)
    ytie = _tie_term(sorted(y), lambda t: t * (t - 1) // 2)
    ntie = _tie_term(pairs, lambda t: t * (t - 1) // 2)  # ties in both
    _, dis = _merge_count(ys)
    con = tot - xtie - ytie + ntie - dis
    s = con - dis
    denom = math.sqrt((tot - xtie) * (tot - ytie))
    if denom == 0.0:
        raise DegenerateInputError("kendall tau undefined: an input is constant")
    tau = s / denom
    if n <= 10 and xtie == 0 and ytie == 0:
        p = _exact_kendall_p(n, dis, tot)
    else:
        sorted_x = xs
        sorted_y = sorted(y)
        v0 = n * (n - 1) * (2 * n + 5)
        vt = _tie_term(sorted_x, lambda t: t * (t - 1) * (2 * t + 5))
        vu = _tie_term(sorted_y, lambda t: t * (t - 1) * (2 * t + 5))
        t1 = _tie_term(sorted_x, lambda t: t * (t - 1))
        u1 = _tie_term(sorted_y, lambda t: t * (t - 1))
        t2 = _tie_term(sorted_x, lambda t: t * (t - 1) * (t - 2))
        u2 = _tie_term(sorted_y, lambda t: t * (t - 1) * (t - 2))
        var = (
            (v0 - vt - vu) / 18.0
            + t1 * u1 / (2.0 * n * (n - 1))
            + t2 * u2 / (9.0 * n * (n - 1) * (n - 2))
        )
        if var <= 0.0:
            raise DegenerateInputError("kendall tau variance is zero")
        z = s / math.sqrt(var)
        p = 2.0 * float(_stats.norm.sf(abs(z)))
    return tau, min(1.0, p)


def _midranks(values: Sequence[float]) -> list[float]:
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _pearson(x: Sequence[float], y: Sequence[float]) -> float:
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    xc = xv - xv.mean()
    yc = yv - yv.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if denom == 0.0:
        raise DegenerateInputError("pearson undefined: zero variance")
    return float(xc @ yc) / denom


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Pearson correlation of midranks, with a t-approximation p-value."""
    n = _check_aligned(x, y, 3)
    rho = _pearson(_midranks(x), _midranks(y))
    if abs(rho) >= 1.0:
        return (1.0 if rho > 0 else -1.0), 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    p = 2.0 * float(_stats.t.sf(abs(t), n - 2))
    return rho, p


def distribution_summary(values: Sequence[float]) -> DistributionSummary:
    """Centrality and shape: median, midhinge, mean, population std,
    skewness g1, and excess kurtosis g2 (the latter two None when the
    variance is zero). Quartiles use linear interpolation."""
    if len(values) < 2:
        raise DegenerateInputError("need at least 2 values for a summary")
    v = np.asarray(values, dtype=np.float64)
    q1, q3 = (float(q) for q in np.percentile(v, [25.0, 75.0]))
    mean = float(v.mean())
    centered = v - mean
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        skewness: float | None = None
        kurtosis: float | None = None
    else:
        m3 = float(np.mean(centered**3))
        m4 = float(np.mean(centered**4))
        skewness = m3 / m2**1.5
        kurtosis = m4 / (m2 * m2) - 3.0
    return DistributionSummary(
        median=float(np.median(v)),
        midhinge=(q1 + q3) / 2.0,
        mean=mean,
        std_dev=math.sqrt(m2),
        skewness=skewness,
        excess_kurtosis=kurtosis,
    )


def tie_rate(a: ScoreVector, b: ScoreVector, params: MetaParams | None = None) -> float:
    """Fraction of aligned positions differing by less than tie_epsilon."""
    params = params or MetaParams()
    if len(a.values) != len(b.values):
        raise ShapeError(f"misaligned score vectors: {len(a.values)} vs {len(b.values)}")
    if not a.values:
        raise DegenerateInputError("empty score vectors")
    ties = sum(
        1 for va, vb in zip(a.values, b.values) if abs(va - vb) < params.tie_epsilon
    )
    return ties / len(a.values)


def corpus_tie_rate(
    vectors: Sequence[ScoreVector], params: MetaParams | None = None
) -> float:
    """Mean tie rate over all unordered model pairs of one metric."""
    if len(vectors) < 2:
        raise DegenerateInputError("need at least 2 models for tie analysis")
    rates = [
        tie_rate(vectors[i], vectors[j], params)
        for i in range(len(vectors))
        for j in range(i + 1, len(vectors))
    ]
    return sum(rates) / len(rates)


def _one_sided_less_p(a: np.ndarray, b: np.ndarray, paired: bool) -> float:
    """p-value for H1: mean(a) < mean(b); small p favors the hypothesis."""
    if paired:
        d = a - b
        n = len(d)
        sd = float(d.std(ddof=1))
        if sd == 0.0:
            dm = float(d.mean())
            return 0.5 if dm == 0.0 else (0.0 if dm < 0 else 1.0)
        t = float(d.mean()) / (sd / math.sqrt(n))
        return float(_stats.t.cdf(t, n - 1))
    na, nb = len(a), len(b)
    va = float(a.var(ddof=1))
    vb = float(b.var(ddof=1))
    pooled = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2)
    diff = float(a.mean()) - float(b.mean())
    if pooled == 0.0:
        return 0.5 if diff == 0.0 else (0.0 if diff < 0 else 1.0)
    t = diff / math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    return float(_stats.t.cdf(t, na + nb - 2))


def discriminative_power(
    vectors: Sequence[ScoreVector],
    params: MetaParams | None = None,
    paired: bool = False,
) -> SignificanceReport:
    """One-sided mean-comparison t-tests over every ordered model pair,
    Bonferroni-corrected: alpha = base_alpha / (2 * C(M, 2)).

    Default is the classic pooled-variance two-sample test; `paired` runs
    the dependent-samples variant instead.
    """
    params = params or MetaParams()
    if len(vectors) < 2:
        raise DegenerateInputError("need at least 2 models")
    length = len(vectors[0].values)
    if length < 2:
        raise DegenerateInputError("score vectors must have length >= 2")
    for vec in vectors:
        if len(vec.values) != length:
            raise ShapeError("score vectors are not aligned")
    arrays = {vec.model_id: np.asarray(vec.values, dtype=np.float64) for vec in vectors}
    if len(arrays) != len(vectors):
        raise ShapeError("duplicate model ids")
    model_ids = sorted(arrays)
    pairs = []
    for model_a in model_ids:
        for model_b in model_ids:
            if model_a == model_b:
                continue
            p = _one_sided_less_p(arrays[model_a], arrays[model_b], paired)
            pairs.append(PairHypothesis(model_a=model_a, model_b=model_b, p_value=p))
    alpha = params.base_alpha / len(pairs)
    significant = sum(1 for pair in pairs if pair.p_value < alpha)
    return SignificanceReport(pairs=tuple(pairs), alpha=alpha, significant_count=significant)


def distinguishability(
    metric_values_intra: Sequence[float], metric_values_inter: Sequence[float]
) -> float:
    """Ratio of mean intra-class to mean inter-class metric value."""
    if not metric_values_intra or not metric_values_inter:
        raise DegenerateInputError("intra and inter value sets must be non-empty")
    inter_mean = sum(metric_values_inter) / len(metric_values_inter)
    if inter_mean == 0.0:
        raise ZeroDivisionError("inter-class mean is zero")
    intra_mean = sum(metric_values_intra) / len(metric_values_intra)
    return intra_mean / inter_mean


def robustness_autocorrelation(
    before: ScoreVector, after: ScoreVector
) -> RobustnessReport:
    """Mean shift plus rank autocorrelations of a metric across a transform."""
    if len(before.values) != len(after.values):
        raise ShapeError(
            f"misaligned score vectors: {len(before.values)} vs {len(after.values)}"
        )
    delta = float(np.mean(after.values)) - float(np.mean(before.values))
    tau, tau_p = kendall_tau(before.values, after.values)
    rho, rho_p = spearman_rho(before.values, after.values)
    return RobustnessReport(delta_mean=delta, tau=tau, tau_p=tau_p, rho=rho, rho_p=rho_p)
