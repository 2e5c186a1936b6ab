"""Nonparametric statistics: correlations, Cliff's delta, exact Wilcoxon.

Rank-based quantities are computed with average ranks for ties. The Wilcoxon
signed-rank test discards zero differences, returns the exact two-sided
permutation p-value (dynamic program over the 2^n sign assignments) up to
n = 25, and a tie-corrected normal approximation above. Effect sizes carry
the conventional |d| interpretation bands 0.11 / 0.28 / 0.43.
"""

import math
from dataclasses import dataclass

import numpy as np

MAGNITUDE_BANDS = (0.11, 0.28, 0.43)
MAGNITUDE_NAMES = ("negligible", "small", "medium", "large")
EXACT_WILCOXON_MAX_N = 25


@dataclass(frozen=True)
class CorrelationReport:
    rho_p: float
    rho_s: float
    n: int
    r_x: tuple[float, ...]  # rank vectors retained for audit
    r_y: tuple[float, ...]


@dataclass(frozen=True)
class EffectSizeReport:
    d_c: float
    m: int
    n: int
    magnitude: str


@dataclass(frozen=True)
class TestResult:
    p_value: float
    statistic: float  # W+: rank sum of positive differences
    n: int            # nonzero differences used
    alpha: float
    m_comparisons: int
    corrected_threshold: float
    significant: bool
    degenerate: bool = False
    method: str = "exact"


def average_ranks(x) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank positions."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size)
    sorted_x = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _paired_vectors(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("inputs must be 1-D vectors of equal length")
    if x.size < 2:
        raise ValueError("need at least two pairs")
    return x, y


def pearson(x, y) -> float:
    x, y = _paired_vectors(x, y)
    xc, yc = x - x.mean(), y - y.mean()
    vx, vy = float(xc @ xc), float(yc @ yc)
    if vx == 0.0 or vy == 0.0:
        raise ValueError("zero variance input")
    return float((xc @ yc) / math.sqrt(vx * vy))


def spearman(x, y) -> float:
    x, y = _paired_vectors(x, y)
    return pearson(average_ranks(x), average_ranks(y))


def correlation_report(x, y) -> CorrelationReport:
    x, y = _paired_vectors(x, y)
    rx, ry = average_ranks(x), average_ranks(y)
    return CorrelationReport(pearson(x, y), pearson(rx, ry), int(x.size),
                             tuple(rx.tolist()), tuple(ry.tolist()))


def classify_effect(d_c: float) -> str:
    mag = abs(float(d_c))
    if mag > 1.0:
        raise ValueError("effect size magnitude cannot exceed 1")
    idx = int(np.searchsorted(MAGNITUDE_BANDS, mag, side="right"))
    return MAGNITUDE_NAMES[idx]


def cliffs_delta(x, y) -> EffectSizeReport:
    """Dominance difference: (#{x_i > y_j} - #{x_i < y_j}) / (m * n)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size == 0 or y.size == 0:
        raise ValueError("both samples must be non-empty")
    diff = np.sign(x[:, None] - y[None, :])
    d_c = float(diff.sum() / diff.size)
    return EffectSizeReport(d_c, int(x.size), int(y.size), classify_effect(d_c))


def _exact_signed_rank_p(doubled_ranks: np.ndarray, w2: int) -> float:
    """Two-sided permutation p over all sign assignments of the given ranks.

    Ranks are doubled so average ranks (.5 steps) become integers; the
    distribution of the doubled positive-rank sum is built by subset-sum
    counting, conditioning on the observed (tied) ranks.
    """
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled_ranks:
        r = int(r)
        grown = counts.copy()
        grown[r:] += counts[:counts.size - r]
        counts = grown
    counts /= counts.sum()
    lower = float(counts[:w2 + 1].sum())
    upper = float(counts[w2:].sum())
    return min(1.0, 2.0 * min(lower, upper))


def wilcoxon_signed_rank(pairs, alpha: float = 0.05, m_comparisons: int = 1
                         ) -> TestResult:
    """Paired two-sided signed-rank test; zero differences are discarded."""
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
        raise ValueError("pairs must be a non-empty (n, 2) array")
    if m_comparisons < 1 or not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1) and m_comparisons >= 1")
    corrected = alpha / m_comparisons

    d = arr[:, 0] - arr[:, 1]
    d = d[d != 0.0]
    if d.size == 0:
        return TestResult(1.0, 0.0, 0, alpha, m_comparisons, corrected,
                          significant=False, degenerate=True,
                          method="degenerate")

    ranks = average_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    n = int(d.size)

    if n <= EXACT_WILCOXON_MAX_N:
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        w2 = int(round(2.0 * w_plus))
        p = _exact_signed_rank_p(doubled, w2)
        method = "exact"
    else:
        mu = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0
        _, tie_counts = np.unique(np.abs(d), return_counts=True)
        var -= float(((tie_counts ** 3 - tie_counts) / 48.0).sum())
        z = (w_plus - mu) / math.sqrt(var)
        p = math.erfc(abs(z) / math.sqrt(2.0))
        method = "normal_approx"

    return TestResult(p, w_plus, n, alpha, m_comparisons, corrected,
                      significant=p < corrected, method=method)


def fit_line(x, y) -> tuple[float, float]:
    """Ordinary least squares; returns (slope, intercept)."""
    x, y = _paired_vectors(x, y)
    xc = x - x.mean()
    vx = float(xc @ xc)
    if vx == 0.0:
        raise ValueError("constant x cannot determine a slope")
    slope = float((xc @ (y - y.mean())) / vx)
    return slope, float(y.mean() - slope * x.mean())
