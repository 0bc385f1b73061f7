"""Ranking quality metrics and run-set comparison statistics.

NDCG@k with the 2^rel - 1 gain and log2(i+1) discount, the discounted
cumulative reward used for online performance, and a pooled-variance
two-tailed Student's t-test for comparing repeated runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import betainc


@dataclass(frozen=True)
class MetricConfig:
    kappa: int = 10
    gamma: float = 0.9995

    def __post_init__(self) -> None:
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")


def dcg_at_k(grades: Sequence[float] | np.ndarray, kappa: int) -> float:
    """Discounted cumulative gain of grades in displayed order, cut at kappa."""
    g = np.asarray(grades, dtype=np.float64)[:kappa]
    if g.size == 0:
        return 0.0
    discounts = np.log2(np.arange(2, g.size + 2, dtype=np.float64))
    return float(np.sum((np.exp2(g) - 1.0) / discounts))


def ndcg_at_k(
    ranking_grades: Sequence[float] | np.ndarray,
    ideal_pool: Sequence[float] | np.ndarray,
    kappa: int,
) -> float:
    """NDCG@kappa of a displayed grade sequence against the query's grade pool.

    The ideal DCG uses the kappa best grades in ``ideal_pool``. Queries whose
    pool carries no gain (all grades zero) score 0.0; callers wanting to audit
    how often that happens can check ``dcg_at_k(ideal, kappa) == 0`` upfront.
    """
    ideal = np.sort(np.asarray(ideal_pool, dtype=np.float64))[::-1]
    idcg = dcg_at_k(ideal, kappa)
    if idcg == 0.0:
        return 0.0
    return dcg_at_k(ranking_grades, kappa) / idcg


def online_performance(ndcg_sequence: Sequence[float] | np.ndarray, gamma: float) -> float:
    """Discounted cumulative reward: sum_t ndcg_t * gamma^(t-1)."""
    seq = np.asarray(ndcg_sequence, dtype=np.float64)
    if seq.size == 0:
        return 0.0
    return float(np.dot(seq, gamma ** np.arange(seq.size, dtype=np.float64)))


def p_value_from_t(t_statistic: float, df: int) -> float:
    """Two-tailed p-value of a t statistic via the regularized incomplete beta."""
    if df < 1:
        raise ValueError("df must be >= 1")
    t2 = t_statistic * t_statistic
    return float(betainc(df / 2.0, 0.5, df / (df + t2)))


@dataclass(frozen=True)
class ComparisonReport:
    mean_a: float
    mean_b: float
    std_a: float
    std_b: float
    t_statistic: float
    p_value: float
    n_a: int
    n_b: int
    degenerate_variance: bool = False

    @property
    def significant_05(self) -> bool:
        return self.p_value < 0.05

    @property
    def significant_01(self) -> bool:
        return self.p_value < 0.01


def t_test_two_tailed(
    sample_a: Sequence[float] | np.ndarray, sample_b: Sequence[float] | np.ndarray
) -> ComparisonReport:
    """Two-sample Student's t-test with pooled variance, df = n_a + n_b - 2.

    Zero pooled variance is degenerate: equal means give t=0, p=1; unequal
    means give p=0 with the degenerate flag set.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    n_a, n_b = a.size, b.size
    if n_a < 2 or n_b < 2:
        raise ValueError("each sample needs at least 2 observations")
    mean_a, mean_b = float(np.mean(a)), float(np.mean(b))
    std_a, std_b = float(np.std(a, ddof=1)), float(np.std(b, ddof=1))
    df = n_a + n_b - 2
    pooled_var = ((n_a - 1) * std_a**2 + (n_b - 1) * std_b**2) / df
    if pooled_var == 0.0:
        if mean_a == mean_b:
            t_stat, p = 0.0, 1.0
        else:
            t_stat = float(np.inf) if mean_a > mean_b else float(-np.inf)
            p = 0.0
        return ComparisonReport(
            mean_a, mean_b, std_a, std_b, t_stat, p, n_a, n_b,
            degenerate_variance=True,
        )
    t_stat = (mean_a - mean_b) / np.sqrt(pooled_var * (1.0 / n_a + 1.0 / n_b))
    return ComparisonReport(
        mean_a, mean_b, std_a, std_b, float(t_stat),
        p_value_from_t(float(t_stat), df), n_a, n_b,
    )
