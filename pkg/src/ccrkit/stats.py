"""Correlation, reliability and significance statistics for condition scores.

Covers Pearson/Spearman correlation, single-measure absolute-agreement
intraclass correlation ICC(A,1), two-way ANOVA with Bonferroni-corrected
Welch pairwise tests, first-order (linear) inter-run mapping, rank-order
deltas and conclusion-agreement scoring. All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .distributions import f_sf, t_sf
from .model import InputError


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    n: int
    method: str  # "pearson" | "spearman"
    p_value: Optional[float] = None


@dataclass(frozen=True)
class IccResult:
    icc: float
    n_subjects: int
    k_raters: int
    ms_rows: float
    ms_cols: float
    ms_error: float


@dataclass(frozen=True)
class AnovaRow:
    effect: str
    ss: float
    df: int
    ms: float
    f: Optional[float] = None
    p: Optional[float] = None


@dataclass(frozen=True)
class AnovaTable:
    factor_a: str
    factor_b: str
    rows: tuple[AnovaRow, ...]
    balanced: bool

    def row(self, effect: str) -> AnovaRow:
        for row in self.rows:
            if row.effect == effect:
                return row
        raise KeyError(effect)


@dataclass(frozen=True)
class PairwiseComparison:
    level_a: str
    level_b: str
    t_stat: float
    df: float
    p_value: float
    significant: bool


@dataclass(frozen=True)
class PairwiseMatrix:
    """Symmetric significance matrix over all unordered level pairs."""

    levels: tuple[str, ...]
    alpha: float
    corrected_alpha: float
    comparisons: tuple[PairwiseComparison, ...]

    def comparison(self, a: str, b: str) -> PairwiseComparison:
        for comp in self.comparisons:
            if {comp.level_a, comp.level_b} == {a, b}:
                return comp
        raise KeyError((a, b))

    def is_significant(self, a: str, b: str) -> bool:
        return self.comparison(a, b).significant

    def verdicts(self) -> dict[frozenset, bool]:
        return {frozenset((c.level_a, c.level_b)): c.significant for c in self.comparisons}


@dataclass(frozen=True)
class LinearMap:
    slope: float
    intercept: float
    rmse_before: float
    rmse_after: float

    def apply(self, values: Sequence[float]) -> list[float]:
        return [self.slope * v + self.intercept for v in values]


@dataclass(frozen=True)
class RankDelta:
    rank_a: float
    rank_b: float
    delta: float


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def rmse(x: Sequence[float], y: Sequence[float]) -> float:
    """Root mean squared difference of two equal-length vectors."""
    if len(x) != len(y):
        raise ValueError(f"rmse: length mismatch ({len(x)} vs {len(y)})")
    if not x:
        raise ValueError("rmse: empty vectors")
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(x, y)) / len(x))


def _correlation_p_value(r: float, n: int) -> Optional[float]:
    # two-sided p from t with n-2 df; undefined below 3 points
    if n < 3:
        return None
    if abs(r) >= 1.0:
        return 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return 2.0 * t_sf(abs(t), n - 2)


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Product-moment correlation coefficient of two vectors."""
    if len(x) != len(y):
        raise ValueError(f"pearson: length mismatch ({len(x)} vs {len(y)})")
    n = len(x)
    if n < 2:
        raise ValueError("pearson: need at least 2 points")
    mx, my = _mean(x), _mean(y)
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = sum(v * v for v in dx)
    syy = sum(v * v for v in dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("pearson: undefined for zero-variance input")
    sxy = sum(a * b for a, b in zip(dx, dy))
    r = sxy / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    return CorrelationResult(r=r, n=n, method="pearson", p_value=_correlation_p_value(r, n))


def average_ranks(values: Sequence[float], descending: bool = False) -> list[float]:
    """Ranks starting at 1, ties receiving the average of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i], reverse=descending)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Rank correlation: Pearson applied to average ranks."""
    result = pearson(average_ranks(x), average_ranks(y))
    return CorrelationResult(r=result.r, n=result.n, method="spearman", p_value=result.p_value)


def icc_a1(matrix: Sequence[Sequence[float]]) -> IccResult:
    """ICC(A,1): single measure, absolute agreement, two-way model.

    ``matrix`` is n subjects (conditions) by k raters (runs), complete.
    icc = (MSR - MSE) / (MSR + (k-1)*MSE + (k/n)*(MSC - MSE)).
    """
    n = len(matrix)
    if n < 2:
        raise ValueError("icc_a1: need at least 2 subjects")
    k = len(matrix[0])
    if k < 2:
        raise ValueError("icc_a1: need at least 2 raters")
    for i, row in enumerate(matrix):
        if len(row) != k:
            raise ValueError(f"icc_a1: incomplete matrix (row {i} has {len(row)} of {k} entries)")
        for value in row:
            if value is None or (isinstance(value, float) and math.isnan(value)):
                raise ValueError(f"icc_a1: incomplete matrix (missing value in row {i})")

    grand = sum(sum(row) for row in matrix) / (n * k)
    row_means = [_mean(row) for row in matrix]
    col_means = [_mean([matrix[i][j] for i in range(n)]) for j in range(k)]
    ss_rows = k * sum((rm - grand) ** 2 for rm in row_means)
    ss_cols = n * sum((cm - grand) ** 2 for cm in col_means)
    ss_error = sum(
        (matrix[i][j] - row_means[i] - col_means[j] + grand) ** 2
        for i in range(n)
        for j in range(k)
    )
    msr = ss_rows / (n - 1)
    msc = ss_cols / (k - 1)
    mse = ss_error / ((n - 1) * (k - 1))
    denom = msr + (k - 1) * mse + (k / n) * (msc - mse)
    if denom == 0.0:
        raise ValueError("icc_a1: undefined for a constant matrix")
    icc = (msr - mse) / denom
    return IccResult(icc=icc, n_subjects=n, k_raters=k, ms_rows=msr, ms_cols=msc, ms_error=mse)


def two_way_anova(
    observations: Iterable[tuple[str, str, float]],
    factor_a: str = "A",
    factor_b: str = "B",
) -> AnovaTable:
    """Two-way ANOVA over (level_a, level_b, value) observations.

    Balanced data gets the classical sum-of-squares decomposition. Unbalanced
    data falls back to the unweighted-means approximation: effects computed
    on cell means and scaled by the harmonic mean of the cell counts (the two
    coincide when every cell has the same count).
    """
    cells: dict[tuple[str, str], list[float]] = {}
    for la, lb, value in observations:
        cells.setdefault((la, lb), []).append(value)
    levels_a = sorted({la for la, _ in cells})
    levels_b = sorted({lb for _, lb in cells})
    a, b = len(levels_a), len(levels_b)
    if a < 2 or b < 2:
        raise ValueError(f"two_way_anova: need >=2 levels per factor (got {a}x{b})")
    for la in levels_a:
        for lb in levels_b:
            if (la, lb) not in cells:
                raise ValueError(f"two_way_anova: empty cell ({la}, {lb})")

    counts = [len(cells[(la, lb)]) for la in levels_a for lb in levels_b]
    n_total = sum(counts)
    balanced = len(set(counts)) == 1
    harmonic_n = len(counts) / sum(1.0 / c for c in counts)

    cell_means = {key: _mean(values) for key, values in cells.items()}
    grand = _mean(list(cell_means.values()))
    mean_a = {la: _mean([cell_means[(la, lb)] for lb in levels_b]) for la in levels_a}
    mean_b = {lb: _mean([cell_means[(la, lb)] for la in levels_a]) for lb in levels_b}

    ss_a = harmonic_n * b * sum((mean_a[la] - grand) ** 2 for la in levels_a)
    ss_b = harmonic_n * a * sum((mean_b[lb] - grand) ** 2 for lb in levels_b)
    ss_ab = harmonic_n * sum(
        (cell_means[(la, lb)] - mean_a[la] - mean_b[lb] + grand) ** 2
        for la in levels_a
        for lb in levels_b
    )
    ss_error = sum(
        (value - cell_means[key]) ** 2 for key, values in cells.items() for value in values
    )

    df_a, df_b, df_ab = a - 1, b - 1, (a - 1) * (b - 1)
    df_error = n_total - a * b
    if df_error <= 0:
        raise ValueError("two_way_anova: no residual degrees of freedom (one observation per cell)")
    ms_error = ss_error / df_error

    def effect_row(effect: str, ss: float, df: int) -> AnovaRow:
        ms = ss / df
        if ms_error == 0.0:
            # all-cells-deterministic edge: infinite F when the effect is nonzero
            f = math.inf if ss > 0 else 0.0
            p = 0.0 if ss > 0 else 1.0
        else:
            f = ms / ms_error
            p = f_sf(f, df, df_error)
        return AnovaRow(effect=effect, ss=ss, df=df, ms=ms, f=f, p=p)

    rows = (
        effect_row(factor_a, ss_a, df_a),
        effect_row(factor_b, ss_b, df_b),
        effect_row("interaction", ss_ab, df_ab),
        AnovaRow(effect="residual", ss=ss_error, df=df_error, ms=ms_error),
    )
    return AnovaTable(factor_a=factor_a, factor_b=factor_b, rows=rows, balanced=balanced)


def _welch_t(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """Welch two-sample t statistic, Satterthwaite df and two-sided p."""
    nx, ny = len(x), len(y)
    mx, my = _mean(x), _mean(y)
    vx = sum((v - mx) ** 2 for v in x) / (nx - 1)
    vy = sum((v - my) ** 2 for v in y) / (ny - 1)
    se2 = vx / nx + vy / ny
    if se2 == 0.0:
        # identical constant groups: no evidence of a difference unless means differ
        if mx == my:
            return 0.0, float(nx + ny - 2), 1.0
        return math.inf, float(nx + ny - 2), 0.0
    t = (mx - my) / math.sqrt(se2)
    df = se2 * se2 / ((vx / nx) ** 2 / (nx - 1) + (vy / ny) ** 2 / (ny - 1))
    p = 2.0 * t_sf(abs(t), df)
    return t, df, p


def bonferroni_pairwise(groups: Mapping[str, Sequence[float]], alpha: float = 0.05) -> PairwiseMatrix:
    """Welch t-tests over all unordered group pairs with Bonferroni correction.

    A pair is significant iff its two-sided p-value falls below
    alpha / C(m, 2) for m groups.
    """
    levels = tuple(sorted(groups))
    if len(levels) < 2:
        raise ValueError("bonferroni_pairwise: need at least 2 groups")
    for level in levels:
        if len(groups[level]) < 2:
            raise ValueError(f"bonferroni_pairwise: group {level!r} has fewer than 2 values")
    n_pairs = len(levels) * (len(levels) - 1) // 2
    corrected = alpha / n_pairs
    comparisons = []
    for i, la in enumerate(levels):
        for lb in levels[i + 1:]:
            t, df, p = _welch_t(groups[la], groups[lb])
            comparisons.append(
                PairwiseComparison(level_a=la, level_b=lb, t_stat=t, df=df,
                                   p_value=p, significant=p < corrected)
            )
    return PairwiseMatrix(levels=levels, alpha=alpha, corrected_alpha=corrected,
                          comparisons=tuple(comparisons))


def fit_linear_map(source: Sequence[float], target: Sequence[float]) -> LinearMap:
    """Least-squares first-order mapping target ~ slope*source + intercept.

    rmse_before compares target against the unmapped source; rmse_after
    against the mapped source. Least squares guarantees after <= before.
    """
    if len(source) != len(target):
        raise ValueError(f"fit_linear_map: length mismatch ({len(source)} vs {len(target)})")
    if len(source) < 2:
        raise ValueError("fit_linear_map: need at least 2 points")
    ms = _mean(source)
    mt = _mean(target)
    sxx = sum((v - ms) ** 2 for v in source)
    if sxx == 0.0:
        raise ValueError("fit_linear_map: source vector is constant")
    sxy = sum((s - ms) * (t - mt) for s, t in zip(source, target))
    slope = sxy / sxx
    intercept = mt - slope * ms
    before = rmse(source, target)
    after = rmse([slope * s + intercept for s in source], target)
    return LinearMap(slope=slope, intercept=intercept, rmse_before=before, rmse_after=after)


def rank_order_delta(
    scores_a: Mapping[str, float], scores_b: Mapping[str, float]
) -> dict[str, RankDelta]:
    """Per-condition rank positions in both score sets and their difference.

    Rank 1 is the best quality (highest mean) in both sets, ties get average
    ranks; delta = rank_a - rank_b.
    """
    if set(scores_a) != set(scores_b):
        only_a = sorted(set(scores_a) - set(scores_b))
        only_b = sorted(set(scores_b) - set(scores_a))
        raise InputError(f"rank_order_delta: condition sets differ (only_a={only_a}, only_b={only_b})")
    conditions = sorted(scores_a)
    ranks_a = average_ranks([scores_a[c] for c in conditions], descending=True)
    ranks_b = average_ranks([scores_b[c] for c in conditions], descending=True)
    return {
        c: RankDelta(rank_a=ra, rank_b=rb, delta=ra - rb)
        for c, ra, rb in zip(conditions, ranks_a, ranks_b)
    }


def delta_dimension_correlation(
    deltas: Mapping[str, float], dimension_scores: Mapping[str, float]
) -> CorrelationResult:
    """Pearson correlation between rank deltas and a per-condition dimension score."""
    if set(deltas) != set(dimension_scores):
        raise InputError("delta_dimension_correlation: condition sets differ")
    conditions = sorted(deltas)
    return pearson([deltas[c] for c in conditions], [dimension_scores[c] for c in conditions])


def conclusion_agreement(runs: Sequence[PairwiseMatrix]) -> float:
    """Fraction of level pairs on which every run reaches the same verdict."""
    if len(runs) < 2:
        raise ValueError("conclusion_agreement: need at least 2 runs")
    level_sets = {run.levels for run in runs}
    if len(level_sets) != 1:
        raise InputError("conclusion_agreement: runs cover different level sets")
    verdict_maps = [run.verdicts() for run in runs]
    pairs = verdict_maps[0].keys()
    agreeing = sum(
        1 for pair in pairs if len({vm[pair] for vm in verdict_maps}) == 1
    )
    return agreeing / len(pairs)
