"""Order correction of CCR votes and per-condition score aggregation.

A corrected vote always expresses the quality of the processed signal
relative to the reference, whichever clip played first. Aggregation reports
the sample mean, sample standard deviation (n-1) and the Student-t 95%
confidence half-width. The SOS fit models vote variance as a parabola
``sd^2 = a * (mean - L) * (H - mean)`` over the scale bounds.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .distributions import t_quantile
from .model import ConditionScore, PresentationOrder


@dataclass(frozen=True)
class CorrectedVote:
    """One vote after order correction: quality of processed vs reference."""

    trial_id: str
    condition_id: str
    value: int


@dataclass(frozen=True)
class SosFit:
    """Fitted SOS parameter ``a`` with the scale bounds used and residual RMSE."""

    a: float
    low: float
    high: float
    rmse: float

    def predicted_variance(self, mean: float) -> float:
        return self.a * (mean - self.low) * (self.high - mean)


def correct_vote(raw: int, order: Optional[PresentationOrder]) -> int:
    """Sign-correct a raw CCR vote for its presentation order.

    Reference-first votes already rate processed vs reference; processed-first
    votes rated the reference against the processed clip, so the sign flips.
    """
    if order is None:
        raise ValueError("presentation order is undefined (ACR votes need no correction)")
    if order is PresentationOrder.REFERENCE_FIRST:
        return raw
    return -raw


def aggregate_values(values: Sequence[float], condition_id: str) -> ConditionScore:
    """Mean, sd and 95% CI half-width for one condition's votes.

    n=1 reports sd=0 and ci95=0 by convention.
    """
    n = len(values)
    if n == 0:
        raise ValueError(f"condition {condition_id!r}: no votes to aggregate")
    mean = sum(values) / n
    if n == 1:
        return ConditionScore(condition_id=condition_id, mean=mean, n=1, sd=0.0, ci95=0.0)
    variance = sum((v - mean) ** 2 for v in values) / (n - 1)
    sd = math.sqrt(variance)
    ci95 = t_quantile(0.975, n - 1) * sd / math.sqrt(n)
    return ConditionScore(condition_id=condition_id, mean=mean, n=n, sd=sd, ci95=ci95)


def aggregate_condition(votes: Iterable[CorrectedVote], condition_id: str) -> ConditionScore:
    values = [v.value for v in votes if v.condition_id == condition_id]
    return aggregate_values(values, condition_id)


def aggregate_all(votes: Iterable[CorrectedVote]) -> list[ConditionScore]:
    """Per-condition scores for every condition present, pooling all its stimuli."""
    by_condition: dict[str, list[int]] = defaultdict(list)
    for vote in votes:
        by_condition[vote.condition_id].append(vote.value)
    return [aggregate_values(values, cid) for cid, values in sorted(by_condition.items())]


def aggregate_by_trial(votes: Iterable[CorrectedVote]) -> list[ConditionScore]:
    """Per-stimulus scores (the trial id stands in as the score key)."""
    by_trial: dict[str, list[int]] = defaultdict(list)
    for vote in votes:
        by_trial[vote.trial_id].append(vote.value)
    return [aggregate_values(values, trial_id) for trial_id, values in sorted(by_trial.items())]


def normalize_mean_score(mean: float, low: float, high: float) -> float:
    """Map a mean score onto [0, 1] using the scale bounds."""
    if low >= high:
        raise ValueError(f"scale bounds must satisfy low < high, got ({low}, {high})")
    if not low <= mean <= high:
        raise ValueError(f"mean {mean} outside scale bounds [{low}, {high}]")
    return (mean - low) / (high - low)


def fit_sos(points: Sequence[tuple[float, float]], low: float, high: float) -> SosFit:
    """Least-squares fit of sd^2 = a*(mean-L)*(H-mean) over (mean, sd) points.

    Closed form: a = sum(w_i * sd_i^2) / sum(w_i^2) with w_i = (x_i-L)(H-x_i),
    clamped at 0. Means sitting exactly on a scale endpoint carry zero weight;
    if every mean does, the fit is degenerate.
    """
    if low >= high:
        raise ValueError(f"scale bounds must satisfy low < high, got ({low}, {high})")
    if len(points) < 2:
        raise ValueError("fit_sos needs at least 2 (mean, sd) points")
    for mean, _ in points:
        if not low <= mean <= high:
            raise ValueError(f"mean {mean} outside scale bounds [{low}, {high}]")
    weights = [(mean - low) * (high - mean) for mean, _ in points]
    denom = sum(w * w for w in weights)
    if denom == 0.0:
        raise ValueError("degenerate SOS fit: all means sit on the scale endpoints")
    numer = sum(w * sd * sd for w, (_, sd) in zip(weights, points))
    a = max(0.0, numer / denom)
    residuals = [sd * sd - a * w for w, (_, sd) in zip(weights, points)]
    rmse = math.sqrt(sum(r * r for r in residuals) / len(residuals))
    return SosFit(a=a, low=low, high=high, rmse=rmse)
