"""Synthetic rater panels for end-to-end pipeline tests and replication studies.

The generative model is deliberately explicit: a vote is the true condition
score plus a run-level offset, a per-rater bias (constant within a run,
redrawn across runs) and per-vote Gaussian noise, rounded half away from
zero and clamped to the integer scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .model import ConditionScore
from .scoring import aggregate_values
from .stats import icc_a1, pearson, rmse, spearman


@dataclass(frozen=True)
class RaterModel:
    """Noise model of one rater panel."""

    bias_sd: float = 0.0
    vote_sd: float = 0.7
    offset: float = 0.0
    low: int = -3
    high: int = 3

    def __post_init__(self) -> None:
        if self.bias_sd < 0 or self.vote_sd < 0:
            raise ValueError("bias_sd and vote_sd must be non-negative")
        if self.low >= self.high:
            raise ValueError("scale clamp bounds must satisfy low < high")


@dataclass(frozen=True)
class SimulatedVote:
    condition_id: str
    rater_id: str
    value: int


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def simulate_votes(
    true_scores: Mapping[str, float],
    n_raters: int,
    votes_per_condition: int,
    model: RaterModel,
    seed,
) -> list[SimulatedVote]:
    """Draw exactly `votes_per_condition` votes per condition from one panel.

    Vote j of every condition goes to rater j % n_raters, so each rater
    covers each condition about equally often. Deterministic per seed.
    """
    if n_raters < 1 or votes_per_condition < 1:
        raise ValueError("n_raters and votes_per_condition must be >= 1")
    for condition, score in true_scores.items():
        if not model.low <= score <= model.high:
            raise ValueError(f"true score {score} of condition {condition!r} outside "
                             f"[{model.low}, {model.high}]")
    rng = np.random.default_rng(seed)
    biases = rng.normal(0.0, model.bias_sd, size=n_raters) if model.bias_sd > 0 else np.zeros(n_raters)
    votes = []
    for condition in sorted(true_scores):
        noise = (rng.normal(0.0, model.vote_sd, size=votes_per_condition)
                 if model.vote_sd > 0 else np.zeros(votes_per_condition))
        raters = np.arange(votes_per_condition) % n_raters
        raw = true_scores[condition] + model.offset + biases[raters] + noise
        values = np.clip(_round_half_away(raw), model.low, model.high).astype(int)
        votes.extend(
            SimulatedVote(condition_id=condition, rater_id=f"r{rater:04d}", value=int(value))
            for rater, value in zip(raters, values)
        )
    return votes


@dataclass(frozen=True)
class RunComparison:
    run_a: int
    run_b: int
    pcc: float
    srcc: float
    rmse: float
    icc: float


@dataclass(frozen=True)
class ReplicationReport:
    """Per-run condition scores plus the inter-run reliability statistics."""

    conditions: tuple[str, ...]
    per_run_scores: tuple[tuple[ConditionScore, ...], ...]
    comparisons: tuple[RunComparison, ...]
    icc_overall: float
    mean_ci_per_run: tuple[float, ...]


def run_replication_experiment(
    true_scores: Mapping[str, float],
    models: Sequence[RaterModel],
    n_raters: int,
    votes_per_condition: int,
    seed,
) -> ReplicationReport:
    """Simulate one run per model with an independent rater pool each.

    The report wires the per-run condition means through the stats module
    unchanged: pairwise PCC/SRCC/RMSE/ICC plus the overall ICC(A,1) over the
    conditions x runs matrix.
    """
    if len(models) < 2:
        raise ValueError("replication experiment needs at least 2 runs")
    conditions = tuple(sorted(true_scores))
    run_seeds = np.random.SeedSequence(seed).spawn(len(models))
    per_run_scores = []
    for model, run_seed in zip(models, run_seeds):
        votes = simulate_votes(true_scores, n_raters, votes_per_condition, model, run_seed)
        by_condition: dict[str, list[int]] = {c: [] for c in conditions}
        for vote in votes:
            by_condition[vote.condition_id].append(vote.value)
        per_run_scores.append(tuple(
            aggregate_values(by_condition[c], c) for c in conditions
        ))

    means = [[score.mean for score in run] for run in per_run_scores]
    comparisons = []
    for i in range(len(models)):
        for j in range(i + 1, len(models)):
            pair_matrix = [[means[i][c], means[j][c]] for c in range(len(conditions))]
            comparisons.append(RunComparison(
                run_a=i,
                run_b=j,
                pcc=pearson(means[i], means[j]).r,
                srcc=spearman(means[i], means[j]).r,
                rmse=rmse(means[i], means[j]),
                icc=icc_a1(pair_matrix).icc,
            ))
    full_matrix = [[means[run][c] for run in range(len(models))] for c in range(len(conditions))]
    return ReplicationReport(
        conditions=conditions,
        per_run_scores=tuple(per_run_scores),
        comparisons=tuple(comparisons),
        icc_overall=icc_a1(full_matrix).icc,
        mean_ci_per_run=tuple(
            sum(score.ci95 for score in run) / len(run) for run in per_run_scores
        ),
    )
