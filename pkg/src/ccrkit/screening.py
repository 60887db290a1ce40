"""Data cleansing: accept or reject submissions and summarize the outcome.

A submission is accepted only when the device check, environment test,
hearing test (when answered) and every gold question pass, and the section
is complete. All failed rules are collected -- rejection reasons never
short-circuit.
"""

from __future__ import annotations

import csv
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .model import InputError, RatingScale, StudyConfig, Submission, validate_submission
from .tables import SCREENED_COLUMNS, _require_columns


class ScreeningReason(str, Enum):
    GOLD_FAILED = "GoldFailed"
    DEVICE_CHECK_FAILED = "DeviceCheckFailed"
    ENVIRONMENT_FAILED = "EnvironmentFailed"
    HEARING_FAILED = "HearingFailed"
    INCOMPLETE = "Incomplete"


@dataclass(frozen=True)
class ScreeningOutcome:
    worker_id: str
    assignment_id: str
    accepted: bool
    reasons: tuple[ScreeningReason, ...] = ()

    def __post_init__(self) -> None:
        if self.accepted != (len(self.reasons) == 0):
            raise ValueError("accepted must be true exactly when reasons is empty")


@dataclass(frozen=True)
class AnswerKeyTest:
    """Fixed answer key for a setup/qualification quiz."""

    test_id: str
    items: tuple[tuple[str, str], ...]
    pass_threshold: float

    def __post_init__(self) -> None:
        if not self.items:
            raise ValueError(f"answer key {self.test_id!r} has no items")
        if not 0.0 <= self.pass_threshold <= 1.0:
            raise ValueError(f"answer key {self.test_id!r}: threshold must be within [0,1]")


@dataclass(frozen=True)
class ScreeningKeys:
    """The answer keys one study screens against."""

    device: AnswerKeyTest
    environment: AnswerKeyTest
    hearing: Optional[AnswerKeyTest] = None
    gold_expected: Mapping[str, int] = field(default_factory=dict)


def score_answer_key_test(answers: Mapping[str, str], key: AnswerKeyTest) -> tuple[float, bool]:
    """Exact-match fraction against the key; missing answers count as wrong."""
    correct = sum(1 for item_id, expected in key.items if answers.get(item_id) == expected)
    fraction = correct / len(key.items)
    return fraction, fraction >= key.pass_threshold


def validate_gold(gold_answer: int, expected: int, tolerance: int) -> bool:
    """Pass iff the answer lies within `tolerance` categories of the expected one."""
    return abs(gold_answer - expected) <= tolerance


def screen_submission(
    submission: Submission,
    keys: ScreeningKeys,
    config: StudyConfig,
    known_trials: Optional[set[str]] = None,
) -> ScreeningOutcome:
    """Apply every screening rule and collect all violations.

    Rules in order: device check, environment test, hearing test (only when
    the submission answered one), every gold answer, completeness (all
    section votes present and fully listened). The hearing test is a one-time
    qualification, so submissions without hearing answers skip that rule.
    """
    if known_trials is not None:
        validate_submission(submission, known_trials, config.scale)

    reasons: list[ScreeningReason] = []
    _, device_ok = score_answer_key_test(submission.device_check_answers, keys.device)
    if not device_ok:
        reasons.append(ScreeningReason.DEVICE_CHECK_FAILED)
    _, environment_ok = score_answer_key_test(submission.environment_test_answers, keys.environment)
    if not environment_ok:
        reasons.append(ScreeningReason.ENVIRONMENT_FAILED)
    if keys.hearing is not None and submission.hearing_test_answers is not None:
        _, hearing_ok = score_answer_key_test(submission.hearing_test_answers, keys.hearing)
        if not hearing_ok:
            reasons.append(ScreeningReason.HEARING_FAILED)

    gold_failed = False
    for trial_id, rating in submission.gold_answers:
        expected = keys.gold_expected.get(trial_id, 0)
        if not validate_gold(rating, expected, config.gold_tolerance):
            gold_failed = True
    if gold_failed:
        reasons.append(ScreeningReason.GOLD_FAILED)

    incomplete = (
        len(submission.votes) < config.section_size
        or len(submission.gold_answers) < config.golds_per_section
        or any(not vote.listen_complete for vote in submission.votes)
    )
    if incomplete:
        reasons.append(ScreeningReason.INCOMPLETE)

    return ScreeningOutcome(
        worker_id=submission.worker_id,
        assignment_id=submission.assignment_id,
        accepted=not reasons,
        reasons=tuple(reasons),
    )


def screen_batch(
    submissions: Iterable[Submission],
    keys: ScreeningKeys,
    config: StudyConfig,
    known_trials: Optional[set[str]] = None,
) -> list[ScreeningOutcome]:
    return [screen_submission(sub, keys, config, known_trials) for sub in submissions]


@dataclass(frozen=True)
class ScreeningSummary:
    total: int
    accepted: int
    acceptance_rate: float
    reason_counts: Mapping[str, int]
    votes_per_condition: Mapping[str, int]
    votes_per_condition_mean: Optional[float]
    votes_per_condition_sd: Optional[float]


def count_votes_per_condition(
    submissions: Iterable[Submission],
    outcomes: Sequence[ScreeningOutcome],
    condition_of: Mapping[str, str],
) -> dict[str, int]:
    """Accepted vote counts per condition (gold trials excluded)."""
    accepted_ids = {o.assignment_id for o in outcomes if o.accepted}
    counts: dict[str, int] = defaultdict(int)
    for sub in submissions:
        if sub.assignment_id not in accepted_ids:
            continue
        for vote in sub.votes:
            condition = condition_of.get(vote.trial_id)
            if condition is None:
                raise InputError(f"votes: unknown trial {vote.trial_id!r}")
            counts[condition] += 1
    return dict(counts)


def screening_summary(
    outcomes: Sequence[ScreeningOutcome],
    votes_per_condition: Optional[Mapping[str, int]] = None,
) -> ScreeningSummary:
    """Acceptance rate, per-reason counts and accepted-votes-per-condition stats."""
    if not outcomes:
        raise ValueError("screening_summary: no outcomes")
    accepted = sum(1 for o in outcomes if o.accepted)
    reason_counts = Counter(reason.value for o in outcomes for reason in o.reasons)
    mean = sd = None
    votes_per_condition = dict(votes_per_condition or {})
    if votes_per_condition:
        counts = list(votes_per_condition.values())
        mean = sum(counts) / len(counts)
        if len(counts) > 1:
            sd = math.sqrt(sum((c - mean) ** 2 for c in counts) / (len(counts) - 1))
        else:
            sd = 0.0
    return ScreeningSummary(
        total=len(outcomes),
        accepted=accepted,
        acceptance_rate=accepted / len(outcomes),
        reason_counts=dict(reason_counts),
        votes_per_condition=votes_per_condition,
        votes_per_condition_mean=mean,
        votes_per_condition_sd=sd,
    )


def write_outcomes(outcomes: Iterable[ScreeningOutcome], path: str | Path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SCREENED_COLUMNS)
        for outcome in outcomes:
            writer.writerow([
                outcome.worker_id, outcome.assignment_id,
                "true" if outcome.accepted else "false",
                ";".join(r.value for r in outcome.reasons),
            ])


def read_outcomes(path: str | Path) -> list[ScreeningOutcome]:
    path = Path(path)
    outcomes = []
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        _require_columns(reader, SCREENED_COLUMNS, path)
        for record in reader:
            reasons = tuple(
                ScreeningReason(token) for token in record["reasons"].split(";") if token
            )
            outcomes.append(ScreeningOutcome(
                worker_id=record["worker_id"],
                assignment_id=record["assignment_id"],
                accepted=record["accepted"] == "true",
                reasons=reasons,
            ))
    return outcomes


def read_answer_keys(path: str | Path) -> dict[str, AnswerKeyTest]:
    """Answer-key CSV: test_id, item_id, expected, threshold (one row per item)."""
    path = Path(path)
    items: dict[str, list[tuple[str, str]]] = defaultdict(list)
    thresholds: dict[str, float] = {}
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        _require_columns(reader, ["test_id", "item_id", "expected", "threshold"], path)
        for record in reader:
            test_id = record["test_id"]
            items[test_id].append((record["item_id"], record["expected"]))
            thresholds[test_id] = float(record["threshold"])
    return {
        test_id: AnswerKeyTest(test_id=test_id, items=tuple(rows), pass_threshold=thresholds[test_id])
        for test_id, rows in items.items()
    }
