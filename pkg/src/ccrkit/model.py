"""Domain types shared across the toolkit.

All types are immutable after construction and safe to share between
concurrent workers. Structural rules that need study-wide context (trial
existence, scale bounds of votes) live in :func:`validate_submission`;
everything locally checkable is enforced in ``__post_init__``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Mapping, Optional, Sequence


class InputError(ValueError):
    """Malformed or inconsistent input data (names the offending field/file)."""


class ConfigurationError(ValueError):
    """An operation was invoked with an unusable configuration."""


class ScaleKind(str, Enum):
    CCR = "CCR"
    ACR = "ACR"


class PresentationOrder(str, Enum):
    REFERENCE_FIRST = "R_FIRST"
    PROCESSED_FIRST = "P_FIRST"


CCR_LABELS = (
    "Much Worse",
    "Worse",
    "Slightly Worse",
    "About the Same",
    "Slightly Better",
    "Better",
    "Much Better",
)
ACR_LABELS = ("Bad", "Poor", "Fair", "Good", "Excellent")


@dataclass(frozen=True)
class RatingScale:
    """Ordered category labels with their integer values.

    CCR is the 7-point comparison scale (-3..+3, midpoint "About the Same");
    ACR is the 5-point absolute scale (1..5).
    """

    kind: ScaleKind
    labels: tuple[str, ...]
    numeric_values: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.numeric_values):
            raise ValueError("labels and numeric_values must have equal length")
        if any(b <= a for a, b in zip(self.numeric_values, self.numeric_values[1:])):
            raise ValueError("numeric_values must be strictly increasing")
        if self.kind is ScaleKind.CCR:
            if len(self.labels) != 7:
                raise ValueError("CCR scale must have exactly 7 categories")
            mid = self.numeric_values.index(0) if 0 in self.numeric_values else -1
            if mid != 3 or self.labels[3] != "About the Same":
                raise ValueError('CCR midpoint must be 0 labeled "About the Same"')
        elif len(self.labels) != 5:
            raise ValueError("ACR scale must have exactly 5 categories")

    @classmethod
    def ccr(cls) -> "RatingScale":
        return cls(ScaleKind.CCR, CCR_LABELS, (-3, -2, -1, 0, 1, 2, 3))

    @classmethod
    def acr(cls) -> "RatingScale":
        return cls(ScaleKind.ACR, ACR_LABELS, (1, 2, 3, 4, 5))

    @property
    def low(self) -> int:
        return self.numeric_values[0]

    @property
    def high(self) -> int:
        return self.numeric_values[-1]

    def label_for(self, value: int) -> str:
        try:
            return self.labels[self.numeric_values.index(value)]
        except ValueError:
            raise ValueError(f"{value} is not on the {self.kind.value} scale") from None

    def value_for(self, label: str) -> int:
        try:
            return self.numeric_values[self.labels.index(label)]
        except ValueError:
            raise ValueError(f"{label!r} is not a {self.kind.value} category") from None

    def contains(self, value: int) -> bool:
        return value in self.numeric_values


@dataclass(frozen=True)
class Condition:
    """One degradation/processing configuration, optionally tagged by factors."""

    id: str
    description: str = ""
    factor_tags: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class TrialPair:
    """One reference/processed stimulus pair bound to a condition.

    Gold trials present the same reference clip twice, so the expected CCR
    answer is "About the Same" = 0.
    """

    trial_id: str
    condition_id: str
    reference_uri: str
    processed_uri: str
    is_gold: bool = False

    def __post_init__(self) -> None:
        if self.is_gold and self.reference_uri != self.processed_uri:
            raise ValueError(f"gold trial {self.trial_id} must repeat the reference clip")
        if not self.is_gold and self.reference_uri == self.processed_uri:
            raise ValueError(f"non-gold trial {self.trial_id} must have distinct reference/processed URIs")


@dataclass(frozen=True)
class StudyConfig:
    """All tunables of one CCR/ACR study."""

    scale: RatingScale
    section_size: int = 10
    golds_per_section: int = 1
    training_interval_minutes: float = 60.0
    gold_tolerance: int = 1
    hearing_pass_threshold: float = 5.0 / 6.0
    environment_pass_threshold: float = 0.8
    target_votes_per_trial: int = 30
    seed: int = 0


@dataclass(frozen=True)
class Violation:
    """One broken configuration rule: which field and what it violated."""

    field: str
    rule: str

    def __str__(self) -> str:
        return f"{self.field}: {self.rule}"


def validate_study_config(config: StudyConfig) -> list[Violation]:
    """Check every StudyConfig invariant; returns the (possibly empty) violation list.

    Violations are data, not failures: an empty list means the config is ok.
    """
    violations = []
    if not 10 <= config.section_size <= 12:
        violations.append(Violation("section_size", f"section_size outside 10..12 (got {config.section_size})"))
    if config.golds_per_section < 1:
        violations.append(Violation("golds_per_section", f"must be >= 1 (got {config.golds_per_section})"))
    if config.training_interval_minutes <= 0:
        violations.append(
            Violation("training_interval_minutes", f"must be > 0 (got {config.training_interval_minutes})")
        )
    if not 0 <= config.gold_tolerance <= 3:
        violations.append(Violation("gold_tolerance", f"must be within 0..3 (got {config.gold_tolerance})"))
    if not 0.0 <= config.hearing_pass_threshold <= 1.0:
        violations.append(
            Violation("hearing_pass_threshold", f"must be within [0,1] (got {config.hearing_pass_threshold})")
        )
    if not 0.0 <= config.environment_pass_threshold <= 1.0:
        violations.append(
            Violation("environment_pass_threshold", f"must be within [0,1] (got {config.environment_pass_threshold})")
        )
    if config.target_votes_per_trial < 1:
        violations.append(Violation("target_votes_per_trial", f"must be >= 1 (got {config.target_votes_per_trial})"))
    if not 0 <= config.seed < 2**64:
        violations.append(Violation("seed", f"must be a 64-bit unsigned integer (got {config.seed})"))
    return violations


@dataclass(frozen=True)
class VoteRecord:
    """One raw answer to a rating item, before any order correction."""

    trial_id: str
    raw_rating: int
    presentation_order: Optional[PresentationOrder] = None
    listen_complete: bool = True
    timestamp: Optional[str] = None


@dataclass(frozen=True)
class Submission:
    """One worker's raw answers for a single assignment (one rating section)."""

    worker_id: str
    assignment_id: str
    session_timestamp: str
    device_check_answers: Mapping[str, str] = field(default_factory=dict)
    environment_test_answers: Mapping[str, str] = field(default_factory=dict)
    hearing_test_answers: Optional[Mapping[str, str]] = None
    training_answers: Optional[Mapping[str, str]] = None
    last_training_timestamp: Optional[str] = None
    gold_answers: tuple[tuple[str, int], ...] = ()
    votes: tuple[VoteRecord, ...] = ()

    def __post_init__(self) -> None:
        vote_ids = {v.trial_id for v in self.votes}
        gold_ids = {trial_id for trial_id, _ in self.gold_answers}
        overlap = vote_ids & gold_ids
        if overlap:
            raise ValueError(f"trial ids appear in both votes and gold_answers: {sorted(overlap)}")


@dataclass(frozen=True)
class ConditionScore:
    """Aggregated CMOS/MOS for one condition with dispersion statistics."""

    condition_id: str
    mean: float
    n: int
    sd: float
    ci95: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"condition {self.condition_id}: n must be >= 1")
        if self.sd < 0 or self.ci95 < 0:
            raise ValueError(f"condition {self.condition_id}: sd and ci95 must be non-negative")


def parse_timestamp(value: str, field_name: str) -> datetime:
    """Parse an ISO-8601 UTC timestamp, raising InputError naming the field."""
    if not isinstance(value, str) or not value:
        raise InputError(f"{field_name}: expected an ISO-8601 timestamp, got {value!r}")
    text = value[:-1] + "+00:00" if value.endswith("Z") else value
    try:
        parsed = datetime.fromisoformat(text)
    except ValueError as exc:
        raise InputError(f"{field_name}: malformed timestamp {value!r}") from exc
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def validate_training_exposure(submission: Submission, config: StudyConfig) -> list[str]:
    """Advisory flags for the periodic-training rule.

    Training is due when no prior training is recorded or the elapsed time
    since the last one reaches the configured interval (whole seconds). A
    submission that is due but carries no training-section answers is
    flagged; flags never auto-reject.
    """
    flags: list[str] = []
    has_training_answers = bool(submission.training_answers)
    if submission.last_training_timestamp is None:
        due = True
    else:
        session = parse_timestamp(submission.session_timestamp, "session_timestamp")
        last = parse_timestamp(submission.last_training_timestamp, "last_training_timestamp")
        elapsed_seconds = int((session - last).total_seconds())
        due = elapsed_seconds >= config.training_interval_minutes * 60
    if due and not has_training_answers:
        flags.append("training_due_but_not_answered")
    return flags


def validate_submission(submission: Submission, known_trials: Sequence[str] | set[str],
                        scale: RatingScale) -> None:
    """Structural validation of a submission against a study.

    Raises InputError for votes/golds referencing unknown trials or ratings
    off the scale. Disjointness of vote and gold trial ids is already
    enforced at construction.
    """
    known = set(known_trials)
    for vote in submission.votes:
        if vote.trial_id not in known:
            raise InputError(f"votes: unknown trial {vote.trial_id!r}")
        if not scale.contains(vote.raw_rating):
            raise InputError(f"votes: rating {vote.raw_rating} for trial {vote.trial_id!r} "
                             f"is off the {scale.kind.value} scale")
        if scale.kind is ScaleKind.CCR and vote.presentation_order is None:
            raise InputError(f"votes: CCR vote for trial {vote.trial_id!r} lacks presentation_order")
    for trial_id, rating in submission.gold_answers:
        if trial_id not in known:
            raise InputError(f"gold_answers: unknown trial {trial_id!r}")
        if not scale.contains(rating):
            raise InputError(f"gold_answers: rating {rating} for trial {trial_id!r} "
                             f"is off the {scale.kind.value} scale")
