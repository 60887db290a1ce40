"""Pydantic request/response models for the HTTP service.

These mirror the core dataclasses but stay independent of them: the wire
format is the contract here, the core package owns the semantics.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"


class StudySummary(BaseModel):
    study_id: str
    scale: str
    conditions: int
    trials: int
    gold_pool: int
    sections_built: int = 0
    submissions: int = 0


class BuildRequest(BaseModel):
    seed: Optional[int] = None


class BuildResponse(BaseModel):
    study_id: str
    seed: int
    sections: int
    items: int


class SectionItemView(BaseModel):
    """Worker-visible rating item: URIs only, never order or gold metadata."""

    item_index: int
    clip_first_url: str
    clip_second_url: str


class SectionView(BaseModel):
    section_id: str
    items: list[SectionItemView]


class GoldAnswerPayload(BaseModel):
    trial_id: str
    rating: int


class VotePayload(BaseModel):
    """One vote in either form.

    Resolved form (platform exports): trial_id + raw_rating (+ order).
    Worker form (blinded rating page): item_index + rating; the service joins
    it against the section plan on ingestion.
    """

    trial_id: Optional[str] = None
    raw_rating: Optional[int] = None
    presentation_order: Optional[str] = None
    section_id: Optional[str] = None
    item_index: Optional[int] = None
    rating: Optional[int] = None
    listen_complete: bool = True
    timestamp: Optional[str] = None


class SubmissionPayload(BaseModel):
    """The ingestion schema: exactly what one worker session submits."""

    worker_id: str
    assignment_id: str
    session_timestamp: str
    section_id: Optional[str] = None
    device_check_answers: dict[str, str] = Field(default_factory=dict)
    environment_test_answers: dict[str, str] = Field(default_factory=dict)
    hearing_test_answers: Optional[dict[str, str]] = None
    training_answers: Optional[dict[str, str]] = None
    last_training_timestamp: Optional[str] = None
    gold_answers: list[GoldAnswerPayload] = Field(default_factory=list)
    votes: list[VotePayload] = Field(default_factory=list)


class SubmissionResponse(BaseModel):
    stored: bool
    accepted: Optional[bool] = None
    reasons: list[str] = Field(default_factory=list)
    training_flags: list[str] = Field(default_factory=list)


class AnswerKeyPayload(BaseModel):
    items: dict[str, str]
    pass_threshold: float


class KeysPayload(BaseModel):
    device: AnswerKeyPayload
    environment: AnswerKeyPayload
    hearing: Optional[AnswerKeyPayload] = None


class ScreeningSummaryResponse(BaseModel):
    total: int
    accepted: int
    acceptance_rate: float
    reason_counts: dict[str, int]
    votes_per_condition_mean: Optional[float] = None
    votes_per_condition_sd: Optional[float] = None


class ConditionScoreModel(BaseModel):
    condition_id: str
    mean: float
    n: int
    sd: float
    ci95: float


class ScoresResponse(BaseModel):
    study_id: str
    scores: list[ConditionScoreModel]


class CompareRequest(BaseModel):
    a: dict[str, float]
    b: dict[str, float]


class LinearMapModel(BaseModel):
    slope: float
    intercept: float
    rmse_before: float
    rmse_after: float


class CompareResponse(BaseModel):
    pcc: float
    srcc: float
    rmse: float
    n: int
    linear_map: LinearMapModel


class IccRequest(BaseModel):
    runs: list[dict[str, float]]


class IccResponse(BaseModel):
    icc: float
    n_subjects: int
    k_raters: int


class AnovaObservation(BaseModel):
    level_a: str
    level_b: str
    value: float


class AnovaRequest(BaseModel):
    observations: list[AnovaObservation]
    factor_a: str = "A"
    factor_b: str = "B"
    alpha: float = 0.05
    pairwise: Optional[str] = None  # "a" | "b"


class AnovaRowModel(BaseModel):
    effect: str
    ss: float
    df: int
    ms: float
    f: Optional[float] = None
    p: Optional[float] = None


class PairwiseEntryModel(BaseModel):
    level_a: str
    level_b: str
    p_value: float
    significant: bool


class AnovaResponse(BaseModel):
    factor_a: str
    factor_b: str
    balanced: bool
    rows: list[AnovaRowModel]
    pairwise: Optional[list[PairwiseEntryModel]] = None


class RankDeltaRequest(BaseModel):
    a: dict[str, float]
    b: dict[str, float]
    dimension_scores: Optional[dict[str, dict[str, float]]] = None


class RankDeltaEntry(BaseModel):
    condition_id: str
    rank_a: float
    rank_b: float
    delta: float


class DimensionCorrelation(BaseModel):
    dimension: str
    r: float
    p_value: Optional[float] = None
    n: int


class RankDeltaResponse(BaseModel):
    deltas: list[RankDeltaEntry]
    dimension_correlations: Optional[list[DimensionCorrelation]] = None


class SimulateRequest(BaseModel):
    true_scores: dict[str, float]
    runs: int = 3
    n_raters: int = 60
    votes_per_condition: int = 60
    vote_sd: float = 0.7
    bias_sd: float = 0.0
    offsets: Optional[list[float]] = None
    low: int = -3
    high: int = 3
    seed: int = 0


class RunComparisonModel(BaseModel):
    run_a: int
    run_b: int
    pcc: float
    srcc: float
    rmse: float
    icc: float


class SimulateResponse(BaseModel):
    conditions: list[str]
    comparisons: list[RunComparisonModel]
    icc_overall: float
    mean_ci_per_run: list[float]
    per_run_scores: list[list[ConditionScoreModel]]
