"""HTTP service wrapping the core package for multi-client studies.

Workers (or the rating page) fetch blinded sections and POST submission
payloads; researchers register studies, trigger builds and pull screening,
scores and statistics. All state is an in-memory registry: persistence stays
with the file-based CLI pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .. import builder, scoring, simulator, stats
from ..ingest import resolve_submission, sections_index
from ..model import ConfigurationError, InputError, Submission, validate_submission, validate_training_exposure
from ..screening import AnswerKeyTest, ScreeningKeys, screen_batch, screening_summary, count_votes_per_condition
from ..study import Study, study_from_dict, study_to_dict
from . import schemas


@dataclass
class StudyState:
    study: Study
    sections: list[builder.RatingSection] = dataclass_field(default_factory=list)
    keys: Optional[ScreeningKeys] = None
    submissions: dict[str, Submission] = dataclass_field(default_factory=dict)


def create_app(preloaded: Optional[dict[str, StudyState]] = None) -> FastAPI:
    app = FastAPI(title="ccrkit", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    registry: dict[str, StudyState] = dict(preloaded or {})

    @app.exception_handler(InputError)
    async def input_error_handler(request: Request, exc: InputError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(ConfigurationError)
    async def config_error_handler(request: Request, exc: ConfigurationError) -> JSONResponse:
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    def get_state(study_id: str) -> StudyState:
        if study_id not in registry:
            raise HTTPException(status_code=404, detail=f"unknown study {study_id!r}")
        return registry[study_id]

    def summary_of(state: StudyState) -> schemas.StudySummary:
        return schemas.StudySummary(
            study_id=state.study.study_id,
            scale=state.study.config.scale.kind.value,
            conditions=len(state.study.conditions),
            trials=len(state.study.trials),
            gold_pool=len(state.study.gold_pool),
            sections_built=len(state.sections),
            submissions=len(state.submissions),
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse()

    @app.get("/studies", response_model=list[schemas.StudySummary])
    def list_studies() -> list[schemas.StudySummary]:
        return [summary_of(state) for state in registry.values()]

    @app.post("/studies", response_model=schemas.StudySummary, status_code=201)
    def register_study(payload: dict) -> schemas.StudySummary:
        study = study_from_dict(payload)
        if study.study_id in registry:
            raise HTTPException(status_code=409, detail=f"study {study.study_id!r} already registered")
        registry[study.study_id] = StudyState(study=study)
        return summary_of(registry[study.study_id])

    @app.get("/studies/{study_id}")
    def get_study(study_id: str) -> dict:
        return study_to_dict(get_state(study_id).study)

    @app.post("/studies/{study_id}/build", response_model=schemas.BuildResponse)
    def build_sections(study_id: str, request: schemas.BuildRequest) -> schemas.BuildResponse:
        state = get_state(study_id)
        seed = request.seed if request.seed is not None else state.study.config.seed
        state.sections = builder.assemble_sections(
            state.study.trials, state.study.gold_pool, state.study.config, seed
        )
        return schemas.BuildResponse(
            study_id=study_id,
            seed=seed,
            sections=len(state.sections),
            items=sum(len(s.items) for s in state.sections),
        )

    @app.get("/studies/{study_id}/sections", response_model=list[str])
    def list_sections(study_id: str) -> list[str]:
        return [section.section_id for section in get_state(study_id).sections]

    @app.get("/studies/{study_id}/sections/{section_id}", response_model=schemas.SectionView)
    def get_section(study_id: str, section_id: str) -> schemas.SectionView:
        # worker-facing: items carry URIs only, blinding preserved
        for section in get_state(study_id).sections:
            if section.section_id == section_id:
                return schemas.SectionView(
                    section_id=section_id,
                    items=[
                        schemas.SectionItemView(
                            item_index=index,
                            clip_first_url=item.first_uri,
                            clip_second_url=item.second_uri,
                        )
                        for index, item in enumerate(section.items)
                    ],
                )
        raise HTTPException(status_code=404, detail=f"unknown section {section_id!r}")

    @app.post("/studies/{study_id}/keys", response_model=schemas.HealthResponse)
    def register_keys(study_id: str, payload: schemas.KeysPayload) -> schemas.HealthResponse:
        state = get_state(study_id)

        def to_key(test_id: str, key: schemas.AnswerKeyPayload) -> AnswerKeyTest:
            return AnswerKeyTest(
                test_id=test_id,
                items=tuple(key.items.items()),
                pass_threshold=key.pass_threshold,
            )

        state.keys = ScreeningKeys(
            device=to_key("device", payload.device),
            environment=to_key("environment", payload.environment),
            hearing=to_key("hearing", payload.hearing) if payload.hearing else None,
            gold_expected=state.study.gold_expected,
        )
        return schemas.HealthResponse()

    @app.post("/studies/{study_id}/submissions", response_model=schemas.SubmissionResponse, status_code=201)
    def submit(study_id: str, payload: schemas.SubmissionPayload) -> schemas.SubmissionResponse:
        state = get_state(study_id)
        # exclude_none keeps resolved-form votes free of the worker-form keys
        data = payload.model_dump(exclude_none=True)
        submission = resolve_submission(data, sections_index(state.sections), where="submission")
        validate_submission(submission, state.study.trial_ids, state.study.config.scale)
        # idempotent on assignment_id: a retried POST overwrites the same slot
        state.submissions[submission.assignment_id] = submission
        response = schemas.SubmissionResponse(
            stored=True,
            training_flags=validate_training_exposure(submission, state.study.config),
        )
        if state.keys is not None:
            outcome = screen_batch([submission], state.keys, state.study.config)[0]
            response.accepted = outcome.accepted
            response.reasons = [r.value for r in outcome.reasons]
        return response

    @app.get("/studies/{study_id}/screening", response_model=schemas.ScreeningSummaryResponse)
    def screening(study_id: str) -> schemas.ScreeningSummaryResponse:
        state = get_state(study_id)
        if state.keys is None:
            raise HTTPException(status_code=409, detail="no answer keys registered for this study")
        if not state.submissions:
            raise HTTPException(status_code=409, detail="no submissions to screen")
        submissions = list(state.submissions.values())
        outcomes = screen_batch(submissions, state.keys, state.study.config)
        condition_of = {t.trial_id: t.condition_id for t in state.study.trials}
        votes = count_votes_per_condition(submissions, outcomes, condition_of)
        summary = screening_summary(outcomes, votes)
        return schemas.ScreeningSummaryResponse(
            total=summary.total,
            accepted=summary.accepted,
            acceptance_rate=summary.acceptance_rate,
            reason_counts=dict(summary.reason_counts),
            votes_per_condition_mean=summary.votes_per_condition_mean,
            votes_per_condition_sd=summary.votes_per_condition_sd,
        )

    @app.get("/studies/{study_id}/scores", response_model=schemas.ScoresResponse)
    def scores(study_id: str) -> schemas.ScoresResponse:
        state = get_state(study_id)
        if state.keys is None:
            raise HTTPException(status_code=409, detail="no answer keys registered for this study")
        submissions = list(state.submissions.values())
        outcomes = screen_batch(submissions, state.keys, state.study.config)
        accepted = {o.assignment_id for o in outcomes if o.accepted}
        condition_of = {t.trial_id: t.condition_id for t in state.study.trials}
        corrected = [
            scoring.CorrectedVote(
                trial_id=vote.trial_id,
                condition_id=condition_of[vote.trial_id],
                value=scoring.correct_vote(vote.raw_rating, vote.presentation_order),
            )
            for sub in submissions
            if sub.assignment_id in accepted
            for vote in sub.votes
        ]
        if not corrected:
            raise HTTPException(status_code=409, detail="no accepted votes to score")
        return schemas.ScoresResponse(
            study_id=study_id,
            scores=[
                schemas.ConditionScoreModel(**score.__dict__)
                for score in scoring.aggregate_all(corrected)
            ],
        )

    @app.post("/stats/compare", response_model=schemas.CompareResponse)
    def stats_compare(request: schemas.CompareRequest) -> schemas.CompareResponse:
        if set(request.a) != set(request.b):
            raise InputError("compare: condition sets differ between a and b")
        conditions = sorted(request.a)
        xs = [request.a[c] for c in conditions]
        ys = [request.b[c] for c in conditions]
        linear = stats.fit_linear_map(xs, ys)
        return schemas.CompareResponse(
            pcc=stats.pearson(xs, ys).r,
            srcc=stats.spearman(xs, ys).r,
            rmse=stats.rmse(xs, ys),
            n=len(conditions),
            linear_map=schemas.LinearMapModel(**linear.__dict__),
        )

    @app.post("/stats/icc", response_model=schemas.IccResponse)
    def stats_icc(request: schemas.IccRequest) -> schemas.IccResponse:
        if len(request.runs) < 2:
            raise InputError("icc: need at least 2 runs")
        conditions = sorted(request.runs[0])
        for i, run in enumerate(request.runs):
            if set(run) != set(conditions):
                raise InputError(f"icc: runs[{i}] condition set differs from runs[0]")
        matrix = [[run[c] for run in request.runs] for c in conditions]
        result = stats.icc_a1(matrix)
        return schemas.IccResponse(icc=result.icc, n_subjects=result.n_subjects, k_raters=result.k_raters)

    @app.post("/stats/anova", response_model=schemas.AnovaResponse)
    def stats_anova(request: schemas.AnovaRequest) -> schemas.AnovaResponse:
        table = stats.two_way_anova(
            [(o.level_a, o.level_b, o.value) for o in request.observations],
            factor_a=request.factor_a,
            factor_b=request.factor_b,
        )
        pairwise = None
        if request.pairwise in ("a", "b"):
            index = 0 if request.pairwise == "a" else 1
            groups: dict[str, list[float]] = {}
            for obs in request.observations:
                level = obs.level_a if index == 0 else obs.level_b
                groups.setdefault(level, []).append(obs.value)
            matrix = stats.bonferroni_pairwise(groups, alpha=request.alpha)
            pairwise = [
                schemas.PairwiseEntryModel(
                    level_a=c.level_a, level_b=c.level_b,
                    p_value=c.p_value, significant=c.significant,
                )
                for c in matrix.comparisons
            ]
        return schemas.AnovaResponse(
            factor_a=table.factor_a,
            factor_b=table.factor_b,
            balanced=table.balanced,
            rows=[schemas.AnovaRowModel(**row.__dict__) for row in table.rows],
            pairwise=pairwise,
        )

    @app.post("/stats/rankdelta", response_model=schemas.RankDeltaResponse)
    def stats_rankdelta(request: schemas.RankDeltaRequest) -> schemas.RankDeltaResponse:
        deltas = stats.rank_order_delta(request.a, request.b)
        entries = [
            schemas.RankDeltaEntry(
                condition_id=c, rank_a=d.rank_a, rank_b=d.rank_b, delta=d.delta,
            )
            for c, d in sorted(deltas.items())
        ]
        correlations = None
        if request.dimension_scores:
            delta_map = {c: d.delta for c, d in deltas.items()}
            correlations = []
            for dimension, score_map in sorted(request.dimension_scores.items()):
                result = stats.delta_dimension_correlation(delta_map, score_map)
                correlations.append(schemas.DimensionCorrelation(
                    dimension=dimension, r=result.r, p_value=result.p_value, n=result.n,
                ))
        return schemas.RankDeltaResponse(deltas=entries, dimension_correlations=correlations)

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(request: schemas.SimulateRequest) -> schemas.SimulateResponse:
        offsets = request.offsets or [0.0] * request.runs
        if len(offsets) != request.runs:
            raise InputError(f"simulate: {len(offsets)} offsets for {request.runs} runs")
        models = [
            simulator.RaterModel(
                bias_sd=request.bias_sd, vote_sd=request.vote_sd,
                offset=offset, low=request.low, high=request.high,
            )
            for offset in offsets
        ]
        result = simulator.run_replication_experiment(
            request.true_scores, models, request.n_raters, request.votes_per_condition, request.seed,
        )
        return schemas.SimulateResponse(
            conditions=list(result.conditions),
            comparisons=[schemas.RunComparisonModel(**c.__dict__) for c in result.comparisons],
            icc_overall=result.icc_overall,
            mean_ci_per_run=list(result.mean_ci_per_run),
            per_run_scores=[
                [schemas.ConditionScoreModel(**score.__dict__) for score in run]
                for run in result.per_run_scores
            ],
        )

    return app


app = create_app()
