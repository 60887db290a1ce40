"""Study definition container and its JSON file format.

The on-disk layout is documented in ``docs/study.schema.json``; field names
there map 1:1 onto :class:`Study` and :class:`~ccrkit.model.StudyConfig`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from .model import (
    Condition,
    ConfigurationError,
    InputError,
    RatingScale,
    ScaleKind,
    StudyConfig,
    TrialPair,
)

# Reserved condition id carried by gold trials in manifests and vote tables.
GOLD_CONDITION = "__gold__"


@dataclass(frozen=True)
class TrainingBlock:
    """Content of the periodic training section: anchors plus one gold with feedback."""

    anchors: tuple[TrialPair, ...]
    gold: TrialPair
    expected_gold_answer: int = 0


@dataclass(frozen=True)
class Study:
    """A complete study definition: configuration, conditions, trials, golds."""

    study_id: str
    config: StudyConfig
    conditions: tuple[Condition, ...]
    trials: tuple[TrialPair, ...]
    gold_pool: tuple[TrialPair, ...]
    factors: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    training: Optional[TrainingBlock] = None

    def __post_init__(self) -> None:
        condition_ids = [c.id for c in self.conditions]
        if len(set(condition_ids)) != len(condition_ids):
            raise InputError("conditions: ids must be unique within a study")
        all_trials = list(self.trials) + list(self.gold_pool)
        if self.training is not None:
            all_trials += list(self.training.anchors) + [self.training.gold]
        trial_ids = [t.trial_id for t in all_trials]
        if len(set(trial_ids)) != len(trial_ids):
            raise InputError("trials: trial_ids must be unique across trials, gold pool and training")
        known_conditions = set(condition_ids)
        for trial in self.trials:
            if trial.condition_id not in known_conditions:
                raise InputError(f"trials: trial {trial.trial_id!r} references unknown condition "
                                 f"{trial.condition_id!r}")
        for condition in self.conditions:
            for name, level in condition.factor_tags.items():
                if name not in self.factors:
                    raise InputError(f"conditions: condition {condition.id!r} tags undeclared factor {name!r}")
                if level not in self.factors[name]:
                    raise InputError(f"conditions: condition {condition.id!r} uses level {level!r} "
                                     f"outside factor {name!r} levels")

    @property
    def trial_ids(self) -> set[str]:
        ids = {t.trial_id for t in self.trials} | {g.trial_id for g in self.gold_pool}
        if self.training is not None:
            ids |= {a.trial_id for a in self.training.anchors} | {self.training.gold.trial_id}
        return ids

    @property
    def gold_expected(self) -> dict[str, int]:
        """Expected answer per gold trial (identical clips -> "About the Same" = 0)."""
        return {g.trial_id: 0 for g in self.gold_pool}

    def condition_of(self, trial_id: str) -> str:
        for trial in self.trials:
            if trial.trial_id == trial_id:
                return trial.condition_id
        for gold in self.gold_pool:
            if gold.trial_id == trial_id:
                return GOLD_CONDITION
        raise InputError(f"unknown trial {trial_id!r}")


def _trial_from_dict(entry: Mapping[str, Any], *, gold: bool, where: str) -> TrialPair:
    try:
        reference = entry["reference_uri"]
        processed = entry.get("processed_uri", reference) if gold else entry["processed_uri"]
        return TrialPair(
            trial_id=entry["trial_id"],
            condition_id=entry.get("condition_id", GOLD_CONDITION if gold else ""),
            reference_uri=reference,
            processed_uri=processed,
            is_gold=gold,
        )
    except KeyError as exc:
        raise InputError(f"{where}: missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from None


def study_from_dict(data: Mapping[str, Any]) -> Study:
    """Build a Study from parsed JSON, raising InputError naming bad fields."""
    try:
        scale_kind = ScaleKind(data.get("scale", "CCR"))
    except ValueError:
        raise InputError(f"scale: must be CCR or ACR, got {data.get('scale')!r}") from None
    scale = RatingScale.ccr() if scale_kind is ScaleKind.CCR else RatingScale.acr()

    raw_config = dict(data.get("config", {}))
    unknown = set(raw_config) - {
        "section_size", "golds_per_section", "training_interval_minutes", "gold_tolerance",
        "hearing_pass_threshold", "environment_pass_threshold", "target_votes_per_trial", "seed",
    }
    if unknown:
        raise InputError(f"config: unknown fields {sorted(unknown)}")
    config = StudyConfig(scale=scale, **raw_config)

    factors = {name: tuple(levels) for name, levels in data.get("factors", {}).items()}
    conditions = tuple(
        Condition(
            id=entry["id"],
            description=entry.get("description", ""),
            factor_tags=dict(entry.get("factor_tags", {})),
        )
        for entry in data.get("conditions", [])
    )
    trials = tuple(
        _trial_from_dict(entry, gold=False, where=f"trials[{i}]")
        for i, entry in enumerate(data.get("trials", []))
    )
    gold_pool = tuple(
        _trial_from_dict(entry, gold=True, where=f"gold_pool[{i}]")
        for i, entry in enumerate(data.get("gold_pool", []))
    )

    training = None
    if "training" in data and data["training"] is not None:
        block = data["training"]
        training = TrainingBlock(
            anchors=tuple(
                _trial_from_dict(entry, gold=False, where=f"training.anchors[{i}]")
                for i, entry in enumerate(block.get("anchors", []))
            ),
            gold=_trial_from_dict(block["gold"], gold=True, where="training.gold"),
            expected_gold_answer=int(block.get("expected_gold_answer", 0)),
        )

    if "study_id" not in data:
        raise InputError("study_id: required")
    try:
        return Study(
            study_id=data["study_id"],
            config=config,
            conditions=conditions,
            trials=trials,
            gold_pool=gold_pool,
            factors=factors,
            training=training,
        )
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(str(exc)) from None


def study_to_dict(study: Study) -> dict[str, Any]:
    """Inverse of study_from_dict (lossless for studies built from files)."""

    def trial_dict(trial: TrialPair) -> dict[str, Any]:
        if trial.is_gold:
            return {"trial_id": trial.trial_id, "reference_uri": trial.reference_uri}
        return {
            "trial_id": trial.trial_id,
            "condition_id": trial.condition_id,
            "reference_uri": trial.reference_uri,
            "processed_uri": trial.processed_uri,
        }

    config = study.config
    data: dict[str, Any] = {
        "study_id": study.study_id,
        "scale": config.scale.kind.value,
        "config": {
            "section_size": config.section_size,
            "golds_per_section": config.golds_per_section,
            "training_interval_minutes": config.training_interval_minutes,
            "gold_tolerance": config.gold_tolerance,
            "hearing_pass_threshold": config.hearing_pass_threshold,
            "environment_pass_threshold": config.environment_pass_threshold,
            "target_votes_per_trial": config.target_votes_per_trial,
            "seed": config.seed,
        },
        "factors": {name: list(levels) for name, levels in study.factors.items()},
        "conditions": [
            {"id": c.id, "description": c.description, "factor_tags": dict(c.factor_tags)}
            for c in study.conditions
        ],
        "trials": [trial_dict(t) for t in study.trials],
        "gold_pool": [trial_dict(g) for g in study.gold_pool],
    }
    if study.training is not None:
        data["training"] = {
            "anchors": [trial_dict(a) for a in study.training.anchors],
            "gold": trial_dict(study.training.gold),
            "expected_gold_answer": study.training.expected_gold_answer,
        }
    return data


def load_study(path: str | Path) -> Study:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from None
    except OSError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    return study_from_dict(data)


def save_study(study: Study, path: str | Path) -> None:
    Path(path).write_text(json.dumps(study_to_dict(study), indent=2) + "\n")
