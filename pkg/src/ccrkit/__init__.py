"""ccrkit: build, screen, score and analyze crowdsourced CCR/ACR listening tests."""

from .model import (
    Condition,
    ConditionScore,
    ConfigurationError,
    InputError,
    PresentationOrder,
    RatingScale,
    ScaleKind,
    StudyConfig,
    Submission,
    TrialPair,
    Violation,
    VoteRecord,
    validate_study_config,
    validate_submission,
    validate_training_exposure,
)
from .study import Study, TrainingBlock, load_study, save_study, study_from_dict, study_to_dict

__version__ = "0.1.0"

__all__ = [
    "Condition",
    "ConditionScore",
    "ConfigurationError",
    "InputError",
    "PresentationOrder",
    "RatingScale",
    "ScaleKind",
    "Study",
    "StudyConfig",
    "Submission",
    "TrainingBlock",
    "TrialPair",
    "Violation",
    "VoteRecord",
    "load_study",
    "save_study",
    "study_from_dict",
    "study_to_dict",
    "validate_study_config",
    "validate_submission",
    "validate_training_exposure",
    "__version__",
]
