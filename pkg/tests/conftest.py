import json
import random

import pytest


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        status = "PASS" if report.passed else "FAIL"
        print(f"\nACCEPTANCE {status}: {name}")
    elif report.when == "setup" and report.skipped:
        print(f"\nACCEPTANCE SKIP: {name}")

from ccrkit.builder import RatingSection
from ccrkit.model import Condition, PresentationOrder, RatingScale, StudyConfig, Submission, TrialPair, VoteRecord
from ccrkit.study import GOLD_CONDITION, Study, TrainingBlock, study_to_dict

CODECS = ("G726", "G729")
NOISES = ("clean", "street", "babble")

# target CMOS per condition: codec/noise combinations get progressively worse
CONDITION_QUALITY = {
    f"{codec}_{noise}": -0.4 - 0.35 * noise_index - 0.8 * codec_index
    for codec_index, codec in enumerate(CODECS)
    for noise_index, noise in enumerate(NOISES)
}


def build_demo_study(trials_per_condition: int = 4, votes_per_trial: int = 3) -> Study:
    conditions = tuple(
        Condition(
            id=f"{codec}_{noise}",
            description=f"{codec} with {noise} noise",
            factor_tags={"codec": codec, "noise": noise},
        )
        for codec in CODECS
        for noise in NOISES
    )
    trials = tuple(
        TrialPair(
            trial_id=f"{condition.id}_s{sample}",
            condition_id=condition.id,
            reference_uri=f"https://clips.example/ref/{condition.id}_{sample}.wav",
            processed_uri=f"https://clips.example/proc/{condition.id}_{sample}.wav",
        )
        for condition in conditions
        for sample in range(trials_per_condition)
    )
    gold_pool = tuple(
        TrialPair(f"gold{i}", GOLD_CONDITION, f"https://clips.example/gold/{i}.wav",
                  f"https://clips.example/gold/{i}.wav", is_gold=True)
        for i in range(3)
    )
    training = TrainingBlock(
        anchors=(
            TrialPair("anchor_good", "G726_clean", "https://clips.example/anchor/ref.wav",
                      "https://clips.example/anchor/good.wav"),
            TrialPair("anchor_bad", "G729_babble", "https://clips.example/anchor/ref2.wav",
                      "https://clips.example/anchor/bad.wav"),
        ),
        gold=TrialPair("anchor_gold", GOLD_CONDITION, "https://clips.example/anchor/gold.wav",
                       "https://clips.example/anchor/gold.wav", is_gold=True),
    )
    config = StudyConfig(
        scale=RatingScale.ccr(),
        section_size=12,
        golds_per_section=1,
        target_votes_per_trial=votes_per_trial,
        seed=2021,
    )
    return Study(
        study_id="demo-ccr",
        config=config,
        conditions=conditions,
        trials=trials,
        gold_pool=gold_pool,
        factors={"codec": list(CODECS), "noise": list(NOISES)},
        training=training,
    )


DEVICE_ANSWERS = {"stereo_word": "seven"}
ENV_ANSWERS = {f"jnd{i}": "second" for i in range(5)}
HEARING_ANSWERS = {f"triplet{i}": str(100 + i) for i in range(6)}

KEYS_CSV_ROWS = (
    ["device", "stereo_word", "seven", "1.0"],
    *[["environment", f"jnd{i}", "second", "0.8"] for i in range(5)],
    *[["hearing", f"triplet{i}", str(100 + i), "0.8333333"] for i in range(6)],
)


def write_keys_csv(path) -> None:
    import csv

    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["test_id", "item_id", "expected", "threshold"])
        writer.writerows(KEYS_CSV_ROWS)


def synth_submission(
    study: Study,
    section: RatingSection,
    worker_id: str,
    rng: random.Random,
    *,
    fail_gold: bool = False,
    fail_environment: bool = False,
    vote_noise: float = 0.35,
) -> Submission:
    """One worker rating one section: noisy truth-based votes plus setup answers."""
    votes = []
    gold_answers = []
    for item in section.items:
        if item.is_gold:
            gold_answers.append((item.trial_id, -3 if fail_gold else 0))
            continue
        quality = CONDITION_QUALITY[item.condition_id]
        perceived = quality + rng.gauss(0.0, vote_noise)
        corrected = max(-3, min(3, round(perceived)))
        raw = corrected if item.hidden_order is PresentationOrder.REFERENCE_FIRST else -corrected
        votes.append(VoteRecord(
            trial_id=item.trial_id,
            raw_rating=raw,
            presentation_order=item.hidden_order,
            listen_complete=True,
            timestamp="2021-03-01T12:00:00Z",
        ))
    environment = dict(ENV_ANSWERS)
    if fail_environment:
        environment = {k: "first" for k in environment}
    return Submission(
        worker_id=worker_id,
        assignment_id=f"{worker_id}-{section.section_id}",
        session_timestamp="2021-03-01T12:00:00Z",
        device_check_answers=dict(DEVICE_ANSWERS),
        environment_test_answers=environment,
        hearing_test_answers=dict(HEARING_ANSWERS),
        training_answers={"anchor_gold": "0"},
        last_training_timestamp=None,
        gold_answers=tuple(gold_answers),
        votes=tuple(votes),
    )


@pytest.fixture
def demo_study() -> Study:
    return build_demo_study()


@pytest.fixture
def demo_study_file(tmp_path, demo_study):
    path = tmp_path / "study.json"
    path.write_text(json.dumps(study_to_dict(demo_study), indent=2))
    return path


@pytest.fixture
def demo_keys_file(tmp_path):
    path = tmp_path / "keys.csv"
    write_keys_csv(path)
    return path
