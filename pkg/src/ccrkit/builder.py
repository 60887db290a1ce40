"""Compile a study definition into rating sections and task manifests.

The builder is a pure function of (study definition, seed): per replication
pass every trial appears exactly once, passes are chunked into sections, one
or more gold trials are spliced in at seeded-random positions, and the
reference-first/processed-first order is balanced per trial. Worker-visible
manifest rows never carry order or gold metadata.
"""

from __future__ import annotations

import csv
import random
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .model import ConfigurationError, InputError, PresentationOrder, StudyConfig, TrialPair
from .study import GOLD_CONDITION, Study
from .tables import _require_columns

WORKER_COLUMNS = ["section_id", "item_index", "clip_first_url", "clip_second_url"]
KEY_COLUMNS = ["section_id", "item_index", "trial_id", "condition_id", "order",
               "is_gold", "expected_gold_answer"]
TRAINING_COLUMNS = ["item_index", "clip_first_url", "clip_second_url", "is_gold", "expected_answer"]


@dataclass(frozen=True)
class SectionItem:
    trial_id: str
    condition_id: str
    first_uri: str
    second_uri: str
    hidden_order: PresentationOrder
    is_gold: bool
    expected_gold_answer: Optional[int] = None


@dataclass(frozen=True)
class RatingSection:
    section_id: str
    items: tuple[SectionItem, ...]


@dataclass(frozen=True)
class TaskManifest:
    """Worker-visible rows plus the separate answer-key table.

    The join key is (section_id, item_index); only the key side knows order,
    gold flags and expected answers.
    """

    worker_rows: tuple[tuple[str, int, str, str], ...]
    key_rows: tuple[tuple[str, int, str, str, str, bool, Optional[int]], ...]


def assign_presentation_order(
    trial_assignments: Sequence[tuple[str, int]], seed: int
) -> dict[tuple[str, int], PresentationOrder]:
    """Balanced reference-first/processed-first assignment per trial.

    For every trial the two order counts differ by at most 1 across its
    replications; the whole map is deterministic for a fixed seed.
    """
    by_trial: dict[str, list[int]] = defaultdict(list)
    for trial_id, replication in trial_assignments:
        by_trial[trial_id].append(replication)
    rng = random.Random(f"{seed}:orders")
    assignment: dict[tuple[str, int], PresentationOrder] = {}
    for trial_id in sorted(by_trial):
        replications = sorted(by_trial[trial_id])
        half = len(replications) // 2
        orders = [PresentationOrder.REFERENCE_FIRST] * half + [PresentationOrder.PROCESSED_FIRST] * half
        if len(replications) % 2:
            orders.append(rng.choice(list(PresentationOrder)))
        rng.shuffle(orders)
        for replication, order in zip(replications, orders):
            assignment[(trial_id, replication)] = order
    return assignment


def _oriented_uris(trial: TrialPair, order: PresentationOrder) -> tuple[str, str]:
    if order is PresentationOrder.REFERENCE_FIRST:
        return trial.reference_uri, trial.processed_uri
    return trial.processed_uri, trial.reference_uri


def assemble_sections(
    trials: Sequence[TrialPair],
    gold_pool: Sequence[TrialPair],
    config: StudyConfig,
    seed: int,
) -> list[RatingSection]:
    """Chunk `target_votes_per_trial` shuffled passes over the trials into sections.

    Every trial appears exactly once per pass, so no section repeats a trial
    and each trial lands in exactly `target_votes_per_trial` sections. When
    the trial count does not divide the section size, the trailing section of
    a pass is short; all others carry exactly `section_size` non-gold items.
    Each section receives `golds_per_section` gold trials (pool round-robin)
    at seeded uniform-random positions.
    """
    if not gold_pool:
        raise ConfigurationError("gold_pool is empty: every section needs a gold trial")
    if not trials:
        raise ConfigurationError("no trials to assemble")
    for gold in gold_pool:
        if not gold.is_gold:
            raise ConfigurationError(f"trial {gold.trial_id} in gold_pool is not a gold trial")

    passes = config.target_votes_per_trial
    plan: list[list[tuple[TrialPair, int]]] = []
    for pass_index in range(passes):
        shuffled = list(trials)
        random.Random(f"{seed}:pass:{pass_index}").shuffle(shuffled)
        for start in range(0, len(shuffled), config.section_size):
            chunk = shuffled[start:start + config.section_size]
            plan.append([(trial, pass_index) for trial in chunk])

    orders = assign_presentation_order(
        [(trial.trial_id, pass_index) for chunk in plan for trial, pass_index in chunk], seed
    )

    sections = []
    gold_cursor = 0
    for section_index, chunk in enumerate(plan):
        section_rng = random.Random(f"{seed}:gold:{section_index}")
        items = [
            SectionItem(
                trial_id=trial.trial_id,
                condition_id=trial.condition_id,
                first_uri=_oriented_uris(trial, orders[(trial.trial_id, pass_index)])[0],
                second_uri=_oriented_uris(trial, orders[(trial.trial_id, pass_index)])[1],
                hidden_order=orders[(trial.trial_id, pass_index)],
                is_gold=False,
            )
            for trial, pass_index in chunk
        ]
        for _ in range(config.golds_per_section):
            gold = gold_pool[gold_cursor % len(gold_pool)]
            gold_cursor += 1
            order = section_rng.choice(list(PresentationOrder))
            position = section_rng.randint(0, len(items))
            items.insert(position, SectionItem(
                trial_id=gold.trial_id,
                condition_id=GOLD_CONDITION,
                first_uri=gold.reference_uri,
                second_uri=gold.reference_uri,
                hidden_order=order,
                is_gold=True,
                expected_gold_answer=0,
            ))
        sections.append(RatingSection(section_id=f"sec{section_index:04d}", items=tuple(items)))
    return sections


def _check_uri(uri: str) -> str:
    # commas are quoted away by the csv writer; embedded line breaks are not a URI
    if "\n" in uri or "\r" in uri:
        raise ValueError(f"URI {uri!r} contains a line break and cannot be serialized")
    return uri


def emit_task_manifest(sections: Iterable[RatingSection]) -> TaskManifest:
    """Split sections into blinded worker rows and the answer-key table."""
    worker_rows = []
    key_rows = []
    for section in sections:
        for index, item in enumerate(section.items):
            worker_rows.append((
                section.section_id, index, _check_uri(item.first_uri), _check_uri(item.second_uri),
            ))
            key_rows.append((
                section.section_id, index, item.trial_id, item.condition_id,
                item.hidden_order.value, item.is_gold, item.expected_gold_answer,
            ))
    return TaskManifest(worker_rows=tuple(worker_rows), key_rows=tuple(key_rows))


def sections_from_manifest(manifest: TaskManifest) -> list[RatingSection]:
    """Rebuild the exact section plan by joining worker and key rows."""
    uris = {(sid, idx): (first, second) for sid, idx, first, second in manifest.worker_rows}
    by_section: dict[str, list[tuple[int, SectionItem]]] = defaultdict(list)
    for sid, idx, trial_id, condition_id, order, is_gold, expected in manifest.key_rows:
        if (sid, idx) not in uris:
            raise InputError(f"answer key row ({sid}, {idx}) has no worker row")
        first, second = uris[(sid, idx)]
        by_section[sid].append((idx, SectionItem(
            trial_id=trial_id,
            condition_id=condition_id,
            first_uri=first,
            second_uri=second,
            hidden_order=PresentationOrder(order),
            is_gold=is_gold,
            expected_gold_answer=expected,
        )))
    return [
        RatingSection(section_id=sid, items=tuple(item for _, item in sorted(rows)))
        for sid, rows in sorted(by_section.items())
    ]


def write_manifest(manifest: TaskManifest, worker_path: str | Path, key_path: str | Path) -> None:
    with open(worker_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(WORKER_COLUMNS)
        writer.writerows(manifest.worker_rows)
    with open(key_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(KEY_COLUMNS)
        for sid, idx, trial_id, condition_id, order, is_gold, expected in manifest.key_rows:
            writer.writerow([
                sid, idx, trial_id, condition_id, order,
                "true" if is_gold else "false",
                "" if expected is None else expected,
            ])


def read_manifest(worker_path: str | Path, key_path: str | Path) -> TaskManifest:
    worker_path, key_path = Path(worker_path), Path(key_path)
    worker_rows = []
    with open(worker_path, newline="") as handle:
        reader = csv.DictReader(handle)
        _require_columns(reader, WORKER_COLUMNS, worker_path)
        for record in reader:
            worker_rows.append((
                record["section_id"], int(record["item_index"]),
                record["clip_first_url"], record["clip_second_url"],
            ))
    key_rows = []
    with open(key_path, newline="") as handle:
        reader = csv.DictReader(handle)
        _require_columns(reader, KEY_COLUMNS, key_path)
        for record in reader:
            expected = record["expected_gold_answer"]
            key_rows.append((
                record["section_id"], int(record["item_index"]), record["trial_id"],
                record["condition_id"], record["order"], record["is_gold"] == "true",
                int(expected) if expected != "" else None,
            ))
    return TaskManifest(worker_rows=tuple(worker_rows), key_rows=tuple(key_rows))


def write_training_manifest(study: Study, path: str | Path) -> None:
    """Dedicated manifest block for the periodic training section.

    Training rows do include the gold flag and expected answer: the rating
    page needs them to show corrective feedback.
    """
    if study.training is None:
        raise ConfigurationError("study declares no training block")
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRAINING_COLUMNS)
        index = 0
        for anchor in study.training.anchors:
            writer.writerow([index, _check_uri(anchor.reference_uri),
                             _check_uri(anchor.processed_uri), "false", ""])
            index += 1
        gold = study.training.gold
        writer.writerow([index, _check_uri(gold.reference_uri), _check_uri(gold.reference_uri),
                         "true", study.training.expected_gold_answer])


def build_study(study: Study, seed: Optional[int], out_dir: str | Path) -> dict[str, Path]:
    """Run the full builder: sections, worker/key manifests, training block.

    Returns the emitted paths keyed by artifact name. `seed` overrides the
    study-file seed when given.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    effective_seed = study.config.seed if seed is None else seed
    sections = assemble_sections(study.trials, study.gold_pool, study.config, effective_seed)
    manifest = emit_task_manifest(sections)
    worker_path = out / "worker.csv"
    key_path = out / "answer_key.csv"
    write_manifest(manifest, worker_path, key_path)
    paths = {"worker": worker_path, "answer_key": key_path}
    if study.training is not None:
        training_path = out / "training.csv"
        write_training_manifest(study, training_path)
        paths["training"] = training_path
    return paths
