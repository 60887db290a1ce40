"""Flat-file schemas: vote tables, score tables, screening outcomes, submissions.

CSV columns are stable, documented here and in the README; every writer is
losslessly readable by the matching reader so pipeline stages can be replayed
and diffed. Submissions travel as JSON-lines, one per line.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .model import ConditionScore, InputError, PresentationOrder, Submission, VoteRecord

VOTE_COLUMNS = ["worker_id", "assignment_id", "trial_id", "condition_id", "raw_rating", "order"]
SCORE_COLUMNS = ["condition_id", "n", "mean", "sd", "ci95"]
SCREENED_COLUMNS = ["worker_id", "assignment_id", "accepted", "reasons"]


@dataclass(frozen=True)
class VoteRow:
    """One vote as it travels between pipeline stages (still order-uncorrected)."""

    worker_id: str
    assignment_id: str
    trial_id: str
    condition_id: str
    raw_rating: int
    order: Optional[PresentationOrder] = None


def _require_columns(reader: csv.DictReader, required: list[str], path: Path) -> None:
    missing = [c for c in required if c not in (reader.fieldnames or [])]
    if missing:
        raise InputError(f"{path}: missing columns {missing}")


def write_votes(rows: Iterable[VoteRow], path: str | Path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(VOTE_COLUMNS)
        for row in rows:
            writer.writerow([
                row.worker_id, row.assignment_id, row.trial_id, row.condition_id,
                row.raw_rating, row.order.value if row.order else "",
            ])


def read_votes(path: str | Path) -> list[VoteRow]:
    path = Path(path)
    rows = []
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        _require_columns(reader, VOTE_COLUMNS, path)
        for line_no, record in enumerate(reader, start=2):
            try:
                rating = int(record["raw_rating"])
            except ValueError:
                raise InputError(f"{path}:{line_no}: raw_rating {record['raw_rating']!r} is not an integer") from None
            order = PresentationOrder(record["order"]) if record["order"] else None
            rows.append(VoteRow(
                worker_id=record["worker_id"],
                assignment_id=record["assignment_id"],
                trial_id=record["trial_id"],
                condition_id=record["condition_id"],
                raw_rating=rating,
                order=order,
            ))
    return rows


def write_scores(scores: Iterable[ConditionScore], path: str | Path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SCORE_COLUMNS)
        for score in scores:
            writer.writerow([
                score.condition_id, score.n,
                f"{score.mean:.6f}", f"{score.sd:.6f}", f"{score.ci95:.6f}",
            ])


def read_scores(path: str | Path) -> list[ConditionScore]:
    path = Path(path)
    scores = []
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        _require_columns(reader, SCORE_COLUMNS, path)
        for record in reader:
            scores.append(ConditionScore(
                condition_id=record["condition_id"],
                n=int(record["n"]),
                mean=float(record["mean"]),
                sd=float(record["sd"]),
                ci95=float(record["ci95"]),
            ))
    return scores


def score_map(scores: Iterable[ConditionScore]) -> dict[str, float]:
    return {s.condition_id: s.mean for s in scores}


def vote_record_to_dict(vote: VoteRecord) -> dict:
    data: dict = {"trial_id": vote.trial_id, "raw_rating": vote.raw_rating,
                  "listen_complete": vote.listen_complete}
    if vote.presentation_order is not None:
        data["presentation_order"] = vote.presentation_order.value
    if vote.timestamp is not None:
        data["timestamp"] = vote.timestamp
    return data


def vote_record_from_dict(data: Mapping, where: str) -> VoteRecord:
    try:
        order = data.get("presentation_order")
        return VoteRecord(
            trial_id=data["trial_id"],
            raw_rating=int(data["raw_rating"]),
            presentation_order=PresentationOrder(order) if order else None,
            listen_complete=bool(data.get("listen_complete", True)),
            timestamp=data.get("timestamp"),
        )
    except KeyError as exc:
        raise InputError(f"{where}: vote missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from None


def submission_to_dict(sub: Submission) -> dict:
    data: dict = {
        "worker_id": sub.worker_id,
        "assignment_id": sub.assignment_id,
        "session_timestamp": sub.session_timestamp,
        "device_check_answers": dict(sub.device_check_answers),
        "environment_test_answers": dict(sub.environment_test_answers),
        "gold_answers": [{"trial_id": t, "rating": r} for t, r in sub.gold_answers],
        "votes": [vote_record_to_dict(v) for v in sub.votes],
    }
    if sub.hearing_test_answers is not None:
        data["hearing_test_answers"] = dict(sub.hearing_test_answers)
    if sub.training_answers is not None:
        data["training_answers"] = dict(sub.training_answers)
    if sub.last_training_timestamp is not None:
        data["last_training_timestamp"] = sub.last_training_timestamp
    return data


def submission_from_dict(data: Mapping, where: str = "submission") -> Submission:
    try:
        golds = tuple(
            (entry["trial_id"], int(entry["rating"])) for entry in data.get("gold_answers", [])
        )
        votes = tuple(
            vote_record_from_dict(entry, where) for entry in data.get("votes", [])
        )
        return Submission(
            worker_id=data["worker_id"],
            assignment_id=data["assignment_id"],
            session_timestamp=data["session_timestamp"],
            device_check_answers=dict(data.get("device_check_answers", {})),
            environment_test_answers=dict(data.get("environment_test_answers", {})),
            hearing_test_answers=(dict(data["hearing_test_answers"])
                                  if data.get("hearing_test_answers") is not None else None),
            training_answers=(dict(data["training_answers"])
                              if data.get("training_answers") is not None else None),
            last_training_timestamp=data.get("last_training_timestamp"),
            gold_answers=golds,
            votes=votes,
        )
    except KeyError as exc:
        raise InputError(f"{where}: missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{where}: {exc}") from None


def read_submissions(path: str | Path) -> list[Submission]:
    """Parse a JSON-lines file with one Submission per line."""
    path = Path(path)
    submissions = []
    with open(path) as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{line_no}: not valid JSON ({exc})") from None
            submissions.append(submission_from_dict(data, where=f"{path}:{line_no}"))
    return submissions


def write_submissions(submissions: Iterable[Submission], path: str | Path) -> None:
    with open(path, "w") as handle:
        for sub in submissions:
            handle.write(json.dumps(submission_to_dict(sub), sort_keys=True) + "\n")


def read_true_scores(path: str | Path) -> dict[str, float]:
    """Simulator input: condition_id, true_score."""
    path = Path(path)
    scores = {}
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        _require_columns(reader, ["condition_id", "true_score"], path)
        for record in reader:
            scores[record["condition_id"]] = float(record["true_score"])
    return scores


def read_dimension_scores(path: str | Path) -> dict[str, dict[str, float]]:
    """Per-condition quality-dimension scores: condition_id plus one column per dimension."""
    path = Path(path)
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        _require_columns(reader, ["condition_id"], path)
        dimensions = [c for c in (reader.fieldnames or []) if c != "condition_id"]
        if not dimensions:
            raise InputError(f"{path}: no dimension columns besides condition_id")
        scores: dict[str, dict[str, float]] = {d: {} for d in dimensions}
        for record in reader:
            for dimension in dimensions:
                scores[dimension][record["condition_id"]] = float(record[dimension])
    return scores
