"""Resolve worker-form submission payloads into screenable Submissions.

The rating page is blinded: it addresses votes as (section_id, item_index)
and cannot know trial ids, presentation order or which item was gold. This
module joins such payloads against the section plan (the answer-key side of
the manifest), splitting gold answers from regular votes and attaching the
hidden order each vote needs for correction.

Payloads that already carry trial_id/presentation_order (platform exports)
pass through untouched.
"""

from __future__ import annotations

from typing import Any, Mapping

from .builder import RatingSection
from .model import InputError, Submission, VoteRecord
from .tables import submission_from_dict, vote_record_from_dict


def is_worker_form(data: Mapping[str, Any]) -> bool:
    return any("item_index" in vote for vote in data.get("votes", []))


def resolve_submission(
    data: Mapping[str, Any],
    sections_by_id: Mapping[str, RatingSection],
    where: str = "submission",
) -> Submission:
    """Build a Submission from either payload form.

    Worker-form votes are looked up by (section_id, item_index); the section
    id comes from the vote itself or the payload's top-level `section_id`.
    """
    if not is_worker_form(data):
        return submission_from_dict(data, where)

    default_section = data.get("section_id")
    votes: list[VoteRecord] = []
    gold_answers = [
        (entry["trial_id"], int(entry["rating"])) for entry in data.get("gold_answers", [])
    ]
    for position, vote in enumerate(data.get("votes", [])):
        if "item_index" not in vote:
            votes.append(vote_record_from_dict(vote, where))
            continue
        section_id = vote.get("section_id", default_section)
        if section_id is None:
            raise InputError(f"{where}: votes[{position}] uses item_index but no section_id is given")
        section = sections_by_id.get(section_id)
        if section is None:
            raise InputError(f"{where}: unknown section {section_id!r}")
        index = int(vote["item_index"])
        if not 0 <= index < len(section.items):
            raise InputError(f"{where}: item_index {index} outside section {section_id!r}")
        if "rating" not in vote:
            raise InputError(f"{where}: votes[{position}] missing field 'rating'")
        item = section.items[index]
        rating = int(vote["rating"])
        if item.is_gold:
            gold_answers.append((item.trial_id, rating))
            continue
        votes.append(VoteRecord(
            trial_id=item.trial_id,
            raw_rating=rating,
            presentation_order=item.hidden_order,
            listen_complete=bool(vote.get("listen_complete", True)),
            timestamp=vote.get("timestamp"),
        ))

    try:
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
            gold_answers=tuple(gold_answers),
            votes=tuple(votes),
        )
    except KeyError as exc:
        raise InputError(f"{where}: missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from None


def sections_index(sections) -> dict[str, RatingSection]:
    return {section.section_id: section for section in sections}
