"""Pipeline report: one JSON + text summary plus plot-ready CSV tables.

Emits the data behind the usual result figures: a score-vs-score scatter per
condition and (normalized mean, SOS) points, together with the headline
metrics (acceptance rate, per-run CI, correlations, ICC, SOS parameter).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from .model import ConditionScore, InputError
from .scoring import fit_sos, normalize_mean_score
from .screening import ScreeningSummary
from .stats import icc_a1, pearson, spearman


@dataclass(frozen=True)
class PipelineReport:
    study_id: str
    outputs: Mapping[str, Path]
    metrics: Mapping[str, Any] = field(default_factory=dict)


def _score_index(scores: Sequence[ConditionScore], name: str) -> dict[str, ConditionScore]:
    if not scores:
        raise InputError(f"{name}: empty score table")
    return {s.condition_id: s for s in scores}


def run_report(
    study_id: str,
    scores: Sequence[ConditionScore],
    out_dir: str | Path,
    bounds: tuple[float, float],
    reference_scores: Optional[Sequence[ConditionScore]] = None,
    reference_bounds: Optional[tuple[float, float]] = None,
    run_tables: Optional[Sequence[Sequence[ConditionScore]]] = None,
    screening: Optional[ScreeningSummary] = None,
    config_echo: Optional[Mapping[str, Any]] = None,
) -> PipelineReport:
    """Assemble the report files; every referenced path exists on return.

    `bounds` are the scale limits used for SOS normalization of `scores`
    (e.g. (-3, 0) for a degradation-oriented CCR study); reference tables
    normalize over their own bounds.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    primary = _score_index(scores, "scores")
    low, high = bounds

    reference = None
    if reference_scores is not None:
        reference = _score_index(reference_scores, "reference_scores")
        if set(reference) != set(primary):
            missing = sorted(set(primary) ^ set(reference))
            raise InputError(f"reference_scores: condition_id sets differ from scores ({missing})")

    outputs: dict[str, Path] = {}
    metrics: dict[str, Any] = {"conditions": len(primary)}

    # SOS points for every table, primary first
    def normalized(score: ConditionScore, table: str, lo: float, hi: float) -> float:
        try:
            return normalize_mean_score(score.mean, lo, hi)
        except ValueError as exc:
            raise InputError(f"{table}: condition {score.condition_id}: {exc}") from None

    sos_path = out / "sos.csv"
    with open(sos_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["table", "condition_id", "normalized_mean", "sd"])
        for score in scores:
            writer.writerow([
                "primary", score.condition_id,
                f"{normalized(score, 'scores', low, high):.6f}", f"{score.sd:.6f}",
            ])
        if reference_scores is not None:
            rlow, rhigh = reference_bounds if reference_bounds is not None else bounds
            for score in reference_scores:
                writer.writerow([
                    "reference", score.condition_id,
                    f"{normalized(score, 'reference_scores', rlow, rhigh):.6f}", f"{score.sd:.6f}",
                ])
    outputs["sos"] = sos_path
    try:
        fit = fit_sos([(s.mean, s.sd) for s in scores], low, high)
        metrics["sos"] = {"a": fit.a, "rmse": fit.rmse, "low": low, "high": high}
    except ValueError:
        metrics["sos"] = None

    if reference is not None:
        conditions = sorted(primary)
        scatter_path = out / "scatter.csv"
        with open(scatter_path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["condition_id", "x", "y"])
            for condition in conditions:
                writer.writerow([
                    condition, f"{primary[condition].mean:.6f}", f"{reference[condition].mean:.6f}",
                ])
        outputs["scatter"] = scatter_path
        xs = [primary[c].mean for c in conditions]
        ys = [reference[c].mean for c in conditions]
        metrics["correlation"] = {
            "pcc": pearson(xs, ys).r,
            "srcc": spearman(xs, ys).r,
            "n": len(conditions),
        }

    if run_tables:
        indexes = [_score_index(table, f"runs[{i}]") for i, table in enumerate(run_tables)]
        conditions = sorted(indexes[0])
        for i, index in enumerate(indexes):
            if set(index) != set(conditions):
                raise InputError(f"runs[{i}]: condition_id set differs from runs[0]")
        matrix = [[index[c].mean for index in indexes] for c in conditions]
        metrics["icc"] = icc_a1(matrix).icc if len(indexes) >= 2 else None
        metrics["per_run_mean_ci"] = [
            sum(index[c].ci95 for c in conditions) / len(conditions) for index in indexes
        ]

    if screening is not None:
        metrics["screening"] = {
            "total": screening.total,
            "accepted": screening.accepted,
            "acceptance_rate": screening.acceptance_rate,
            "reason_counts": dict(screening.reason_counts),
            "votes_per_condition_mean": screening.votes_per_condition_mean,
            "votes_per_condition_sd": screening.votes_per_condition_sd,
        }

    report_json = out / "report.json"
    payload = {
        "study_id": study_id,
        "config": dict(config_echo or {}),
        "outputs": {name: str(path) for name, path in outputs.items()},
        "metrics": metrics,
    }
    report_json.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    outputs["report_json"] = report_json

    report_txt = out / "report.txt"
    lines = [f"study: {study_id}", f"conditions: {metrics['conditions']}"]
    if "correlation" in metrics:
        corr = metrics["correlation"]
        lines.append(f"scores vs reference: PCC={corr['pcc']:.3f} SRCC={corr['srcc']:.3f} (n={corr['n']})")
    if metrics.get("icc") is not None:
        lines.append(f"inter-run ICC(A,1): {metrics['icc']:.3f}")
    if "per_run_mean_ci" in metrics:
        cis = ", ".join(f"{ci:.3f}" for ci in metrics["per_run_mean_ci"])
        lines.append(f"mean 95% CI per run: {cis}")
    if metrics.get("sos"):
        lines.append(f"SOS fit: a={metrics['sos']['a']:.4f} rmse={metrics['sos']['rmse']:.4f}")
    if "screening" in metrics:
        s = metrics["screening"]
        lines.append(f"screening: {s['accepted']}/{s['total']} accepted "
                     f"({s['acceptance_rate']:.2%})")
    report_txt.write_text("\n".join(lines) + "\n")
    outputs["report_txt"] = report_txt

    for name, path in outputs.items():
        if not path.exists():
            raise RuntimeError(f"report output {name} missing at {path}")
    return PipelineReport(study_id=study_id, outputs=outputs, metrics=metrics)
