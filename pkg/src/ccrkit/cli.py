"""Command-line entry point: build -> screen -> score -> stats -> simulate -> report.

Every subcommand reads and writes plain CSV/JSON files so stages can be
replayed and diffed; reruns with identical inputs and seed are byte-identical.
Diagnostics go to stderr (verbosity via the CCR_LOG env var), data only to
files or stdout, exit status 0 iff no errors.
"""

from __future__ import annotations

import csv
import functools
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

import click
import numpy as np

from . import builder, scoring, simulator, stats, tables
from .model import ConfigurationError, InputError, PresentationOrder, validate_training_exposure
from .report import run_report
from .screening import (
    ScreeningKeys,
    count_votes_per_condition,
    read_answer_keys,
    read_outcomes,
    screen_batch,
    screening_summary,
    write_outcomes,
)
from .study import GOLD_CONDITION, Study, load_study

log = logging.getLogger("ccrkit")


def _setup_logging() -> None:
    level = os.environ.get("CCR_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def handle_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (InputError, ConfigurationError, ValueError, OSError) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


@click.group()
@click.option("--seed", type=int, default=None, help="Default seed for seeded subcommands.")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Default study definition file.")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Default output directory.")
@click.pass_context
def main(ctx: click.Context, seed: Optional[int], config_path: Optional[str],
         out_dir: Optional[str]) -> None:
    """Crowdsourced CCR/ACR listening-test toolkit."""
    _setup_logging()
    ctx.obj = {"seed": seed, "config": config_path, "out": out_dir}


def _resolve(ctx: click.Context, key: str, value, required: bool = True):
    resolved = value if value is not None else (ctx.obj or {}).get(key)
    if required and resolved is None:
        raise click.UsageError(f"missing --{key} (set it on the subcommand or globally)")
    return resolved


def _load_study(ctx: click.Context, study_path: Optional[str]) -> Study:
    return load_study(_resolve(ctx, "config", study_path))


@main.command()
@click.option("--study", "study_path", type=click.Path(exists=True), default=None,
              help="Study definition JSON.")
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.pass_context
@handle_errors
def build(ctx: click.Context, study_path: Optional[str], seed: Optional[int],
          out_dir: Optional[str]) -> None:
    """Compile the study into sections and task manifests."""
    study = _load_study(ctx, study_path)
    seed = _resolve(ctx, "seed", seed, required=False)
    out = Path(_resolve(ctx, "out", out_dir))
    paths = builder.build_study(study, seed, out)
    log.info("built %s: %s", study.study_id, ", ".join(str(p) for p in paths.values()))
    click.echo(json.dumps({name: str(path) for name, path in sorted(paths.items())}))


@main.command()
@click.option("--study", "study_path", type=click.Path(exists=True), default=None)
@click.option("--keys", "keys_path", type=click.Path(exists=True), required=True,
              help="Answer-key CSV (test_id,item_id,expected,threshold).")
@click.option("--subs", "subs_path", type=click.Path(exists=True), required=True,
              help="Submissions JSONL, one per line.")
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Screening outcome CSV.")
@click.option("--votes-out", type=click.Path(), default=None,
              help="Also extract all raw votes to this CSV.")
@click.option("--summary-out", type=click.Path(), default=None,
              help="Write the screening summary JSON here.")
@click.option("--manifest-key", type=click.Path(exists=True), default=None,
              help="Answer-key CSV; resolves blinded worker-form payloads before screening.")
@click.option("--worker-csv", type=click.Path(exists=True), default=None)
@click.pass_context
@handle_errors
def screen(ctx: click.Context, study_path: Optional[str], keys_path: str, subs_path: str,
           out_path: str, votes_out: Optional[str], summary_out: Optional[str],
           manifest_key: Optional[str], worker_csv: Optional[str]) -> None:
    """Accept/reject each submission by the data-cleansing rules."""
    study = _load_study(ctx, study_path)
    keys_by_id = read_answer_keys(keys_path)
    for required in ("device", "environment"):
        if required not in keys_by_id:
            raise InputError(f"{keys_path}: missing answer key {required!r}")
    keys = ScreeningKeys(
        device=keys_by_id["device"],
        environment=keys_by_id["environment"],
        hearing=keys_by_id.get("hearing"),
        gold_expected=study.gold_expected,
    )
    submissions = _read_submission_lines(subs_path, manifest_key, worker_csv)
    outcomes = screen_batch(submissions, keys, study.config, known_trials=study.trial_ids)
    write_outcomes(outcomes, out_path)

    training_flags = sum(
        bool(validate_training_exposure(sub, study.config)) for sub in submissions
    )
    if training_flags:
        log.warning("%d submissions flagged by the training-exposure rule (advisory)", training_flags)

    condition_of = {t.trial_id: t.condition_id for t in study.trials}
    votes = count_votes_per_condition(submissions, outcomes, condition_of)
    summary = screening_summary(outcomes, votes)
    log.info("screened %d submissions: %d accepted (%.2f%%)",
             summary.total, summary.accepted, 100 * summary.acceptance_rate)
    if summary_out:
        Path(summary_out).write_text(json.dumps({
            "total": summary.total,
            "accepted": summary.accepted,
            "acceptance_rate": summary.acceptance_rate,
            "reason_counts": dict(summary.reason_counts),
            "votes_per_condition_mean": summary.votes_per_condition_mean,
            "votes_per_condition_sd": summary.votes_per_condition_sd,
        }, indent=2, sort_keys=True) + "\n")

    if votes_out:
        rows = [
            tables.VoteRow(
                worker_id=sub.worker_id,
                assignment_id=sub.assignment_id,
                trial_id=vote.trial_id,
                condition_id=condition_of.get(vote.trial_id, GOLD_CONDITION),
                raw_rating=vote.raw_rating,
                order=vote.presentation_order,
            )
            for sub in submissions
            for vote in sub.votes
        ]
        tables.write_votes(rows, votes_out)


@main.command()
@click.option("--votes", "votes_path", type=click.Path(exists=True), required=True)
@click.option("--screened", "screened_path", type=click.Path(exists=True), default=None,
              help="Keep only votes from accepted assignments.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--per-stimulus-out", type=click.Path(), default=None)
@click.option("--orient", type=click.Choice(["degradation"]), default=None,
              help="Degradation studies expect CMOS in [-3, 0]; positives are warned about.")
@handle_errors
def score(votes_path: str, screened_path: Optional[str], out_path: str,
          per_stimulus_out: Optional[str], orient: Optional[str]) -> None:
    """Order-correct votes and aggregate per-condition CMOS/MOS with 95% CI."""
    rows = tables.read_votes(votes_path)
    if screened_path:
        accepted = {o.assignment_id for o in read_outcomes(screened_path) if o.accepted}
        rows = [row for row in rows if row.assignment_id in accepted]
    if not rows:
        raise InputError(f"{votes_path}: no votes left to score")
    corrected = [
        scoring.CorrectedVote(
            trial_id=row.trial_id,
            condition_id=row.condition_id,
            value=(scoring.correct_vote(row.raw_rating, row.order)
                   if row.order is not None else row.raw_rating),
        )
        for row in rows
    ]
    scores = scoring.aggregate_all(corrected)
    tables.write_scores(scores, out_path)
    if per_stimulus_out:
        tables.write_scores(scoring.aggregate_by_trial(corrected), per_stimulus_out)
    if orient == "degradation":
        positives = [s.condition_id for s in scores if s.mean > 0]
        if positives:
            log.warning("degradation orientation: %d conditions rate above 0: %s",
                        len(positives), ", ".join(positives))
    log.info("scored %d conditions from %d votes", len(scores), len(corrected))


@main.group(name="stats")
def stats_group() -> None:
    """Correlation, reliability and significance statistics."""


def _mean_map(path: str) -> dict[str, float]:
    return tables.score_map(tables.read_scores(path))


def _common_vectors(a: dict[str, float], b: dict[str, float],
                    name_a: str, name_b: str) -> tuple[list[str], list[float], list[float]]:
    if set(a) != set(b):
        diff = sorted(set(a) ^ set(b))
        raise InputError(f"condition sets differ between {name_a} and {name_b}: {diff}")
    conditions = sorted(a)
    return conditions, [a[c] for c in conditions], [b[c] for c in conditions]


@stats_group.command()
@click.option("--a", "a_path", type=click.Path(exists=True), required=True)
@click.option("--b", "b_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.pass_context
@handle_errors
def compare(ctx: click.Context, a_path: str, b_path: str, out_dir: Optional[str]) -> None:
    """PCC/SRCC/RMSE and first-order mapping between two score tables."""
    conditions, xs, ys = _common_vectors(_mean_map(a_path), _mean_map(b_path), a_path, b_path)
    linear = stats.fit_linear_map(xs, ys)
    result = {
        "n": len(conditions),
        "pcc": stats.pearson(xs, ys).r,
        "srcc": stats.spearman(xs, ys).r,
        "rmse": stats.rmse(xs, ys),
        "linear_map": {
            "slope": linear.slope,
            "intercept": linear.intercept,
            "rmse_before": linear.rmse_before,
            "rmse_after": linear.rmse_after,
        },
    }
    out = _resolve(ctx, "out", out_dir, required=False)
    if out:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
        with open(out / "compare.csv", "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["condition_id", "mean_a", "mean_b", "mapped_a"])
            for condition, x, y in zip(conditions, xs, ys):
                writer.writerow([condition, f"{x:.6f}", f"{y:.6f}",
                                 f"{linear.slope * x + linear.intercept:.6f}"])
    click.echo(json.dumps(result, sort_keys=True))


@stats_group.command()
@click.option("--runs", "run_paths", type=click.Path(exists=True), multiple=True, required=True)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.pass_context
@handle_errors
def icc(ctx: click.Context, run_paths: tuple[str, ...], out_dir: Optional[str]) -> None:
    """ICC(A,1) over the conditions x runs matrix of means."""
    if len(run_paths) < 2:
        raise InputError("stats icc: need at least 2 --runs files")
    maps = [_mean_map(path) for path in run_paths]
    conditions = sorted(maps[0])
    for path, mean_map in zip(run_paths, maps):
        if set(mean_map) != set(conditions):
            raise InputError(f"{path}: condition set differs from {run_paths[0]}")
    matrix = [[m[c] for m in maps] for c in conditions]
    result = stats.icc_a1(matrix)
    payload = {
        "icc": result.icc,
        "n_subjects": result.n_subjects,
        "k_raters": result.k_raters,
        "ms_rows": result.ms_rows,
        "ms_cols": result.ms_cols,
        "ms_error": result.ms_error,
    }
    out = _resolve(ctx, "out", out_dir, required=False)
    if out:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "icc.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        with open(out / "icc_matrix.csv", "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["condition_id"] + [f"run{i}" for i in range(len(maps))])
            for condition, row in zip(conditions, matrix):
                writer.writerow([condition] + [f"{v:.6f}" for v in row])
    click.echo(json.dumps(payload, sort_keys=True))


@stats_group.command()
@click.option("--votes", "votes_path", type=click.Path(exists=True), required=True)
@click.option("--study", "study_path", type=click.Path(exists=True), default=None)
@click.option("--factor-a", required=True, help="Factor name for the first main effect.")
@click.option("--factor-b", required=True, help="Factor name for the second main effect.")
@click.option("--where", "filters", multiple=True, metavar="FACTOR=LEVEL",
              help="Restrict to conditions with this factor level (repeatable).")
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--pairwise", type=click.Choice(["a", "b"]), default=None,
              help="Bonferroni-corrected pairwise tests on this factor's levels.")
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.pass_context
@handle_errors
def anova(ctx: click.Context, votes_path: str, study_path: Optional[str], factor_a: str,
          factor_b: str, filters: tuple[str, ...], alpha: float, pairwise: Optional[str],
          out_dir: Optional[str]) -> None:
    """Two-way ANOVA of corrected votes grouped by two condition factors."""
    study = _load_study(ctx, study_path)
    conditions = {c.id: c for c in study.conditions}
    wanted = {}
    for item in filters:
        if "=" not in item:
            raise InputError(f"--where expects FACTOR=LEVEL, got {item!r}")
        name, level = item.split("=", 1)
        wanted[name] = level

    rows = tables.read_votes(votes_path)
    observations = []
    for row in rows:
        condition = conditions.get(row.condition_id)
        if condition is None:
            continue  # gold rows and unknown conditions carry no factors
        tags = condition.factor_tags
        if factor_a not in tags or factor_b not in tags:
            continue
        if any(tags.get(name) != level for name, level in wanted.items()):
            continue
        value = (scoring.correct_vote(row.raw_rating, row.order)
                 if row.order is not None else row.raw_rating)
        observations.append((tags[factor_a], tags[factor_b], float(value)))
    table = stats.two_way_anova(observations, factor_a=factor_a, factor_b=factor_b)

    payload: dict = {
        "factor_a": factor_a,
        "factor_b": factor_b,
        "balanced": table.balanced,
        "observations": len(observations),
        "rows": [
            {"effect": r.effect, "ss": r.ss, "df": r.df, "ms": r.ms, "f": r.f, "p": r.p}
            for r in table.rows
        ],
    }
    if pairwise:
        index = 0 if pairwise == "a" else 1
        groups: dict[str, list[float]] = {}
        for la, lb, value in observations:
            groups.setdefault(la if index == 0 else lb, []).append(value)
        matrix = stats.bonferroni_pairwise(groups, alpha=alpha)
        payload["pairwise"] = [
            {"level_a": c.level_a, "level_b": c.level_b, "t": c.t_stat,
             "p": c.p_value, "significant": c.significant}
            for c in matrix.comparisons
        ]
        payload["corrected_alpha"] = matrix.corrected_alpha
    out = _resolve(ctx, "out", out_dir, required=False)
    if out:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "anova.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        with open(out / "anova.csv", "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["effect", "ss", "df", "ms", "f", "p"])
            for r in table.rows:
                writer.writerow([
                    r.effect, f"{r.ss:.6f}", r.df, f"{r.ms:.6f}",
                    "" if r.f is None else f"{r.f:.6f}",
                    "" if r.p is None else f"{r.p:.6g}",
                ])
    click.echo(json.dumps(payload, sort_keys=True))


@stats_group.command()
@click.option("--a", "a_path", type=click.Path(exists=True), required=True,
              help="Score table ranked first (e.g. CMOS).")
@click.option("--b", "b_path", type=click.Path(exists=True), required=True,
              help="Score table ranked second (e.g. MOS).")
@click.option("--dims", "dims_path", type=click.Path(exists=True), default=None,
              help="Per-condition quality-dimension scores to correlate deltas against.")
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.pass_context
@handle_errors
def rankdelta(ctx: click.Context, a_path: str, b_path: str, dims_path: Optional[str],
              out_dir: Optional[str]) -> None:
    """Rank-order positions in both tables and their per-condition delta."""
    deltas = stats.rank_order_delta(_mean_map(a_path), _mean_map(b_path))
    payload: dict = {
        "deltas": {
            c: {"rank_a": d.rank_a, "rank_b": d.rank_b, "delta": d.delta}
            for c, d in sorted(deltas.items())
        }
    }
    if dims_path:
        delta_map = {c: d.delta for c, d in deltas.items()}
        payload["dimension_correlations"] = {}
        for dimension, score_map in sorted(tables.read_dimension_scores(dims_path).items()):
            result = stats.delta_dimension_correlation(delta_map, score_map)
            payload["dimension_correlations"][dimension] = {
                "r": result.r, "p_value": result.p_value, "n": result.n,
            }
    out = _resolve(ctx, "out", out_dir, required=False)
    if out:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "rankdelta.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        with open(out / "rankdelta.csv", "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["condition_id", "rank_a", "rank_b", "delta"])
            for condition, d in sorted(deltas.items()):
                writer.writerow([condition, d.rank_a, d.rank_b, d.delta])
    click.echo(json.dumps(payload, sort_keys=True))


@main.command()
@click.option("--true", "true_path", type=click.Path(exists=True), required=True,
              help="True condition scores CSV (condition_id,true_score).")
@click.option("--runs", type=int, default=3, show_default=True)
@click.option("--raters", type=int, default=60, show_default=True)
@click.option("--votes-per-condition", type=int, default=60, show_default=True)
@click.option("--sigma-v", type=float, default=0.7, show_default=True)
@click.option("--sigma-b", type=float, default=0.0, show_default=True)
@click.option("--offsets", default=None, help="Comma-separated per-run offsets.")
@click.option("--low", type=int, default=-3, show_default=True)
@click.option("--high", type=int, default=3, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.pass_context
@handle_errors
def simulate(ctx: click.Context, true_path: str, runs: int, raters: int,
             votes_per_condition: int, sigma_v: float, sigma_b: float,
             offsets: Optional[str], low: int, high: int, seed: Optional[int],
             out_dir: Optional[str]) -> None:
    """Generate synthetic rater panels and the inter-run reliability report."""
    true_scores = tables.read_true_scores(true_path)
    seed = _resolve(ctx, "seed", seed)
    out = Path(_resolve(ctx, "out", out_dir))
    out.mkdir(parents=True, exist_ok=True)
    offset_list = [float(v) for v in offsets.split(",")] if offsets else [0.0] * runs
    if len(offset_list) != runs:
        raise InputError(f"--offsets gives {len(offset_list)} values for {runs} runs")
    models = [
        simulator.RaterModel(bias_sd=sigma_b, vote_sd=sigma_v, offset=offset, low=low, high=high)
        for offset in offset_list
    ]
    report = simulator.run_replication_experiment(
        true_scores, models, raters, votes_per_condition, seed
    )

    # re-emit raw per-vote tables so the simulated runs replay through `score`
    run_seeds = np.random.SeedSequence(seed).spawn(runs)
    for run_index, (model, run_seed) in enumerate(zip(models, run_seeds)):
        votes = simulator.simulate_votes(true_scores, raters, votes_per_condition, model, run_seed)
        per_condition_counter: dict[str, int] = {}
        rows = []
        for vote in votes:
            j = per_condition_counter.get(vote.condition_id, 0)
            per_condition_counter[vote.condition_id] = j + 1
            order = PresentationOrder.REFERENCE_FIRST if j % 2 == 0 else PresentationOrder.PROCESSED_FIRST
            raw = vote.value if order is PresentationOrder.REFERENCE_FIRST else -vote.value
            rows.append(tables.VoteRow(
                worker_id=vote.rater_id,
                assignment_id=f"run{run_index}-{vote.rater_id}",
                trial_id=f"{vote.condition_id}_sim",
                condition_id=vote.condition_id,
                raw_rating=raw,
                order=order,
            ))
        tables.write_votes(rows, out / f"run{run_index}_votes.csv")
        tables.write_scores(report.per_run_scores[run_index], out / f"run{run_index}_scores.csv")

    payload = {
        "conditions": len(report.conditions),
        "icc_overall": report.icc_overall,
        "mean_ci_per_run": list(report.mean_ci_per_run),
        "comparisons": [
            {"run_a": c.run_a, "run_b": c.run_b, "pcc": c.pcc, "srcc": c.srcc,
             "rmse": c.rmse, "icc": c.icc}
            for c in report.comparisons
        ],
    }
    (out / "replication.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    click.echo(json.dumps(payload, sort_keys=True))


@main.command()
@click.option("--study", "study_path", type=click.Path(exists=True), default=None)
@click.option("--scores", "scores_path", type=click.Path(exists=True), required=True)
@click.option("--reference", "reference_path", type=click.Path(exists=True), default=None)
@click.option("--runs", "run_paths", type=click.Path(exists=True), multiple=True)
@click.option("--screened", "screened_path", type=click.Path(exists=True), default=None)
@click.option("--votes", "votes_path", type=click.Path(exists=True), default=None,
              help="Raw votes, used for accepted-votes-per-condition stats.")
@click.option("--orient", type=click.Choice(["degradation"]), default=None)
@click.option("--low", type=float, default=None, help="Override scale lower bound for SOS.")
@click.option("--high", type=float, default=None, help="Override scale upper bound for SOS.")
@click.option("--ref-low", type=float, default=1.0, show_default=True)
@click.option("--ref-high", type=float, default=5.0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.pass_context
@handle_errors
def report(ctx: click.Context, study_path: Optional[str], scores_path: str,
           reference_path: Optional[str], run_paths: tuple[str, ...],
           screened_path: Optional[str], votes_path: Optional[str], orient: Optional[str],
           low: Optional[float], high: Optional[float], ref_low: float, ref_high: float,
           out_dir: Optional[str]) -> None:
    """Assemble the pipeline report with plot-ready scatter and SOS tables."""
    study = _load_study(ctx, study_path)
    out = Path(_resolve(ctx, "out", out_dir))
    scale = study.config.scale
    if low is None or high is None:
        if orient == "degradation":
            low, high = float(scale.low), 0.0
        else:
            low, high = float(scale.low), float(scale.high)

    summary = None
    if screened_path:
        outcomes = read_outcomes(screened_path)
        votes_per_condition = None
        if votes_path:
            accepted = {o.assignment_id for o in outcomes if o.accepted}
            counts: dict[str, int] = {}
            for row in tables.read_votes(votes_path):
                if row.assignment_id in accepted and row.condition_id != GOLD_CONDITION:
                    counts[row.condition_id] = counts.get(row.condition_id, 0) + 1
            votes_per_condition = counts
        summary = screening_summary(outcomes, votes_per_condition)

    pipeline_report = run_report(
        study_id=study.study_id,
        scores=tables.read_scores(scores_path),
        out_dir=out,
        bounds=(low, high),
        reference_scores=tables.read_scores(reference_path) if reference_path else None,
        reference_bounds=(ref_low, ref_high),
        run_tables=[tables.read_scores(path) for path in run_paths] or None,
        screening=summary,
        config_echo={
            "study": str(_resolve(ctx, "config", study_path)),
            "scores": scores_path,
            "orient": orient,
            "bounds": [low, high],
        },
    )
    click.echo(json.dumps({name: str(path) for name, path in sorted(pipeline_report.outputs.items())}))


def _read_submission_lines(subs_path: str, manifest_key: Optional[str],
                           worker_csv: Optional[str]):
    """Parse a submissions JSONL file, resolving worker-form payloads when a key is given."""
    if manifest_key is None:
        return tables.read_submissions(subs_path)
    from .ingest import resolve_submission, sections_index

    worker = worker_csv or str(Path(manifest_key).with_name("worker.csv"))
    sections = sections_index(builder.sections_from_manifest(
        builder.read_manifest(worker, manifest_key)
    ))
    submissions = []
    with open(subs_path) as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            submissions.append(resolve_submission(data, sections, where=f"{subs_path}:{line_no}"))
    return submissions


@main.command()
@click.option("--study", "study_path", type=click.Path(exists=True), default=None)
@click.option("--subs", "subs_path", type=click.Path(exists=True), required=True)
@click.option("--manifest-key", type=click.Path(exists=True), default=None,
              help="Answer-key CSV; resolves blinded worker-form payloads before validating.")
@click.option("--worker-csv", type=click.Path(exists=True), default=None,
              help="Worker CSV matching --manifest-key (default: worker.csv next to it).")
@click.pass_context
@handle_errors
def validate(ctx: click.Context, study_path: Optional[str], subs_path: str,
             manifest_key: Optional[str], worker_csv: Optional[str]) -> None:
    """Structurally validate a submissions JSONL file against a study."""
    from .model import validate_submission

    study = _load_study(ctx, study_path)
    submissions = _read_submission_lines(subs_path, manifest_key, worker_csv)
    for index, submission in enumerate(submissions):
        try:
            validate_submission(submission, study.trial_ids, study.config.scale)
        except InputError as exc:
            raise InputError(f"{subs_path} line {index + 1}: {exc}") from None
    click.echo(json.dumps({"submissions": len(submissions), "valid": True}))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--study", "study_path", type=click.Path(exists=True), default=None,
              help="Preload this study (and build its sections) at startup.")
@click.option("--keys", "keys_path", type=click.Path(exists=True), default=None,
              help="Preload answer keys for the preloaded study.")
@click.pass_context
@handle_errors
def serve(ctx: click.Context, host: str, port: int, study_path: Optional[str],
          keys_path: Optional[str]) -> None:
    """Run the HTTP service (workers POST submissions, researchers pull stats)."""
    import uvicorn

    from .service.app import StudyState, create_app

    preloaded = {}
    study_path = study_path or (ctx.obj or {}).get("config")
    if study_path:
        study = load_study(study_path)
        state = StudyState(study=study)
        state.sections = builder.assemble_sections(
            study.trials, study.gold_pool, study.config, study.config.seed
        )
        if keys_path:
            keys_by_id = read_answer_keys(keys_path)
            state.keys = ScreeningKeys(
                device=keys_by_id["device"],
                environment=keys_by_id["environment"],
                hearing=keys_by_id.get("hearing"),
                gold_expected=study.gold_expected,
            )
        preloaded[study.study_id] = state
    uvicorn.run(create_app(preloaded), host=host, port=port)


if __name__ == "__main__":
    main()
