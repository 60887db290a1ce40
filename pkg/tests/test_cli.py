import csv
import json
import random

import pytest
from click.testing import CliRunner

from ccrkit.cli import main
from ccrkit.model import ConditionScore
from ccrkit.builder import read_manifest, sections_from_manifest
from ccrkit.tables import read_scores, write_scores, write_submissions

from .conftest import CONDITION_QUALITY, synth_submission


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, args, **kwargs):
    result = runner.invoke(main, args, catch_exceptions=False, **kwargs)
    assert result.exit_code == 0, result.output
    return result


def build_and_submit(runner, tmp_path, study_file, demo_study, seed=7):
    """Run `build`, then synthesize worker submissions against the manifest."""
    build_dir = tmp_path / "build"
    invoke(runner, ["build", "--study", str(study_file), "--seed", str(seed),
                    "--out", str(build_dir)])
    sections = sections_from_manifest(
        read_manifest(build_dir / "worker.csv", build_dir / "answer_key.csv")
    )
    rng = random.Random(99)
    submissions = []
    for index, section in enumerate(sections):
        for worker in range(2):
            submissions.append(synth_submission(
                demo_study, section, f"w{index:02d}_{worker}", rng,
            ))
    # sprinkle rejects: one bad gold, one bad environment
    submissions.append(synth_submission(demo_study, sections[0], "w_badgold", rng, fail_gold=True))
    submissions.append(synth_submission(demo_study, sections[1], "w_badenv", rng, fail_environment=True))
    subs_path = tmp_path / "subs.jsonl"
    write_submissions(submissions, subs_path)
    return build_dir, subs_path, len(submissions)


class TestBuildCommand:
    def test_build_emits_manifests(self, runner, tmp_path, demo_study_file):
        out = tmp_path / "b"
        result = invoke(runner, ["build", "--study", str(demo_study_file), "--seed", "3",
                                 "--out", str(out)])
        paths = json.loads(result.output)
        assert set(paths) == {"worker", "answer_key", "training"}
        assert (out / "worker.csv").exists()

    def test_build_deterministic_across_reruns(self, runner, tmp_path, demo_study_file):
        for name in ("one", "two", "three"):
            invoke(runner, ["build", "--study", str(demo_study_file), "--seed", "11",
                            "--out", str(tmp_path / name)])
        reference = (tmp_path / "one" / "worker.csv").read_bytes()
        assert (tmp_path / "two" / "worker.csv").read_bytes() == reference
        assert (tmp_path / "three" / "worker.csv").read_bytes() == reference

    def test_global_flags_supply_defaults(self, runner, tmp_path, demo_study_file):
        out = tmp_path / "g"
        invoke(runner, ["--seed", "3", "--config", str(demo_study_file),
                        "--out", str(out), "build"])
        assert (out / "worker.csv").exists()

    def test_missing_study_is_clean_error(self, runner, tmp_path):
        result = runner.invoke(main, ["build", "--out", str(tmp_path)])
        assert result.exit_code != 0


class TestPipeline:
    def test_screen_score_report_flow(self, runner, tmp_path, demo_study_file,
                                      demo_study, demo_keys_file):
        build_dir, subs_path, total = build_and_submit(
            runner, tmp_path, demo_study_file, demo_study
        )
        screened = tmp_path / "screened.csv"
        votes = tmp_path / "votes.csv"
        summary_path = tmp_path / "summary.json"
        invoke(runner, [
            "screen", "--study", str(demo_study_file), "--keys", str(demo_keys_file),
            "--subs", str(subs_path), "--out", str(screened),
            "--votes-out", str(votes), "--summary-out", str(summary_path),
        ])
        summary = json.loads(summary_path.read_text())
        assert summary["total"] == total
        assert summary["accepted"] == total - 2
        assert summary["reason_counts"] == {"GoldFailed": 1, "EnvironmentFailed": 1}

        cmos = tmp_path / "cmos.csv"
        invoke(runner, ["score", "--votes", str(votes), "--screened", str(screened),
                        "--out", str(cmos), "--orient", "degradation"])
        scores = {s.condition_id: s for s in read_scores(cmos)}
        assert set(scores) == set(CONDITION_QUALITY)
        for condition, score in scores.items():
            assert score.mean == pytest.approx(CONDITION_QUALITY[condition], abs=0.6)

        # degraded conditions are ordered as planted: G726_clean best, G729_babble worst
        assert scores["G726_clean"].mean > scores["G729_babble"].mean

        report_dir = tmp_path / "report"
        reference = tmp_path / "reference.csv"
        write_scores(
            [ConditionScore(c, 4.5 + CONDITION_QUALITY[c], 30, 0.5, 0.2)
             for c in sorted(CONDITION_QUALITY)],
            reference,
        )
        result = invoke(runner, [
            "report", "--study", str(demo_study_file), "--scores", str(cmos),
            "--reference", str(reference), "--screened", str(screened),
            "--votes", str(votes), "--orient", "degradation", "--out", str(report_dir),
        ])
        outputs = json.loads(result.output)
        assert set(outputs) >= {"report_json", "report_txt", "scatter", "sos"}
        payload = json.loads((report_dir / "report.json").read_text())
        assert payload["metrics"]["correlation"]["pcc"] > 0.9
        assert payload["metrics"]["screening"]["accepted"] == total - 2

    def test_validate_command(self, runner, tmp_path, demo_study_file, demo_study):
        _, subs_path, total = build_and_submit(runner, tmp_path, demo_study_file, demo_study)
        result = invoke(runner, ["validate", "--study", str(demo_study_file),
                                 "--subs", str(subs_path)])
        assert json.loads(result.output) == {"submissions": total, "valid": True}

    def test_validate_rejects_unknown_trials(self, runner, tmp_path, demo_study_file):
        subs_path = tmp_path / "bad.jsonl"
        subs_path.write_text(json.dumps({
            "worker_id": "w", "assignment_id": "a",
            "session_timestamp": "2021-03-01T00:00:00Z",
            "votes": [{"trial_id": "nope", "raw_rating": 0, "presentation_order": "R_FIRST"}],
        }) + "\n")
        result = runner.invoke(main, ["validate", "--study", str(demo_study_file),
                                      "--subs", str(subs_path)])
        assert result.exit_code == 1
        assert "unknown trial" in result.output


class TestStatsCommands:
    @pytest.fixture
    def run_tables(self, runner, tmp_path):
        true_csv = tmp_path / "true.csv"
        with open(true_csv, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["condition_id", "true_score"])
            for i in range(10):
                writer.writerow([f"c{i:02d}", f"{-2.2 + 0.15 * i:.3f}"])
        sim_dir = tmp_path / "sim"
        invoke(runner, ["simulate", "--true", str(true_csv), "--runs", "3",
                        "--raters", "20", "--votes-per-condition", "30",
                        "--sigma-v", "0.5", "--seed", "13", "--out", str(sim_dir)])
        return sim_dir

    def test_simulate_outputs(self, runner, run_tables):
        payload = json.loads((run_tables / "replication.json").read_text())
        assert payload["conditions"] == 10
        assert len(payload["comparisons"]) == 3
        assert payload["icc_overall"] > 0.8
        for i in range(3):
            assert (run_tables / f"run{i}_votes.csv").exists()
            assert (run_tables / f"run{i}_scores.csv").exists()

    def test_simulate_deterministic(self, runner, tmp_path, run_tables):
        true_csv = tmp_path / "true.csv"
        again = tmp_path / "sim2"
        invoke(runner, ["simulate", "--true", str(true_csv), "--runs", "3",
                        "--raters", "20", "--votes-per-condition", "30",
                        "--sigma-v", "0.5", "--seed", "13", "--out", str(again)])
        for name in ("run0_votes.csv", "run1_scores.csv", "replication.json"):
            assert (again / name).read_bytes() == (run_tables / name).read_bytes()

    def test_simulated_votes_replay_through_score(self, runner, tmp_path, run_tables):
        # order correction must reconstruct the simulated corrected values
        out = tmp_path / "replayed.csv"
        invoke(runner, ["score", "--votes", str(run_tables / "run0_votes.csv"),
                        "--out", str(out)])
        replayed = read_scores(out)
        original = read_scores(run_tables / "run0_scores.csv")
        assert [(s.condition_id, s.mean) for s in replayed] == [
            (s.condition_id, s.mean) for s in original
        ]

    def test_compare(self, runner, tmp_path, run_tables):
        out = tmp_path / "cmp"
        result = invoke(runner, ["stats", "compare",
                                 "--a", str(run_tables / "run0_scores.csv"),
                                 "--b", str(run_tables / "run1_scores.csv"),
                                 "--out", str(out)])
        payload = json.loads(result.output)
        assert payload["pcc"] > 0.9
        assert payload["linear_map"]["rmse_after"] <= payload["linear_map"]["rmse_before"] + 1e-12
        assert (out / "compare.csv").exists()

    def test_icc(self, runner, tmp_path, run_tables):
        result = invoke(runner, ["stats", "icc",
                                 "--runs", str(run_tables / "run0_scores.csv"),
                                 "--runs", str(run_tables / "run1_scores.csv"),
                                 "--runs", str(run_tables / "run2_scores.csv"),
                                 "--out", str(tmp_path / "icc")])
        payload = json.loads(result.output)
        assert payload["icc"] > 0.8
        assert payload["k_raters"] == 3

    def test_rankdelta_with_dimensions(self, runner, tmp_path, run_tables):
        dims = tmp_path / "dims.csv"
        with open(dims, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["condition_id", "discontinuity"])
            for i in range(10):
                writer.writerow([f"c{i:02d}", f"{0.1 * i:.2f}"])
        result = invoke(runner, ["stats", "rankdelta",
                                 "--a", str(run_tables / "run0_scores.csv"),
                                 "--b", str(run_tables / "run1_scores.csv"),
                                 "--dims", str(dims),
                                 "--out", str(tmp_path / "rd")])
        payload = json.loads(result.output)
        assert len(payload["deltas"]) == 10
        assert "discontinuity" in payload["dimension_correlations"]
        assert (tmp_path / "rd" / "rankdelta.csv").exists()

    def test_anova_on_pipeline_votes(self, runner, tmp_path, demo_study_file,
                                     demo_study, demo_keys_file):
        build_dir, subs_path, _ = build_and_submit(runner, tmp_path, demo_study_file, demo_study)
        votes = tmp_path / "votes.csv"
        invoke(runner, ["screen", "--study", str(demo_study_file), "--keys", str(demo_keys_file),
                        "--subs", str(subs_path), "--out", str(tmp_path / "screened.csv"),
                        "--votes-out", str(votes)])
        result = invoke(runner, ["stats", "anova", "--votes", str(votes),
                                 "--study", str(demo_study_file),
                                 "--factor-a", "codec", "--factor-b", "noise",
                                 "--pairwise", "b", "--out", str(tmp_path / "anova")])
        payload = json.loads(result.output)
        effects = {row["effect"]: row for row in payload["rows"]}
        assert set(effects) == {"codec", "noise", "interaction", "residual"}
        # planted codec gap (0.8) and noise gradient (0.35/step) are large vs noise
        assert effects["codec"]["p"] < 0.01
        assert effects["noise"]["p"] < 0.01
        assert len(payload["pairwise"]) == 3  # C(3,2) noise pairs
        assert (tmp_path / "anova" / "anova.csv").exists()


class TestCliErrors:
    def test_mismatched_compare_sets(self, runner, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_scores([ConditionScore("c1", -1, 5, 0.1, 0.1)], a)
        write_scores([ConditionScore("c2", -1, 5, 0.1, 0.1)], b)
        result = runner.invoke(main, ["stats", "compare", "--a", str(a), "--b", str(b)])
        assert result.exit_code == 1
        assert "condition sets differ" in result.output

    def test_bad_offsets_length(self, runner, tmp_path):
        true_csv = tmp_path / "true.csv"
        true_csv.write_text("condition_id,true_score\nc1,-1.0\nc2,-2.0\n")
        result = runner.invoke(main, ["simulate", "--true", str(true_csv), "--runs", "3",
                                      "--offsets", "0.1,0.2", "--seed", "1",
                                      "--out", str(tmp_path / "x")])
        assert result.exit_code == 1
        assert "offsets" in result.output
