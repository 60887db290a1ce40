import math
import random

import pytest

from ccrkit.model import InputError
from ccrkit.stats import (
    average_ranks,
    bonferroni_pairwise,
    conclusion_agreement,
    delta_dimension_correlation,
    fit_linear_map,
    icc_a1,
    pearson,
    rank_order_delta,
    rmse,
    spearman,
    two_way_anova,
)

from .oracles import (
    anova_ss_oracle,
    icc_a1_oracle,
    pearson_oracle,
    rank_oracle,
    spearman_oracle,
    welch_t_oracle,
)


class TestPearson:
    def test_identity(self):
        assert pearson([1, 2, 5], [1, 2, 5]).r == pytest.approx(1.0)

    def test_perfect_negative(self):
        assert pearson([1, 2, 3], [3, 2, 1]).r == pytest.approx(-1.0)

    def test_zero_variance_errors(self):
        with pytest.raises(ValueError, match="zero-variance"):
            pearson([1, 1, 1], [1, 2, 3])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            pearson([1, 2], [1, 2, 3])

    def test_symmetry_and_affine_invariance(self):
        rng = random.Random(5)
        for _ in range(20):
            x = [rng.uniform(-3, 0) for _ in range(12)]
            y = [rng.uniform(1, 5) for _ in range(12)]
            r = pearson(x, y).r
            assert pearson(y, x).r == pytest.approx(r, abs=1e-12)
            scaled = [2.5 * v + 7 for v in x]
            assert pearson(scaled, y).r == pytest.approx(r, abs=1e-12)

    def test_matches_oracle_on_random_instances(self):
        rng = random.Random(101)
        for _ in range(120):
            n = rng.randint(3, 12)
            x = [rng.uniform(-5, 5) for _ in range(n)]
            y = [rng.uniform(-5, 5) for _ in range(n)]
            assert pearson(x, y).r == pytest.approx(pearson_oracle(x, y), abs=1e-9)

    def test_p_value_reported_from_three_points(self):
        assert pearson([1, 2], [2, 1]).p_value is None
        result = pearson([1, 2, 3, 4], [1.1, 1.9, 3.2, 3.8])
        assert result.p_value is not None and 0 <= result.p_value <= 1


class TestSpearman:
    def test_monotone(self):
        assert spearman([1, 2, 3], [1, 4, 9]).r == pytest.approx(1.0)

    def test_ties_case(self):
        # brute-force average-rank oracle gives 0.9486832980505138
        assert spearman([1, 2, 2, 3], [1, 2, 3, 4]).r == pytest.approx(0.9486832980505138, abs=1e-9)

    def test_invariant_under_monotone_transform(self):
        rng = random.Random(17)
        x = [rng.uniform(0.1, 4) for _ in range(15)]
        y = [rng.uniform(0.1, 4) for _ in range(15)]
        base = spearman(x, y).r
        assert spearman([math.exp(v) for v in x], y).r == pytest.approx(base, abs=1e-12)
        assert spearman(x, [v**3 for v in y]).r == pytest.approx(base, abs=1e-12)

    def test_matches_oracle_with_heavy_ties(self):
        rng = random.Random(202)
        for _ in range(120):
            n = rng.randint(4, 12)
            # integer values force ties
            x = [rng.randint(-3, 0) for _ in range(n)]
            y = [rng.randint(-3, 0) for _ in range(n)]
            if len(set(x)) < 2 or len(set(y)) < 2:
                continue
            assert spearman(x, y).r == pytest.approx(spearman_oracle(x, y), abs=1e-9)

    def test_average_ranks(self):
        assert average_ranks([10, 20, 20, 30]) == [1.0, 2.5, 2.5, 4.0]
        assert average_ranks([10, 20, 20, 30], descending=True) == [4.0, 2.5, 2.5, 1.0]
        assert rank_oracle([10, 20, 20, 30]) == [1.0, 2.5, 2.5, 4.0]


class TestIcc:
    def test_identical_columns_give_one(self):
        matrix = [[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]]
        assert icc_a1(matrix).icc == pytest.approx(1.0, abs=1e-12)

    def test_small_matrix_matches_decomposition_oracle(self):
        matrix = [[1, 1.1], [2, 2.2], [3, 2.9], [4, 4.3]]
        result = icc_a1(matrix)
        assert result.icc == pytest.approx(icc_a1_oracle(matrix), abs=1e-9)
        assert result.icc == pytest.approx(0.989195678271309, abs=1e-9)

    def test_published_reliability_dataset(self):
        # 6 targets x 4 judges; single-measure absolute agreement = 0.29
        matrix = [[9, 2, 5, 8], [6, 1, 3, 2], [8, 4, 6, 8], [7, 1, 2, 6], [10, 5, 6, 9], [6, 2, 4, 7]]
        assert icc_a1(matrix).icc == pytest.approx(0.29, abs=0.005)

    def test_matches_oracle_on_random_matrices(self):
        rng = random.Random(303)
        for _ in range(120):
            n = rng.randint(3, 10)
            k = rng.randint(2, 5)
            matrix = [[rng.uniform(-3, 3) for _ in range(k)] for _ in range(n)]
            assert icc_a1(matrix).icc == pytest.approx(icc_a1_oracle(matrix), abs=1e-9)

    def test_incomplete_matrix_rejected(self):
        with pytest.raises(ValueError, match="incomplete"):
            icc_a1([[1, 2], [3]])
        with pytest.raises(ValueError, match="incomplete"):
            icc_a1([[1, 2], [3, float("nan")]])

    def test_too_small(self):
        with pytest.raises(ValueError):
            icc_a1([[1, 2]])


class TestTwoWayAnova:
    @staticmethod
    def balanced_2x3():
        data = {
            ("a1", "b1"): [1, 2], ("a1", "b2"): [2, 3], ("a1", "b3"): [4, 3],
            ("a2", "b1"): [5, 4], ("a2", "b2"): [6, 7], ("a2", "b3"): [8, 9],
        }
        return [(la, lb, v) for (la, lb), vs in data.items() for v in vs]

    def test_additive_factors_have_zero_interaction(self):
        effect_a = {"a1": 0.0, "a2": 2.0}
        effect_b = {"b1": 0.0, "b2": 1.0, "b3": 3.0}
        observations = [
            (la, lb, effect_a[la] + effect_b[lb] + rep)
            for la in effect_a for lb in effect_b for rep in (0.0, 0.5)
        ]
        table = two_way_anova(observations)
        assert table.row("interaction").ss == pytest.approx(0.0, abs=1e-12)

    def test_balanced_case_matches_direct_summation_oracle(self):
        observations = self.balanced_2x3()
        table = two_way_anova(observations)
        oracle = anova_ss_oracle(observations)
        assert table.row("A").ss == pytest.approx(oracle["a"], abs=1e-9)
        assert table.row("B").ss == pytest.approx(oracle["b"], abs=1e-9)
        assert table.row("interaction").ss == pytest.approx(oracle["ab"], abs=1e-9)
        assert table.row("residual").ss == pytest.approx(oracle["error"], abs=1e-9)
        # frozen hand-checked values for this dataset
        assert table.row("A").ss == pytest.approx(48.0, abs=1e-9)
        assert table.row("B").ss == pytest.approx(18.0, abs=1e-9)
        assert table.row("interaction").ss == pytest.approx(2.0, abs=1e-9)

    def test_ss_identity_on_random_balanced_data(self):
        rng = random.Random(404)
        for _ in range(100):
            a_levels = [f"a{i}" for i in range(rng.randint(2, 4))]
            b_levels = [f"b{i}" for i in range(rng.randint(2, 4))]
            r = rng.randint(2, 4)
            observations = [
                (la, lb, rng.uniform(-3, 3))
                for la in a_levels for lb in b_levels for _ in range(r)
            ]
            table = two_way_anova(observations)
            oracle = anova_ss_oracle(observations)
            total = sum(table.row(e).ss for e in ("A", "B", "interaction", "residual"))
            assert total == pytest.approx(oracle["total"], rel=1e-9, abs=1e-9)

    def test_f_and_p_shape(self):
        table = two_way_anova(self.balanced_2x3())
        for effect in ("A", "B", "interaction"):
            row = table.row(effect)
            assert row.f is not None and row.f >= 0
            assert 0.0 <= row.p <= 1.0
        assert table.row("residual").f is None

    def test_unbalanced_uses_unweighted_means(self):
        observations = self.balanced_2x3() + [("a1", "b1", 1.5)]
        table = two_way_anova(observations)
        assert not table.balanced
        # effects remain finite and positive; residual df = N - ab = 13 - 6
        assert table.row("residual").df == 7

    def test_empty_cell_named(self):
        observations = [(la, lb, 1.0 + i) for i, (la, lb) in enumerate(
            [("a1", "b1"), ("a1", "b2"), ("a2", "b1")]
        )]
        with pytest.raises(ValueError, match=r"empty cell \(a2, b2\)"):
            two_way_anova(observations)

    def test_single_level_rejected(self):
        with pytest.raises(ValueError):
            two_way_anova([("a1", "b1", 1.0), ("a1", "b2", 2.0)])


class TestBonferroni:
    def test_seven_groups_give_21_comparisons(self):
        rng = random.Random(9)
        groups = {f"g{i}": [rng.gauss(i, 1) for _ in range(5)] for i in range(7)}
        matrix = bonferroni_pairwise(groups)
        assert len(matrix.comparisons) == 21
        assert matrix.corrected_alpha == pytest.approx(0.05 / 21)

    def test_identical_groups_not_significant(self):
        groups = {"x": [1.0, 2.0, 3.0], "y": [1.0, 2.0, 3.0]}
        matrix = bonferroni_pairwise(groups)
        assert not matrix.is_significant("x", "y")

    def test_well_separated_groups_significant(self):
        rng = random.Random(42)
        groups = {
            "lo": [rng.gauss(0.0, 0.1) for _ in range(30)],
            "hi": [rng.gauss(5.0, 0.1) for _ in range(30)],
            "mid": [rng.gauss(2.5, 0.1) for _ in range(30)],
        }
        matrix = bonferroni_pairwise(groups)
        comp = matrix.comparison("lo", "hi")
        assert comp.significant
        assert comp.p_value < 0.05 / 3 / 1000  # p << corrected alpha

    def test_t_statistic_matches_oracle(self):
        rng = random.Random(77)
        x = [rng.gauss(0, 1) for _ in range(12)]
        y = [rng.gauss(0.5, 1.5) for _ in range(9)]
        matrix = bonferroni_pairwise({"x": x, "y": y})
        assert abs(matrix.comparison("x", "y").t_stat) == pytest.approx(
            abs(welch_t_oracle(x, y)), abs=1e-12
        )

    def test_small_group_rejected(self):
        with pytest.raises(ValueError, match="fewer than 2"):
            bonferroni_pairwise({"x": [1.0], "y": [1.0, 2.0]})

    def test_matrix_symmetric_lookup(self):
        groups = {"x": [1.0, 2.0], "y": [4.0, 5.0]}
        matrix = bonferroni_pairwise(groups)
        assert matrix.is_significant("x", "y") == matrix.is_significant("y", "x")


class TestFitLinearMap:
    def test_exact_linear_relation(self):
        source = [0.0, 1.0, 2.0, 3.0]
        target = [2 * s + 1 for s in source]
        linear = fit_linear_map(source, target)
        assert linear.slope == pytest.approx(2.0, abs=1e-12)
        assert linear.intercept == pytest.approx(1.0, abs=1e-12)
        assert linear.rmse_after == pytest.approx(0.0, abs=1e-12)

    def test_identity_stays_identity(self):
        source = [1.0, 2.0, 3.0]
        linear = fit_linear_map(source, source)
        assert (linear.slope, linear.intercept) == (pytest.approx(1.0), pytest.approx(0.0))
        assert linear.rmse_before == linear.rmse_after == pytest.approx(0.0)

    def test_never_increases_rmse_on_random_pairs(self):
        rng = random.Random(55)
        for _ in range(100):
            n = rng.randint(3, 20)
            source = [rng.uniform(-3, 0) for _ in range(n)]
            target = [rng.uniform(-3, 0) for _ in range(n)]
            linear = fit_linear_map(source, target)
            assert linear.rmse_after <= linear.rmse_before + 1e-12

    def test_local_optimality_probe(self):
        rng = random.Random(56)
        source = [rng.uniform(-3, 0) for _ in range(15)]
        target = [rng.uniform(-3, 0) for _ in range(15)]
        linear = fit_linear_map(source, target)

        def rmse_of(a, b):
            return rmse([a * s + b for s in source], target)

        for da in (-1e-3, 0.0, 1e-3):
            for db in (-1e-3, 0.0, 1e-3):
                assert linear.rmse_after <= rmse_of(linear.slope + da, linear.intercept + db) + 1e-15

    def test_constant_source_rejected(self):
        with pytest.raises(ValueError, match="constant"):
            fit_linear_map([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


class TestRankOrderDelta:
    def test_identical_scores_zero_delta(self):
        scores = {"c1": -1.0, "c2": -2.0, "c3": -0.5}
        deltas = rank_order_delta(scores, dict(scores))
        assert all(d.delta == 0 for d in deltas.values())

    def test_reversed_ordering(self):
        a = {"c1": 3.0, "c2": 2.0, "c3": 1.0}
        b = {"c1": 1.0, "c2": 2.0, "c3": 3.0}
        deltas = rank_order_delta(a, b)
        assert deltas["c1"].delta == -2
        assert deltas["c2"].delta == 0
        assert deltas["c3"].delta == 2

    def test_best_quality_is_rank_one(self):
        deltas = rank_order_delta({"good": 0.0, "bad": -2.5}, {"good": -0.1, "bad": -2.0})
        assert deltas["good"].rank_a == 1
        assert deltas["bad"].rank_a == 2

    def test_ties_get_average_ranks(self):
        deltas = rank_order_delta({"x": 1.0, "y": 1.0, "z": 0.0}, {"x": 2.0, "y": 1.0, "z": 0.0})
        assert deltas["x"].rank_a == 1.5
        assert deltas["y"].rank_a == 1.5

    def test_mismatched_sets_rejected(self):
        with pytest.raises(InputError, match="condition sets differ"):
            rank_order_delta({"c1": 1.0, "c2": 2.0}, {"c1": 1.0, "c3": 2.0})


class TestDeltaDimensionCorrelation:
    def test_zero_deltas_error(self):
        with pytest.raises(ValueError, match="zero-variance"):
            delta_dimension_correlation({"a": 0.0, "b": 0.0, "c": 0.0},
                                        {"a": 1.0, "b": 2.0, "c": 3.0})

    def test_proportional_dimension_gives_unit_correlation(self):
        deltas = {"a": -2.0, "b": 0.0, "c": 2.0, "d": 4.0}
        dims = {c: 0.5 * d for c, d in deltas.items()}
        result = delta_dimension_correlation(deltas, dims)
        assert result.r == pytest.approx(1.0)
        assert result.p_value == pytest.approx(0.0, abs=1e-9)

    def test_p_value_from_t_distribution(self):
        deltas = {"a": 1.0, "b": 2.0, "c": 3.0, "d": 5.0, "e": 4.0}
        dims = {"a": 0.9, "b": 2.2, "c": 2.7, "d": 5.5, "e": 3.9}
        result = delta_dimension_correlation(deltas, dims)
        assert result.p_value is not None and 0 < result.p_value < 1

    def test_mismatched_sets(self):
        with pytest.raises(InputError):
            delta_dimension_correlation({"a": 1.0}, {"b": 1.0})


class TestConclusionAgreement:
    @staticmethod
    def matrix_from_values(offsets):
        groups = {f"g{i}": [v, v + 0.01, v - 0.01] for i, v in enumerate(offsets)}
        return bonferroni_pairwise(groups)

    def test_identical_runs_agree_fully(self):
        m = self.matrix_from_values([0.0, 5.0, 10.0])
        assert conclusion_agreement([m, m, m]) == 1.0

    def test_partial_agreement_counts_pairs(self):
        # 3 levels -> 3 pairs; flip one verdict in the second run
        m1 = self.matrix_from_values([0.0, 5.0, 10.0])
        flipped = list(m1.comparisons)
        flipped[0] = type(flipped[0])(
            level_a=flipped[0].level_a, level_b=flipped[0].level_b,
            t_stat=flipped[0].t_stat, df=flipped[0].df,
            p_value=flipped[0].p_value, significant=not flipped[0].significant,
        )
        m2 = type(m1)(levels=m1.levels, alpha=m1.alpha,
                      corrected_alpha=m1.corrected_alpha, comparisons=tuple(flipped))
        assert conclusion_agreement([m1, m2]) == pytest.approx(2 / 3)

    def test_21_pairs_6_disagreements(self):
        rng = random.Random(8)
        offsets = [i * 10.0 for i in range(7)]
        m1 = self.matrix_from_values(offsets)
        assert len(m1.comparisons) == 21
        flipped = list(m1.comparisons)
        for i in range(6):
            flipped[i] = type(flipped[i])(
                level_a=flipped[i].level_a, level_b=flipped[i].level_b,
                t_stat=flipped[i].t_stat, df=flipped[i].df,
                p_value=flipped[i].p_value, significant=not flipped[i].significant,
            )
        m2 = type(m1)(levels=m1.levels, alpha=m1.alpha,
                      corrected_alpha=m1.corrected_alpha, comparisons=tuple(flipped))
        assert conclusion_agreement([m1, m2]) == pytest.approx(15 / 21)

    def test_mismatched_levels_rejected(self):
        m1 = self.matrix_from_values([0.0, 5.0])
        groups = {"other1": [0.0, 0.1, -0.1], "other2": [5.0, 5.1, 4.9]}
        m2 = bonferroni_pairwise(groups)
        with pytest.raises(InputError):
            conclusion_agreement([m1, m2])
