"""AUC (dual route + exact rational), ROC/DET/EER, categories, splits."""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import pytest

from weldwatch.errors import DataError
from weldwatch.evaluation import (
    apply_split,
    auc,
    auc_exact,
    auc_trapezoid,
    det_curve,
    eer,
    largest_remainder,
    per_category_auc,
    roc_curve,
)


def brute_force_auc(scores, labels):
    """O(n^2) pair-counting oracle with half credit for ties."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    defects = scores[labels]
    goods = scores[~labels]
    total = 0.0
    for d in defects:
        for g in goods:
            if d > g:
                total += 1.0
            elif d == g:
                total += 0.5
    return total / (defects.size * goods.size)


def random_labeled_set(rng, max_n=500):
    n = int(rng.integers(4, max_n + 1))
    labels = np.zeros(n, dtype=bool)
    n_pos = int(rng.integers(1, n))
    labels[:n_pos] = True
    labels = labels[rng.permutation(n)]
    # Quantized scores force plenty of ties.
    scores = np.round(rng.normal(size=n) * 3.0) / 3.0
    scores[labels] += rng.uniform(0, 1.5)
    return scores, labels


class TestAucValues:
    def test_perfect_separation(self):
        scores = np.array([0.9, 0.8, 0.2, 0.1])
        labels = np.array([True, True, False, False])
        assert auc(scores, labels) == 1.0

    def test_all_identical_scores(self):
        scores = np.ones(10)
        labels = np.array([True] * 4 + [False] * 6)
        assert auc(scores, labels) == 0.5

    def test_four_pair_example(self):
        scores = np.array([0.9, 0.4, 0.5, 0.1])
        labels = np.array([True, True, False, False])
        assert auc(scores, labels) == 0.75

    def test_single_class_rejected(self):
        with pytest.raises(DataError):
            auc(np.array([1.0, 2.0]), np.array([True, True]))


class TestAucRoutesAgree:
    def test_rank_vs_trapezoid_vs_pairs_randomized(self):
        rng = np.random.default_rng(500)
        for _ in range(30):
            scores, labels = random_labeled_set(rng, max_n=120)
            a_rank = auc(scores, labels)
            a_trap = auc_trapezoid(scores, labels)
            a_pairs = brute_force_auc(scores, labels)
            assert abs(a_rank - a_trap) <= 1e-12
            assert abs(a_rank - a_pairs) <= 1e-12

    def test_exact_matches_float_routes(self):
        rng = np.random.default_rng(501)
        scores, labels = random_labeled_set(rng, max_n=200)
        exact = auc_exact(scores, labels)
        assert abs(auc(scores, labels) - float(exact)) <= 1e-12

    def test_complement_identity_is_exact(self):
        rng = np.random.default_rng(502)
        for _ in range(20):
            scores, labels = random_labeled_set(rng, max_n=200)
            assert auc_exact(scores, labels) + auc_exact(-scores, labels) \
                == Fraction(1)

    def test_rank_invariance_under_increasing_transform(self):
        rng = np.random.default_rng(503)
        scores, labels = random_labeled_set(rng, max_n=200)
        base = auc(scores, labels)
        assert auc(np.exp(scores), labels) == pytest.approx(base, abs=1e-12)
        assert auc(3.0 * scores + 11.0, labels) == pytest.approx(base, abs=1e-12)


class TestRocDetCurves:
    def test_roc_is_monotone_staircase_with_unit_endpoints(self):
        rng = np.random.default_rng(504)
        scores, labels = random_labeled_set(rng, max_n=100)
        curve = roc_curve(scores, labels)
        assert curve.fpr[0] == 0.0 and curve.tpr[0] == 0.0
        assert curve.fpr[-1] == 1.0 and curve.tpr[-1] == 1.0
        assert (np.diff(curve.fpr) >= 0).all()
        assert (np.diff(curve.tpr) >= 0).all()
        assert curve.thresholds[0] == np.inf

    def test_det_is_one_minus_tpr(self):
        rng = np.random.default_rng(505)
        scores, labels = random_labeled_set(rng, max_n=100)
        roc = roc_curve(scores, labels)
        det = det_curve(scores, labels)
        np.testing.assert_array_equal(det.fnr, 1.0 - roc.tpr)
        np.testing.assert_array_equal(det.fpr, roc.fpr)


class TestEer:
    def test_perfect_separation_gives_zero(self):
        scores = np.array([0.8, 0.9, 0.1, 0.2])
        labels = np.array([True, True, False, False])
        assert eer(scores, labels).rate == 0.0

    def test_single_pair_det_path(self):
        scores = np.array([0.8, 0.2])
        labels = np.array([True, False])
        result = eer(scores, labels)
        assert result.rate == 0.0

    def test_interleaved_scores_cross_at_half(self):
        scores = np.array([2.0, 4.0, 1.0, 3.0])
        labels = np.array([True, True, False, False])
        result = eer(scores, labels)
        assert result.rate == pytest.approx(0.5)

    def test_random_labels_give_eer_near_half(self):
        rng = np.random.default_rng(506)
        n = 10_000
        scores = rng.normal(size=n)
        labels = rng.random(n) < 0.5
        assert abs(eer(scores, labels).rate - 0.5) < 0.03

    def test_bracketing_points_straddle_the_crossing(self):
        rng = np.random.default_rng(507)
        scores, labels = random_labeled_set(rng, max_n=200)
        result = eer(scores, labels)
        f0, n0 = result.lower
        f1, n1 = result.upper
        assert n0 - f0 >= 0.0
        assert n1 - f1 <= 0.0


class TestPerCategoryAuc:
    def test_dominant_category_scores_one(self):
        scores = np.array([0.1, 0.2, 0.9, 0.8, 0.3])
        labels = np.array([False, False, True, True, True])
        cats = ["Good", "Good", "Spatter", "Spatter", "Porosity"]
        out = per_category_auc(scores, labels, cats)
        assert out["Spatter"] == 1.0

    def test_all_is_pooled_not_category_mean(self):
        # Two equal-size categories, one perfect and one inverted: the
        # pooled AUC differs from the mean of the category AUCs.
        scores = np.array([0.5, 0.5, 1.0, 1.0, 0.0, 0.0])
        labels = np.array([False, False, True, True, True, True])
        cats = ["Good", "Good", "Spatter", "Spatter", "Porosity", "Porosity"]
        out = per_category_auc(scores, labels, cats)
        assert out["Spatter"] == 1.0
        assert out["Porosity"] == 0.0
        pooled = brute_force_auc(scores, labels)
        assert out["All"] == pytest.approx(pooled, abs=1e-12)

    def test_category_matching_good_distribution_scores_half(self):
        scores = np.array([0.1, 0.4, 0.7, 0.1, 0.4, 0.7])
        labels = np.array([False, False, False, True, True, True])
        cats = ["Good", "Good", "Good", "Undercut", "Undercut", "Undercut"]
        out = per_category_auc(scores, labels, cats)
        assert out["Undercut"] == 0.5

    def test_expected_but_absent_category_warns_and_skips(self):
        scores = np.array([0.1, 0.9])
        labels = np.array([False, True])
        cats = ["Good", "Spatter"]
        with pytest.warns(UserWarning):
            out = per_category_auc(
                scores, labels, cats,
                expected_categories=["Spatter", "Warping"],
            )
        assert "Warping" not in out
        assert out["Spatter"] == 1.0


@dataclass(frozen=True)
class FakeSample:
    sample_id: str
    is_defect: bool


def fake_corpus(n_good, n_defect):
    goods = [FakeSample(f"g{i}", False) for i in range(n_good)]
    defects = [FakeSample(f"d{i}", True) for i in range(n_defect)]
    return goods + defects


class TestLargestRemainder:
    def test_reference_counts_split_exactly(self):
        assert largest_remainder(819, (576, 122, 121)) == [576, 122, 121]

    def test_hundred_goods_round_to_seventy_fifteen_fifteen(self):
        assert largest_remainder(100, (576, 122, 121)) == [70, 15, 15]

    def test_parts_always_sum_to_total(self):
        rng = np.random.default_rng(508)
        for _ in range(50):
            total = int(rng.integers(1, 1000))
            weights = rng.uniform(0.1, 5.0, size=3)
            assert sum(largest_remainder(total, weights)) == total


class TestApplySplit:
    def test_reference_corpus_counts(self):
        split = apply_split(fake_corpus(819, 3221), seed=0)
        goods = lambda part: sum(not s.is_defect for s in part)
        defects = lambda part: sum(s.is_defect for s in part)
        assert (goods(split.train), goods(split.val), goods(split.test)) \
            == (576, 122, 121)
        assert defects(split.train) == 0
        assert (defects(split.val), defects(split.test)) == (1610, 1611)

    def test_hundred_hundred_split(self):
        split = apply_split(fake_corpus(100, 100), seed=1)
        assert len(split.train) == 70
        assert len(split.val) == 15 + 50
        assert len(split.test) == 15 + 50

    def test_train_never_contains_defects(self):
        rng = np.random.default_rng(509)
        for trial in range(10):
            split = apply_split(
                fake_corpus(int(rng.integers(2, 50)), int(rng.integers(2, 50))),
                seed=trial,
            )
            assert all(not s.is_defect for s in split.train)

    def test_same_seed_gives_identical_partitions(self):
        corpus = fake_corpus(37, 23)
        a = apply_split(corpus, seed=7)
        b = apply_split(corpus, seed=7)
        assert [s.sample_id for s in a.train] == [s.sample_id for s in b.train]
        assert [s.sample_id for s in a.val] == [s.sample_id for s in b.val]
        assert [s.sample_id for s in a.test] == [s.sample_id for s in b.test]

    def test_partitions_are_disjoint_and_cover(self):
        corpus = fake_corpus(41, 19)
        split = apply_split(corpus, seed=3)
        ids = [s.sample_id for s in split.train + split.val + split.test]
        assert sorted(ids) == sorted(s.sample_id for s in corpus)

    def test_too_few_samples_rejected(self):
        with pytest.raises(DataError):
            apply_split(fake_corpus(1, 10), seed=0)
        with pytest.raises(DataError):
            apply_split(fake_corpus(10, 1), seed=0)
