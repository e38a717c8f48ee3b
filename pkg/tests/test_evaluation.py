import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teanet import evaluation
from teanet.errors import ConfigError, DataError
from teanet.evaluation import (
    ConfusionMatrix,
    EvalConfig,
    auc,
    compute_metrics,
    format_report,
    loso_plan,
    loso_run,
    score_report,
)
from teanet.model import TeanetConfig
from teanet.preprocessing import Segment
from teanet.training import TrainConfig


def brute_force_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return wins / (len(pos) * len(neg))


class TestComputeMetrics:
    def test_hand_fixture(self):
        m = compute_metrics(ConfusionMatrix(tp=9, fp=2, tn=8, fn=1))
        assert abs(m.accuracy - 0.85) <= 1e-9
        assert abs(m.sensitivity - 0.90) <= 1e-9
        assert abs(m.specificity - 0.80) <= 1e-9
        assert abs(m.f1 - 18 / 21) <= 1e-9
        assert abs(m.kappa - 0.70) <= 1e-9
        assert m.flags == ()

    def test_perfect(self):
        m = compute_metrics(ConfusionMatrix(5, 0, 7, 0))
        assert (m.accuracy, m.sensitivity, m.specificity, m.f1, m.kappa) == (1, 1, 1, 1, 1)

    def test_always_stressed_balanced(self):
        m = compute_metrics(ConfusionMatrix(tp=10, fp=10, tn=0, fn=0))
        assert m.kappa == 0.0

    def test_no_positives_flags(self):
        m = compute_metrics(ConfusionMatrix(tp=0, fp=0, tn=6, fn=0))
        assert math.isnan(m.sensitivity)
        assert "sensitivity" in m.flags
        assert m.specificity == 1.0

    def test_f1_on_normal_class(self):
        cm = ConfusionMatrix(tp=9, fp=2, tn=8, fn=1)
        assert compute_metrics(cm, f1_class=0).f1 == pytest.approx(16 / 19)
        with pytest.raises(ConfigError):
            compute_metrics(cm, f1_class=2)

    def test_empty(self):
        with pytest.raises(DataError):
            compute_metrics(ConfusionMatrix(0, 0, 0, 0))

    def test_negative_counts(self):
        with pytest.raises(DataError):
            ConfusionMatrix(-1, 0, 0, 0)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 50), st.integers(0, 50), st.integers(1, 50), st.integers(0, 50))
    def test_accuracy_identity(self, tp, fp, tn, fn):
        m = compute_metrics(ConfusionMatrix(tp, fp, tn, fn))
        p, n = tp + fn, tn + fp
        if p and n:
            assert m.accuracy == pytest.approx((m.sensitivity * p + m.specificity * n) / (p + n))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 20), st.integers(1, 20), st.integers(1, 5), st.integers(1, 5))
    def test_independent_prediction_kappa_zero(self, n_pos, n_neg, a, b):
        # predict stressed for a/(a+b) of each class; prediction independent of label
        cm = ConfusionMatrix(tp=n_pos * a, fn=n_pos * b, fp=n_neg * a, tn=n_neg * b)
        assert abs(compute_metrics(cm).kappa) <= 1e-12


class TestAuc:
    def test_examples(self):
        assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
        assert auc([0.3] * 6, [0, 1] * 3) == 0.5
        assert auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75, abs=1e-12)

    def test_single_class(self):
        with pytest.raises(DataError):
            auc([0.1, 0.2], [1, 1])

    def test_brute_force_100_sets(self):
        r = np.random.default_rng(7)
        for i in range(40):
            n = int(r.integers(2, 51))
            labels = r.integers(0, 2, n)
            labels[:2] = [0, 1]
            # coarse rounding forces ties in about half the sets
            scores = r.random(n).round(1 if i % 2 else 6)
            assert abs(auc(scores, labels) - brute_force_auc(scores, labels)) <= 1e-9

    def test_score_report_flags_single_class(self):
        rep = score_report(np.array([0.9, 0.1]), np.array([1, 1]))
        assert "auc" in rep.flags and math.isnan(rep.auc)


class TestLosoPlan:
    @pytest.mark.parametrize("n", [2, 15, 19])
    def test_fold_count(self, n):
        ids = [f"S{i}" for i in range(n)]
        plan = loso_plan(ids)
        assert len(plan) == n
        assert sorted(test for _, test in plan) == sorted(ids)
        for train, test in plan:
            assert test not in train and len(train) == n - 1

    def test_too_few(self):
        with pytest.raises(DataError):
            loso_plan(["S1"])

    def test_duplicates(self):
        with pytest.raises(DataError):
            loso_plan(["S1", "S1"])

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            EvalConfig(aggregate="median")


def fake_segments(subjects=("A", "B", "C"), per_class=(3, 1)):
    out = []
    for i, s in enumerate(subjects):
        r = np.random.default_rng(i)
        for label, count in enumerate(per_class):
            out += [Segment(s, label, r.standard_normal(1920)) for _ in range(count)]
    return out


class TestLeakageGuards:
    def test_training_never_sees_test_subject(self, monkeypatch):
        seen = []

        def fake_fit(model, segments, config, fold=None):
            seen.append({s.subject for s in segments})
            return model, []

        monkeypatch.setattr(evaluation, "fit", fake_fit)
        data = fake_segments()
        result = loso_run(data, TeanetConfig(tea_layers=2, width_divisor=16),
                          TrainConfig(epochs=1))
        assert len(result.folds) == 3
        for fold, subjects in zip(result.folds, seen):
            assert fold.subject not in subjects
            assert fold.subject not in fold.augmentation_subjects
            # augmentation balanced the training part only
            assert fold.train_size == 2 * 3 * 2
        pooled = result.aggregate.confusion.total
        assert pooled == sum(f.metrics.confusion.total for f in result.folds) == len(data)

    def test_flagged_fold_still_pooled(self, monkeypatch):
        monkeypatch.setattr(evaluation, "fit", lambda m, s, c, fold=None: (m, []))
        data = fake_segments(("A", "B")) + [Segment("C", 0, np.zeros(1920))]
        result = loso_run(data, TeanetConfig(tea_layers=2, width_divisor=16),
                          TrainConfig(epochs=1))
        by_subject = {f.subject: f for f in result.folds}
        assert by_subject["C"].flagged
        assert result.aggregate.confusion.total == len(data)

    def test_mean_aggregation(self, monkeypatch):
        monkeypatch.setattr(evaluation, "fit", lambda m, s, c, fold=None: (m, []))
        result = loso_run(fake_segments(), TeanetConfig(tea_layers=2, width_divisor=16),
                          TrainConfig(epochs=1), EvalConfig(aggregate="mean"))
        accs = [f.metrics.accuracy for f in result.folds]
        assert result.aggregate.accuracy == pytest.approx(np.mean(accs))
        assert result.method == "mean"


def test_report_format(monkeypatch):
    monkeypatch.setattr(evaluation, "fit", lambda m, s, c, fold=None: (m, []))
    result = loso_run(fake_segments(), TeanetConfig(tea_layers=2, width_divisor=16),
                      TrainConfig(epochs=1))
    text = format_report(result, ["run x"])
    lines = text.splitlines()
    assert lines[0] == "# run x"
    assert lines[1] == "subject\tn\tacc\tspe\tsen\tf1\tauc\tkappa\tflags"
    assert [line.split("\t")[0] for line in lines[2:]] == ["A", "B", "C", "pooled"]
    for line in lines[2:]:
        fields = line.split("\t")
        assert len(fields) == 9
        assert all(v == "nan" or len(v.split(".")[1]) == 4 for v in fields[2:8])


def test_two_identical_separable_subjects():
    template = np.tile(np.linspace(-1, 1, 320), 6)
    r = np.random.default_rng(0)
    data = []
    for subject in ("A", "B"):
        for i in range(40):
            label = i % 2
            sign = 1.0 if label else -1.0
            data.append(Segment(subject, label, sign * template + 0.5 * r.standard_normal(1920)))
    result = loso_run(data, TeanetConfig(tea_layers=2, width_divisor=16, seed=1, bn_momentum=0.9),
                      TrainConfig(epochs=20, batch_size=16, seed=1, learning_rate=3e-3), EvalConfig(augment=False))
    for fold in result.folds:
        assert fold.metrics.accuracy >= 0.99
