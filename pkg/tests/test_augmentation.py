import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teanet.augmentation import augment_minority, balance, plan, step_size, window_starts
from teanet.errors import DataError
from teanet.preprocessing import Segment

FS = 64.0
WIN = 1920


def segments(n, label, subject="S1", seed=0):
    r = np.random.default_rng(seed)
    return [Segment(subject, label, r.standard_normal(WIN)) for _ in range(n)]


class TestStepSize:
    def test_hand_values(self):
        assert step_size(300, 30, 64, 10) == 1920
        assert step_size(60, 30, 64, 3) == 960

    def test_single_window_gives_zero(self):
        assert step_size(30, 30, 64, 5) == 0

    def test_non_overlapping_stride(self):
        # n windows' worth of signal spread over n outputs reproduces the originals
        for n in range(2, 12):
            assert step_size(30 * n, 30, 64, n) == WIN

    def test_floors(self):
        assert step_size(61, 30, 64, 4) == int(31 * 64 / 3)

    @pytest.mark.parametrize("n_majority", [0, 1])
    def test_needs_two_majority(self, n_majority):
        with pytest.raises(DataError):
            step_size(60, 30, 64, n_majority)

    def test_minority_shorter_than_window(self):
        with pytest.raises(DataError):
            step_size(20, 30, 64, 3)


class TestAugmentMinority:
    def test_trace_60s_three_majority(self):
        assert window_starts(2 * WIN, WIN, FS, 3) == [0, 960, 1920]
        minority = segments(2, 1)
        out = augment_minority(minority, 3, FS, renormalize=False)
        signal = np.concatenate([s.values for s in minority])
        for start, seg in zip([0, 960, 1920], out):
            np.testing.assert_array_equal(seg.values, signal[start:start + WIN])
        assert 1920 + WIN == len(signal)

    def test_fixture_300s_ten_majority(self):
        minority = segments(10, 1)
        assert plan(10 * WIN, WIN, FS, 10).step == 1920
        out = augment_minority(minority, 10, FS, renormalize=False)
        assert len(out) == 10
        for a, b in zip(out, minority):
            np.testing.assert_array_equal(a.values, b.values)

    def test_labels_and_renormalization(self):
        out = augment_minority(segments(3, 1), 7, FS)
        assert all(s.label == 1 for s in out)
        for s in out:
            assert abs(s.values.mean()) <= 1e-9 and abs(s.values.std() - 1) <= 1e-6

    def test_subject_follows_first_sample(self):
        minority = segments(1, 1, "A") + segments(1, 1, "B", seed=1)
        out = augment_minority(minority, 3, FS)
        assert [s.subject for s in out] == ["A", "A", "B"]

    def test_mixed_labels_rejected(self):
        with pytest.raises(DataError):
            augment_minority(segments(1, 1) + segments(1, 0), 3, FS)

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            augment_minority([], 3, FS)

    @settings(max_examples=60, deadline=None)
    @given(n_minority=st.integers(1, 12), extra=st.integers(0, 40))
    def test_no_overrun_and_exact_count(self, n_minority, extra):
        n_majority = max(2, n_minority + extra)
        starts = window_starts(n_minority * WIN, WIN, FS, n_majority)
        assert len(starts) == n_majority
        assert starts[-1] + WIN <= n_minority * WIN
        d = starts[1] - starts[0]
        assert starts == [i * d for i in range(n_majority)]


class TestBalance:
    def test_equal_counts(self):
        data = segments(9, 0) + segments(3, 1, seed=1)
        out, p = balance(data, FS)
        labels = [s.label for s in out]
        assert labels.count(0) == labels.count(1) == 9
        assert p.step == step_size(90, 30, 64, 9)
        assert out[:9] == data[:9]

    def test_already_balanced(self):
        data = segments(2, 0) + segments(2, 1)
        out, p = balance(data, FS)
        assert out == data
        assert p.step == 1920

    def test_minority_is_label_zero(self):
        out, _ = balance(segments(2, 0) + segments(5, 1), FS)
        assert [s.label for s in out].count(0) == 5

    def test_single_class_rejected(self):
        with pytest.raises(DataError):
            balance(segments(3, 0), FS)

    def test_one_each(self):
        out, p = balance(segments(1, 0) + segments(1, 1), FS)
        assert len(out) == 2 and p.step == WIN
