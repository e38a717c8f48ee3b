import numpy as np
import pytest

from teanet.autodiff import Tape, Tensor, backward, sparse_cross_entropy
from teanet.autodiff.gradcheck import check_gradients
from teanet.errors import ConfigError, ShapeError
from teanet.model import (
    DEFAULT_SCHEDULE,
    FEATURE_TAP,
    VARIANTS,
    FilterTriple,
    Model,
    TeanetConfig,
    build_ab,
    build_cb,
    build_classifier,
    build_dsb,
    build_tcb,
    build_tea_layer,
    build_teanet,
    feature_maps,
)
from teanet.model.layers import ForwardContext
from teanet.model.network import _Builder
from teanet.preprocessing import Segment


def run(layer, x, training=False):
    return layer(Tensor(x), ForwardContext(training=training)).data


@pytest.fixture
def builder():
    return _Builder(np.random.default_rng(3))


class TestBlocks:
    @pytest.mark.parametrize("length,expected", [(1920, 240), (960, 120)])
    def test_dsb_divides_by_eight(self, builder, length, expected):
        out = run(build_dsb(1, builder), np.ones((1, length, 1)))
        assert out.shape == (1, expected, 128)

    def test_cb_channel_sum(self, builder):
        triple = FilterTriple(16, 32, 64)
        cb = build_cb(triple, 8, builder)
        assert cb.out_channels == 16 + 16 + 32
        for length in (240, 17, 1):
            assert run(cb, np.ones((2, length, 8))).shape == (2, length, 64)

    def test_tcb_mirrors_cb(self, builder):
        triple = FilterTriple(64, 64, 16)
        cb, tcb = build_cb(triple, 12, builder), build_tcb(triple, 12, builder)
        assert tcb.out_channels == cb.out_channels == 64 + 64 + 64
        count = lambda blk: sum(t.data.size for _, t in blk.named_parameters())
        assert count(cb) == count(tcb)
        assert run(tcb, np.ones((1, 240, 12))).shape == (1, 240, 192)

    def test_ab_shape_and_filters(self, builder):
        ab = build_ab(64, builder)
        assert run(ab, np.ones((2, 240, 64))).shape == (2, 240, 32)
        widths = [ab[f"stage{i}"]["conv"].spec.filters for i in (1, 2, 3)]
        assert widths == [96, 16, 32]

    def test_classifier_lengths(self, builder):
        clf = build_classifier(40, 240, builder)
        clf.assign_paths("")
        trace = []
        clf(Tensor(np.ones((1, 240, 40))), ForwardContext(trace=trace))
        pooled = [out.shape[1] for path, out in trace if path.endswith("pool")]
        assert pooled == [120, 60, 30]
        assert clf["dense"].weights.data.shape == (32, 2)

    def test_classifier_too_short(self, builder):
        with pytest.raises(ShapeError):
            build_classifier(4, 7, builder)


class TestSchedule:
    def test_row_one(self):
        cfg = TeanetConfig()
        assert cfg.triple(1, "tcb") == (64, 64, 16)
        assert cfg.triple(1, "cb1") == (16, 32, 64)

    def test_seven_rows_of_five_positive_triples(self):
        assert len(DEFAULT_SCHEDULE) == 7
        for row in DEFAULT_SCHEDULE:
            assert len(row) == 5
            assert all(v > 0 for t in row for v in t)

    def test_width_divisor(self):
        cfg = TeanetConfig(width_divisor=4)
        assert cfg.triple(1, "tcb") == (16, 16, 4)

    @pytest.mark.parametrize("kwargs", [
        {"tea_layers": 1}, {"tea_layers": 8}, {"variant": "bogus"}, {"dropout": 1.0},
        {"width_divisor": 0}, {"schedule": [[1] * 14]},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            TeanetConfig(**kwargs)

    def test_dict_round_trip(self):
        cfg = TeanetConfig(tea_layers=4, variant="te_only", seed=9)
        assert TeanetConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            TeanetConfig.from_dict({"tea_layers": 2, "learning_rate": 1})


class TestTeaLayer:
    @pytest.mark.parametrize("row", range(1, 8))
    @pytest.mark.parametrize("length", [240, 120, 64])
    def test_time_preserving(self, row, length):
        cfg = TeanetConfig(tea_layers=7, width_divisor=8)
        b = _Builder(np.random.default_rng(row), width_divisor=8)
        tea = build_tea_layer(row, cfg, 16, b)
        assert run(tea, np.random.default_rng(0).standard_normal((1, length, 16))).shape == (
            1, length, tea.out_channels)

    def test_decomposition(self, rng):
        cfg = TeanetConfig(width_divisor=4)
        tea = build_tea_layer(1, cfg, 8, _Builder(rng, width_divisor=4))
        x = rng.standard_normal((2, 48, 8))
        whole = run(tea, x)
        parts = np.concatenate([run(tea["conv_path"], x), run(tea["te_path"], x)], axis=2)
        np.testing.assert_allclose(whole, parts, rtol=0, atol=1e-12)

    def test_variant_edits(self, rng):
        def names(variant):
            cfg = TeanetConfig(variant=variant, width_divisor=8)
            tea = build_tea_layer(1, cfg, 8, _Builder(rng, width_divisor=8))
            tea.assign_paths("")
            return {n for n, _ in tea.named_parameters()}

        te, no_tcb = names("te_only"), names("te_no_tcb")
        assert te - no_tcb == {n for n in te if n.startswith("te_path.tcb.")}
        assert no_tcb < te
        assert all(n.startswith("conv_path.") for n in names("conv_only"))
        assert all(n.startswith("te_path.") for n in names("te_only"))
        assert not any(".ab" in n for n in names("te_no_autoencoder"))


class TestModel:
    @pytest.mark.parametrize("variant", VARIANTS)
    @pytest.mark.parametrize("depth", range(2, 8))
    def test_forward_shape(self, variant, depth):
        model = build_teanet(TeanetConfig(tea_layers=depth, variant=variant, width_divisor=8))
        x = np.random.default_rng(depth).standard_normal((2, 1920, 1))
        p = model.predict_proba(x)
        assert p.shape == (2, 2)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(p >= 0)

    def test_default_width_forward(self):
        model = build_teanet(TeanetConfig(tea_layers=3))
        p = model.predict_proba(np.random.default_rng(0).standard_normal((4, 1920, 1)))
        assert p.shape == (4, 2)

    def test_parameter_count_monotone(self):
        counts = [build_teanet(TeanetConfig(tea_layers=k)).parameter_count() for k in range(2, 8)]
        assert all(a < b for a, b in zip(counts, counts[1:]))

    def test_conv_only_structure(self):
        model = build_teanet(TeanetConfig(tea_layers=2, variant="conv_only", width_divisor=8))
        top = [n for n, _ in model.root.layers]
        assert top == ["dsb", "tea1", "tea2", "classifier"]
        assert [n for n, _ in model.block("tea1").branches] == ["conv_path"]

    def test_seed_determinism(self):
        a = build_teanet(TeanetConfig(tea_layers=2, width_divisor=8, seed=5))
        b = build_teanet(TeanetConfig(tea_layers=2, width_divisor=8, seed=5))
        c = build_teanet(TeanetConfig(tea_layers=2, width_divisor=8, seed=6))
        sa, sb, sc = a.state_dict(), b.state_dict(), c.state_dict()
        assert all(np.array_equal(sa[k], sb[k]) for k in sa)
        assert any(not np.array_equal(sa[k], sc[k]) for k in sa)

    def test_fold_salt_changes_init(self):
        cfg = TeanetConfig(tea_layers=2, width_divisor=8)
        a, b = build_teanet(cfg, fold=0).state_dict(), build_teanet(cfg, fold=1).state_dict()
        assert any(not np.array_equal(a[k], b[k]) for k in a)

    def test_train_infer_agree_with_batch_stats(self, rng):
        cfg = TeanetConfig(tea_layers=2, width_divisor=8, dropout=0.0, bn_momentum=0.0)
        model = build_teanet(cfg)
        x = rng.standard_normal((4, 1920, 1))
        # momentum 0 copies the batch statistics into the running ones
        train_out = model.forward(x, training=True).data
        infer_out = model.forward(x, training=False).data
        np.testing.assert_allclose(train_out, infer_out, rtol=0, atol=1e-9)

    def test_inference_does_not_mutate(self, rng):
        model = build_teanet(TeanetConfig(tea_layers=2, width_divisor=8))
        before = {k: v.copy() for k, v in model.state_dict().items()}
        model.predict_proba(rng.standard_normal((2, 1920, 1)))
        after = model.state_dict()
        assert all(np.array_equal(before[k], after[k]) for k in before)

    def test_save_load(self, tmp_path, rng):
        model = build_teanet(TeanetConfig(tea_layers=2, width_divisor=8, seed=3))
        for _, a in model.root.named_buffers():
            a[...] = rng.uniform(0.5, 1.5, a.shape)
        path = tmp_path / "m.weights"
        model.save(path)
        loaded = Model.load(path)
        assert loaded.config == model.config
        x = rng.standard_normal((3, 1920, 1))
        a, b = model.predict_proba(x), loaded.predict_proba(x)
        np.testing.assert_allclose(b, a, rtol=1e-4)


class TestFeatureMaps:
    def test_shape(self):
        model = build_teanet(TeanetConfig(tea_layers=2, width_divisor=4))
        maps = feature_maps(model, np.random.default_rng(0).standard_normal(1920))
        assert maps.shape == (32 // 4, 30)

    def test_default_width_has_32_rows(self):
        model = build_teanet(TeanetConfig(tea_layers=2))
        seg = Segment("S1", 0, np.zeros(1920))
        assert feature_maps(model, seg).shape == (32, 30)

    def test_zero_input_deterministic(self):
        model = build_teanet(TeanetConfig(tea_layers=2, width_divisor=8))
        a = feature_maps(model, np.zeros(1920))
        b = feature_maps(model, np.zeros(1920))
        np.testing.assert_array_equal(a, b)
        # with no signal every time step sees the same (bias-driven) value
        # except near the edges where same padding contributes zeros
        assert np.allclose(a[:, 10], a[:, 15])

    def test_wrong_length(self):
        model = build_teanet(TeanetConfig(tea_layers=2, width_divisor=8))
        with pytest.raises(ShapeError):
            feature_maps(model, np.zeros(1000))

    def test_tap_name(self):
        assert FEATURE_TAP == "classifier.block3.pool"


@pytest.mark.parametrize("variant", ["full", "te_only", "conv_only"])
def test_full_model_gradients(variant):
    cfg = TeanetConfig(tea_layers=2, variant=variant, width_divisor=8, dropout=0.0, seed=1)
    model = build_teanet(cfg)
    rng = np.random.default_rng(11)
    x = Tensor(rng.standard_normal((2, 1920, 1)))
    labels = np.array([0, 1])

    def loss():
        return sparse_cross_entropy(model.forward(x, training=True), labels)

    results = check_gradients(loss, model.parameters(), 20, rng)
    assert len(results) >= 20
    assert max(r[-1] for r in results) <= 1e-4


def test_backward_reaches_every_parameter():
    model = build_teanet(TeanetConfig(tea_layers=2, width_divisor=8, dropout=0.0))
    x = Tensor(np.random.default_rng(0).standard_normal((4, 1920, 1)))
    with Tape() as tape:
        loss = sparse_cross_entropy(model.forward(x, training=True), np.array([0, 1, 0, 1]))
    grads = backward(tape, loss)
    assert all(p in grads for p in model.parameters())
