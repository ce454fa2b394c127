import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_xy
from splitshort.domain import Order, OrderLine, SplitLabel
from splitshort.errors import ConfigError, ShapeError, StratificationError
from splitshort.evaluation import (
    CVConfig,
    EvalReport,
    HyperParamGrid,
    accuracy,
    constant_prediction_entropy,
    coverage_accuracy_curve,
    curve_point_at,
    default_thresholds,
    index_checksum,
    log_loss,
    nested_cv,
    outer_splits,
    single_item_partition,
    stratified_folds,
)

TINY_GRID = HyperParamGrid(lambda_multipliers=(0.01, 1.0), min_leaf=(5, 20), n_iters=(5, 10))


class TestMetrics:
    def test_accuracy_examples(self):
        assert accuracy([0.9, 0.2, 0.6], [1, 0, 0]) == pytest.approx(2 / 3, abs=1e-12)
        assert accuracy([0.5], [0]) == 1.0
        assert accuracy([0.0, 1.0, 1.0], [0, 1, 1]) == 1.0

    def test_log_loss_examples(self):
        assert log_loss([0.5], [1]) == pytest.approx(math.log(2), abs=1e-12)
        assert log_loss([1 - 1e-12], [1]) == pytest.approx(1e-12, abs=1e-15)
        assert log_loss([0.8, 0.8], [1, 0]) == pytest.approx((-math.log(0.8) - math.log(0.2)) / 2, abs=1e-12)

    def test_perfect_predictor(self):
        y = np.array([0, 1, 1, 0, 1])
        assert log_loss(y.astype(float), y) <= 1e-11
        assert accuracy(y.astype(float), y) == 1.0

    def test_shape_errors(self):
        with pytest.raises(ShapeError):
            accuracy([0.1, 0.2], [1])
        with pytest.raises(ShapeError):
            log_loss([], [])

    def test_entropy_of_constant_prediction(self):
        y = np.array([1, 0] * 50)
        assert log_loss(np.full(100, 0.5), y) == pytest.approx(math.log(2), abs=1e-12)
        assert constant_prediction_entropy(y) == pytest.approx(math.log(2), abs=1e-12)


class TestCurve:
    def test_half_threshold_covers_all(self):
        p = np.array([0.9, 0.4, 0.55, 0.1])
        y = np.array([1, 1, 0, 0])
        (pt,) = coverage_accuracy_curve(p, y, [0.5])
        assert pt.coverage == 1.0 and pt.accuracy == accuracy(p, y)

    def test_confidence_example(self):
        (pt,) = coverage_accuracy_curve([0.99, 0.6, 0.02], [1, 0, 1], [0.97])
        assert pt.coverage == pytest.approx(2 / 3)
        assert pt.accuracy == 0.5

    def test_perfect_confident(self):
        y = np.array([0, 1, 1])
        for pt in coverage_accuracy_curve(y.astype(float), y):
            assert pt.coverage == 1.0 and pt.accuracy == 1.0

    def test_nothing_covered(self):
        (pt,) = coverage_accuracy_curve([0.5, 0.6], [0, 1], [0.99])
        assert pt.coverage == 0.0 and pt.accuracy is None

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=50), st.integers(0, 2**31))
    def test_coverage_non_increasing(self, p, seed):
        y = np.random.default_rng(seed).integers(0, 2, size=len(p))
        cov = [pt.coverage for pt in coverage_accuracy_curve(p, y)]
        assert all(b <= a for a, b in zip(cov, cov[1:]))

    def test_grid(self):
        t = default_thresholds()
        assert t[0] == 0.5 and t[-1] == 0.995 and 0.97 in t and len(t) == 100
        with pytest.raises(ConfigError):
            coverage_accuracy_curve([0.5], [1], [0.4])
        with pytest.raises(ConfigError):
            coverage_accuracy_curve([0.5], [1], [0.9, 0.6])
        curve = coverage_accuracy_curve([0.5], [1])
        assert curve_point_at(curve, 0.97).threshold == 0.97


class TestPartition:
    def _stream(self, shapes):
        orders, labels = [], []
        for i, lines in enumerate(shapes):
            oid = f"o{i}"
            orders.append(Order(oid, (0, 0), tuple(OrderLine(f"I{j}", q) for j, q in enumerate(lines))))
            labels.append(SplitLabel(oid, int(len(lines) > 2), 1 + int(len(lines) > 2), 0.0))
        return orders, labels

    def test_all_single(self):
        o, l = self._stream([[1], [1], [1]])
        single, multi, s = single_item_partition(o, l)
        assert len(single) == 3 and multi == [] and not s.evaluation_possible

    def test_multi_unit_line_is_multi(self):
        o, l = self._stream([[3]])
        _, multi, _ = single_item_partition(o, l)
        assert len(multi) == 1
        single, _, _ = single_item_partition(o, l, "one_line")
        assert len(single) == 1

    def test_shares_sum_to_one(self):
        o, l = self._stream([[1], [1, 1], [1, 1, 1], [2, 1, 1], [1]])
        _, _, s = single_item_partition(o, l)
        assert s.single_share + s.multi_split_share + s.multi_no_split_share == pytest.approx(1.0)
        assert s.evaluation_possible and s.n_multi_split == 2

    def test_misaligned(self):
        o, l = self._stream([[1]])
        with pytest.raises(ShapeError):
            single_item_partition(o, [SplitLabel("other", 0, 1, 0.0)])

    def test_unknown_criterion(self):
        o, l = self._stream([[1]])
        with pytest.raises(ConfigError):
            single_item_partition(o, l, "one_item")


class TestFolds:
    @given(st.integers(0, 2**31), st.integers(10, 200), st.integers(2, 10), st.floats(0.05, 0.95))
    def test_partition_properties(self, seed, n, k, rate):
        rng = np.random.default_rng(seed)
        y = (rng.random(n) < rate).astype(int)
        if n < k:
            return
        folds = stratified_folds(y, k, np.random.default_rng(seed))
        allidx = np.concatenate(folds)
        assert sorted(allidx.tolist()) == list(range(n))
        sizes = [len(f) for f in folds]
        assert max(sizes) - min(sizes) <= 1
        for cls in (0, 1):
            expected = (y == cls).sum() / k
            for f in folds:
                assert abs((y[f] == cls).sum() - expected) <= 1

    def test_too_few_examples(self):
        with pytest.raises(StratificationError):
            stratified_folds(np.array([0, 1]), 3, np.random.default_rng(0))

    def test_outer_splits_disjoint(self):
        y = np.array([0, 1] * 25)
        splits = outer_splits(y, 2, 5, 9)
        assert len(splits) == 10
        for s in splits:
            assert np.intersect1d(s.train, s.test).size == 0
            assert len(s.train) + len(s.test) == 50

    def test_checksum(self):
        assert index_checksum([3, 1, 2]) == index_checksum(np.array([1, 2, 3]))
        assert index_checksum([1, 2]) != index_checksum([1, 3])


class TestNestedCV:
    def _cfg(self, **kw):
        base = dict(n_repeats=2, n_outer_folds=3, n_inner_folds=3, seed=5, grid=TINY_GRID)
        base.update(kw)
        return CVConfig(**base)

    def test_shape_and_audit(self):
        X, y = random_xy(3, n=120, p=26)
        cfg = self._cfg()
        rep = nested_cv(X, cfg, y=y)
        assert set(rep.models) == {"LogisticL1", "DecisionTree", "LogitBoost", "Ensemble"}
        for m in rep.models.values():
            assert len(m.cells) == 6
            assert len(m.curve) == len(cfg.thresholds)
        expected = outer_splits(y, 2, 3, 5)
        assert len(rep.splits) == 6
        for audit, s in zip(rep.splits, expected):
            assert audit.train_checksum == index_checksum(s.train)
            assert audit.test_checksum == index_checksum(s.test)
            assert audit.inner_union_checksum == audit.train_checksum

    def test_constant_baseline(self):
        rng = np.random.default_rng(4)
        y = (rng.random(90) < 0.3).astype(int)
        X = rng.normal(size=(90, 26))
        rep = nested_cv(X, self._cfg(model_kinds=("Constant",), n_repeats=1), y=y)
        cells = rep.models["Constant"].cells
        # pooled over folds, the constant predictor's loss is close to the base-rate entropy
        assert np.mean([c.log_loss for c in cells]) == pytest.approx(constant_prediction_entropy(y), abs=0.01)
        for c in cells:
            assert c.accuracy == pytest.approx(max(np.mean(y), 1 - np.mean(y)), abs=0.05)

    def test_deterministic(self):
        X, y = random_xy(5, n=90, p=26)
        a = nested_cv(X, self._cfg(), y=y).to_json()
        b = nested_cv(X, self._cfg(), y=y).to_json()
        assert a == b

    def test_report_roundtrip(self):
        X, y = random_xy(6, n=60, p=26)
        rep = nested_cv(X, self._cfg(n_repeats=1, model_kinds=("DecisionTree",)), y=y)
        back = EvalReport.from_dict(rep.to_dict())
        assert back.to_json() == rep.to_json()
        row = rep.metrics_table()[0]
        assert row[0] == "DecisionTree" and 0 <= row[1] <= 1

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            CVConfig(n_outer_folds=1)
        with pytest.raises(ConfigError):
            CVConfig(model_kinds=("LogisticL1", "Ensemble"))
        with pytest.raises(ConfigError):
            CVConfig(selection_metric="AUC")
        with pytest.raises(ConfigError):
            HyperParamGrid(min_leaf=())
        with pytest.raises(ConfigError):
            nested_cv(np.zeros((20, 26)), self._cfg(model_kinds=("Magic",)), y=np.array([0, 1] * 10))
        assert CVConfig.from_dict(CVConfig().to_dict()) == CVConfig()

    def test_single_class_outer_split(self):
        y = np.zeros(30, dtype=int)
        y[0] = 1
        with pytest.raises(StratificationError):
            nested_cv(np.random.default_rng(0).normal(size=(30, 26)), self._cfg(), y=y)
