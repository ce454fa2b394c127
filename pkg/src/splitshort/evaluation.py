"""Metrics, confidence curves and the repeated nested cross-validation protocol."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from splitshort.domain import Order, SplitLabel
from splitshort.errors import ConfigError, ShapeError, StratificationError
from splitshort.models.base import EPS, SplitModel, as_xy
from splitshort.models.constant import train_base_rate
from splitshort.models.ensemble import DEFAULT_MEMBER_KINDS, train_ensemble
from splitshort.models.logistic import train_logistic_l1
from splitshort.models.logitboost import DEFAULT_SHRINKAGE, train_logitboost
from splitshort.models.tree import train_decision_tree

REPORT_FORMAT = "splitshort-evalreport"
REPORT_FORMAT_VERSION = 1


# -- metrics ---------------------------------------------------------------

def _aligned(predictions, labels) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predictions, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.int64).ravel()
    if len(p) != len(y):
        raise ShapeError(f"{len(p)} predictions for {len(y)} labels")
    if len(p) == 0:
        raise ShapeError("metrics need at least one example")
    return p, y


def accuracy(predictions, labels) -> float:
    """Share of examples with ``(p > 0.5) == (y == 1)``; p = 0.5 predicts 0."""
    p, y = _aligned(predictions, labels)
    return float(np.mean((p > 0.5) == (y == 1)))


def log_loss(predictions, labels) -> float:
    """Mean negative log-likelihood (natural log) with p clamped to [1e-12, 1 - 1e-12]."""
    p, y = _aligned(predictions, labels)
    p = np.clip(p, EPS, 1.0 - EPS)
    return float(-np.mean(np.where(y == 1, np.log(p), np.log1p(-p))))


class CurvePoint(NamedTuple):
    threshold: float
    coverage: float
    accuracy: float | None  # accuracy on the covered set; None when nothing is covered


def default_thresholds() -> tuple[float, ...]:
    """0.500, 0.505, ..., 0.995 (0.97 is on the grid)."""
    grid = {round(0.5 + 0.005 * k, 3) for k in range(100)}
    grid.add(0.97)
    return tuple(sorted(grid))


def coverage_accuracy_curve(predictions, labels, thresholds: Sequence[float] | None = None) -> list[CurvePoint]:
    """Coverage and accuracy-on-covered when only confident predictions are kept.

    An example is covered at threshold ``t`` when ``max(p, 1 - p) >= t``.
    """
    p, y = _aligned(predictions, labels)
    thresholds = default_thresholds() if thresholds is None else tuple(float(t) for t in thresholds)
    for t in thresholds:
        if not 0.5 <= t <= 1.0:
            raise ConfigError("thresholds", f"threshold {t!r} outside [0.5, 1]")
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise ConfigError("thresholds", "thresholds must be sorted ascending")
    conf = np.maximum(p, 1.0 - p)
    correct = (p > 0.5) == (y == 1)
    n = len(p)
    out = []
    for t in thresholds:
        cov = conf >= t
        k = int(cov.sum())
        out.append(CurvePoint(t, k / n, float(correct[cov].mean()) if k else None))
    return out


def curve_point_at(curve: Sequence[CurvePoint], threshold: float) -> CurvePoint:
    for pt in curve:
        if abs(pt.threshold - threshold) < 1e-12:
            return pt
    raise KeyError(threshold)


# -- single-item partition ---------------------------------------------------

SINGLE_ITEM_CRITERIA = ("one_line_qty_one", "one_line")


def is_single_item(order: Order, criterion: str = "one_line_qty_one") -> bool:
    if criterion == "one_line_qty_one":
        return order.is_single_item
    if criterion == "one_line":
        return len(order.lines) == 1
    raise ConfigError("single_item_criterion", f"unknown criterion {criterion!r}")


@dataclass(frozen=True)
class PartitionSummary:
    n_total: int
    n_single: int
    n_multi: int
    n_multi_split: int
    single_share: float
    multi_split_share: float
    multi_no_split_share: float
    evaluation_possible: bool

    def to_dict(self):
        return dict(self.__dict__)


def single_item_partition(orders: Sequence[Order], labels: Sequence[SplitLabel],
                          criterion: str = "one_line_qty_one"):
    """Split an aligned (orders, labels) stream into single- and multi-item parts.

    Returns ``(single, multi, summary)`` where ``single`` and ``multi`` are lists
    of ``(order, label)`` pairs in input order. Shares are fractions of all
    orders, so the three shares sum to 1.
    """
    if len(orders) != len(labels) or any(o.order_id != l.order_id for o, l in zip(orders, labels)):
        raise ShapeError("orders and labels are not aligned by order_id")
    single, multi = [], []
    for o, l in zip(orders, labels):
        (single if is_single_item(o, criterion) else multi).append((o, l))
    n = len(orders)
    n_split = sum(l.y for _, l in multi)
    ys = {l.y for _, l in multi}
    summary = PartitionSummary(
        n_total=n,
        n_single=len(single),
        n_multi=len(multi),
        n_multi_split=n_split,
        single_share=len(single) / n if n else 0.0,
        multi_split_share=n_split / n if n else 0.0,
        multi_no_split_share=(len(multi) - n_split) / n if n else 0.0,
        evaluation_possible=ys == {0, 1},
    )
    return single, multi, summary


# -- folds -------------------------------------------------------------------

def stratified_folds(y: np.ndarray, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Seeded stratified k-fold partition; returns sorted test-index arrays.

    Each class is shuffled and dealt round-robin, continuing from the fold
    where the previous class stopped, so fold sizes differ by at most one and
    per-class counts per fold differ by at most one.
    """
    y = np.asarray(y)
    if k < 2:
        raise ConfigError("folds", "need at least 2 folds")
    if len(y) < k:
        raise StratificationError(f"{len(y)} examples cannot fill {k} folds")
    buckets: list[list[int]] = [[] for _ in range(k)]
    start = 0
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(len(idx))]
        for j, i in enumerate(idx):
            buckets[(start + j) % k].append(int(i))
        start = (start + len(idx)) % k
    return [np.array(sorted(b), dtype=np.int64) for b in buckets]


def index_checksum(idx) -> str:
    arr = np.sort(np.asarray(idx, dtype=np.int64))
    return hashlib.sha256(arr.astype("<i8").tobytes()).hexdigest()[:16]


class Split(NamedTuple):
    repeat: int
    fold: int
    train: np.ndarray
    test: np.ndarray


def outer_splits(y: np.ndarray, n_repeats: int, n_folds: int, seed: int) -> list[Split]:
    out = []
    for r in range(n_repeats):
        folds = stratified_folds(y, n_folds, np.random.default_rng([seed, r]))
        for f, test in enumerate(folds):
            train = np.concatenate([folds[j] for j in range(n_folds) if j != f])
            out.append(Split(r, f, np.sort(train), test))
    return out


def _require_classes(y: np.ndarray, where: str) -> None:
    if len(y) == 0 or y.min() == y.max():
        raise StratificationError(f"{where} lacks one class")


# -- model kinds and grids ---------------------------------------------------

@dataclass(frozen=True)
class HyperParamGrid:
    # logistic lambda = multiplier x number of training examples
    lambda_multipliers: tuple[float, ...] = (0.001, 0.01, 0.1, 1.0, 10.0)
    min_leaf: tuple[int, ...] = (5, 20, 50, 100)
    n_iters: tuple[int, ...] = (50, 100, 200, 400)

    def __post_init__(self):
        for name in ("lambda_multipliers", "min_leaf", "n_iters"):
            if not getattr(self, name):
                raise ConfigError(f"grid.{name}", "grid must be non-empty")
        if any(v < 0 for v in self.lambda_multipliers):
            raise ConfigError("grid.lambda_multipliers", "lambda must be >= 0")
        if any(v < 1 for v in self.min_leaf):
            raise ConfigError("grid.min_leaf", "must be >= 1")
        if any(v < 0 for v in self.n_iters):
            raise ConfigError("grid.n_iters", "must be >= 0")

    def to_dict(self):
        return {k: list(v) for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: tuple(v) for k, v in d.items()})


class ModelKind(NamedTuple):
    """How to train one model kind over its grid.

    ``fit_grid(X, y, grid)`` returns one model per grid point, in grid order;
    it may share work across points (warm starts, staged boosting).
    ``grid_values(grid)`` lists the grid points as hyperparameter records.
    ``fit_one(X, y, grid, j)`` trains grid point ``j`` alone; when absent,
    ``fit_grid(...)[j]`` is used.
    """
    name: str
    grid_values: Callable[[HyperParamGrid], list[dict]]
    fit_grid: Callable[[np.ndarray, np.ndarray, HyperParamGrid], list[SplitModel]]
    fit_one: Callable[[np.ndarray, np.ndarray, HyperParamGrid, int], SplitModel] | None = None

    def fit_point(self, X, y, grid, j) -> SplitModel:
        if self.fit_one is not None:
            return self.fit_one(X, y, grid, j)
        return self.fit_grid(X, y, grid)[j]


def _fit_logistic_path(X, y, grid):
    n = len(y)
    mults = list(grid.lambda_multipliers)
    models: dict[int, SplitModel] = {}
    warm = None
    # descending lambda path; the sparse solution warm-starts the next point
    for j in sorted(range(len(mults)), key=lambda j: -mults[j]):
        warm = train_logistic_l1(X, mults[j] * n, y=y, warm_start=warm)
        warm.hyperparameters["lambda_multiplier"] = mults[j]
        models[j] = warm
    return [models[j] for j in range(len(mults))]


def _fit_tree_grid(X, y, grid):
    return [train_decision_tree(X, m, y=y) for m in grid.min_leaf]


def _fit_boost_grid(X, y, grid, shrinkage=DEFAULT_SHRINKAGE):
    full = train_logitboost(X, max(grid.n_iters), shrinkage=shrinkage, y=y)
    return [full.truncated(k) for k in grid.n_iters]


def _fit_logistic_one(X, y, grid, j):
    m = train_logistic_l1(X, grid.lambda_multipliers[j] * len(y), y=y)
    m.hyperparameters["lambda_multiplier"] = grid.lambda_multipliers[j]
    return m


def _fit_constant(X, y, grid):
    return [train_base_rate(X, y=y)]


MODEL_KINDS: dict[str, ModelKind] = {
    "LogisticL1": ModelKind("LogisticL1", lambda g: [{"lambda_multiplier": v} for v in g.lambda_multipliers],
                            _fit_logistic_path, _fit_logistic_one),
    "DecisionTree": ModelKind("DecisionTree", lambda g: [{"min_leaf": v} for v in g.min_leaf], _fit_tree_grid,
                              lambda X, y, g, j: train_decision_tree(X, g.min_leaf[j], y=y)),
    "LogitBoost": ModelKind("LogitBoost", lambda g: [{"n_iters": v} for v in g.n_iters], _fit_boost_grid,
                            lambda X, y, g, j: train_logitboost(X, g.n_iters[j], y=y)),
    "Constant": ModelKind("Constant", lambda g: [{}], _fit_constant),
}

ENSEMBLE = "Ensemble"
DEFAULT_KINDS = ("LogisticL1", "DecisionTree", "LogitBoost", ENSEMBLE)


@dataclass(frozen=True)
class CVConfig:
    n_repeats: int = 5
    n_outer_folds: int = 10
    n_inner_folds: int = 10
    seed: int = 42
    grid: HyperParamGrid = field(default_factory=HyperParamGrid)
    selection_metric: str = "LogLoss"
    model_kinds: tuple[str, ...] = DEFAULT_KINDS
    ensemble_members: tuple[str, ...] = DEFAULT_MEMBER_KINDS
    thresholds: tuple[float, ...] = field(default_factory=default_thresholds)

    def __post_init__(self):
        if self.n_repeats < 1:
            raise ConfigError("cv.n_repeats", "must be >= 1")
        if self.n_outer_folds < 2:
            raise ConfigError("cv.n_outer_folds", "must be >= 2")
        if self.n_inner_folds < 2:
            raise ConfigError("cv.n_inner_folds", "must be >= 2")
        if self.selection_metric not in ("LogLoss", "Accuracy"):
            raise ConfigError("cv.selection_metric", "must be LogLoss or Accuracy")
        if not self.model_kinds:
            raise ConfigError("cv.model_kinds", "must be non-empty")
        if ENSEMBLE in self.model_kinds:
            missing = [m for m in self.ensemble_members if m not in self.model_kinds]
            if missing or not self.ensemble_members:
                raise ConfigError("cv.ensemble_members", f"ensemble members must be evaluated kinds: {missing}")
        for t in self.thresholds:
            if not 0.5 <= t <= 1.0:
                raise ConfigError("cv.thresholds", f"threshold {t!r} outside [0.5, 1]")

    def to_dict(self):
        return {
            "n_repeats": self.n_repeats, "n_outer_folds": self.n_outer_folds,
            "n_inner_folds": self.n_inner_folds, "seed": self.seed, "grid": self.grid.to_dict(),
            "selection_metric": self.selection_metric, "model_kinds": list(self.model_kinds),
            "ensemble_members": list(self.ensemble_members), "thresholds": list(self.thresholds),
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "grid" in d:
            d["grid"] = HyperParamGrid.from_dict(d["grid"])
        for k in ("model_kinds", "ensemble_members", "thresholds"):
            if k in d:
                d[k] = tuple(d[k])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError("cv", f"unknown fields {sorted(unknown)}")
        return cls(**d)


# -- report ------------------------------------------------------------------

class CellResult(NamedTuple):
    repeat: int
    fold: int
    accuracy: float
    log_loss: float
    hyperparameters: dict


class SplitAudit(NamedTuple):
    repeat: int
    fold: int
    n_train: int
    n_test: int
    train_checksum: str
    test_checksum: str
    inner_union_checksum: str


@dataclass
class ModelSummary:
    kind: str
    cells: list[CellResult]
    importances: list[tuple[str, float]]
    curve: list[CurvePoint]

    @property
    def accuracy_mean(self) -> float:
        return float(np.mean([c.accuracy for c in self.cells]))

    @property
    def accuracy_std(self) -> float:
        return _std([c.accuracy for c in self.cells])

    @property
    def log_loss_mean(self) -> float:
        return float(np.mean([c.log_loss for c in self.cells]))

    @property
    def log_loss_std(self) -> float:
        return _std([c.log_loss for c in self.cells])

    def to_dict(self):
        return {
            "kind": self.kind,
            "accuracy_mean": self.accuracy_mean, "accuracy_std": self.accuracy_std,
            "log_loss_mean": self.log_loss_mean, "log_loss_std": self.log_loss_std,
            "cells": [c._asdict() for c in self.cells],
            "importances": [[n, v] for n, v in self.importances],
            "curve": [list(pt) for pt in self.curve],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            d["kind"],
            [CellResult(**c) for c in d["cells"]],
            [(n, float(v)) for n, v in d["importances"]],
            [CurvePoint(*pt) for pt in d["curve"]],
        )


def _std(values) -> float:
    """Sample standard deviation (ddof=1); 0 for a single value."""
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


@dataclass
class EvalReport:
    config: dict
    n_examples: int
    n_positive: int
    feature_names: tuple[str, ...]
    models: dict[str, ModelSummary]
    splits: list[SplitAudit]

    def to_dict(self):
        return {
            "format": REPORT_FORMAT,
            "format_version": REPORT_FORMAT_VERSION,
            "config": self.config,
            "n_examples": self.n_examples,
            "n_positive": self.n_positive,
            "feature_names": list(self.feature_names),
            "models": {k: m.to_dict() for k, m in self.models.items()},
            "splits": [s._asdict() for s in self.splits],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        from splitshort.errors import FormatError, VersionError
        if d.get("format") != REPORT_FORMAT:
            raise FormatError(f"not an evaluation report (format={d.get('format')!r})")
        if d.get("format_version") != REPORT_FORMAT_VERSION:
            raise VersionError(f"report format version {d.get('format_version')!r}, expected {REPORT_FORMAT_VERSION}")
        return cls(d["config"], d["n_examples"], d["n_positive"], tuple(d["feature_names"]),
                   {k: ModelSummary.from_dict(m) for k, m in d["models"].items()},
                   [SplitAudit(**s) for s in d["splits"]])

    def metrics_table(self) -> list[tuple[str, float, float, float, float]]:
        return [(k, m.accuracy_mean, m.accuracy_std, m.log_loss_mean, m.log_loss_std)
                for k, m in self.models.items()]


# -- nested CV ---------------------------------------------------------------

def _score(metric: str, p, y) -> float:
    """Lower is better."""
    return log_loss(p, y) if metric == "LogLoss" else -accuracy(p, y)


def select_hyperparameters(kind: ModelKind, X, y, grid: HyperParamGrid, n_folds: int,
                           rng: np.random.Generator, metric: str) -> tuple[int, np.ndarray]:
    """Inner CV over ``X, y`` only; returns (best grid index, union of inner indices)."""
    folds = stratified_folds(y, n_folds, rng)
    n_points = len(kind.grid_values(grid))
    scores = np.zeros(n_points)
    seen = np.zeros(len(y), dtype=bool)
    for f, test in enumerate(folds):
        train = np.concatenate([folds[j] for j in range(n_folds) if j != f])
        _require_classes(y[train], "inner training split")
        seen[test] = True
        models = kind.fit_grid(X[train], y[train], grid)
        for j, m in enumerate(models):
            scores[j] += _score(metric, m.predict_proba(X[test]), y[test])
    # first minimum keeps the earliest grid point on ties
    return int(np.argmin(scores)), np.flatnonzero(seen)


def nested_cv(data, config: CVConfig | None = None, y=None,
              kinds: dict[str, ModelKind] | None = None,
              progress: Callable[[str], None] | None = None) -> EvalReport:
    """Repeated stratified nested cross-validation.

    For every repeat and outer fold, each model kind picks its grid point by
    inner CV on the outer-training split, is refitted on that split and scored
    on the outer-test split. The ensemble averages the fold's refitted member
    models. Deterministic for a fixed ``config.seed``.
    """
    config = config or CVConfig()
    X, y = as_xy(data, y)
    registry = dict(MODEL_KINDS)
    registry.update(kinds or {})
    for k in config.model_kinds:
        if k != ENSEMBLE and k not in registry:
            raise ConfigError("cv.model_kinds", f"unknown model kind {k!r}")
    if len(y) < config.n_outer_folds:
        raise StratificationError(f"{len(y)} examples cannot fill {config.n_outer_folds} folds")
    base_kinds = [k for k in config.model_kinds if k != ENSEMBLE]
    cells: dict[str, list[CellResult]] = {k: [] for k in config.model_kinds}
    imps: dict[str, list[np.ndarray]] = {k: [] for k in config.model_kinds}
    pooled_p: dict[str, list[np.ndarray]] = {k: [] for k in config.model_kinds}
    pooled_y: list[np.ndarray] = []
    audits = []
    feature_names = None

    for split in outer_splits(y, config.n_repeats, config.n_outer_folds, config.seed):
        tr, te = split.train, split.test
        _require_classes(y[tr], f"outer training split (repeat {split.repeat}, fold {split.fold})")
        Xtr, ytr = X[tr], y[tr]
        fold_models = {}
        union_ck = None
        for ki, k in enumerate(base_kinds):
            kind = registry[k]
            rng = np.random.default_rng([config.seed, split.repeat, split.fold, ki])
            best, inner_seen = select_hyperparameters(kind, Xtr, ytr, config.grid, config.n_inner_folds,
                                                      rng, config.selection_metric)
            # inner indices are positions within the outer-training split
            if not np.array_equal(tr[inner_seen], tr):
                raise StratificationError("inner folds do not cover the outer-training split")
            union_ck = index_checksum(tr[inner_seen])
            model = kind.fit_point(Xtr, ytr, config.grid, best)
            fold_models[k] = (model, kind.grid_values(config.grid)[best])
            if progress:
                progress(f"repeat {split.repeat} fold {split.fold} {k} -> {kind.grid_values(config.grid)[best]}")
        if ENSEMBLE in config.model_kinds:
            ens = train_ensemble([fold_models[m][0] for m in config.ensemble_members])
            fold_models[ENSEMBLE] = (ens, {"members": list(config.ensemble_members)})
        for k in config.model_kinds:
            model, hp = fold_models[k]
            feature_names = feature_names or model.feature_names
            p = model.predict_proba(X[te])
            cells[k].append(CellResult(split.repeat, split.fold, accuracy(p, y[te]), log_loss(p, y[te]), hp))
            imps[k].append(model.normalized_importances())
            pooled_p[k].append(p)
        pooled_y.append(y[te])
        audits.append(SplitAudit(split.repeat, split.fold, len(tr), len(te), index_checksum(tr),
                                 index_checksum(te), union_ck or index_checksum(tr)))

    yy = np.concatenate(pooled_y)
    models = {}
    for k in config.model_kinds:
        mean_imp = np.mean(imps[k], axis=0)
        order = sorted(range(len(mean_imp)), key=lambda j: (-mean_imp[j], j))
        models[k] = ModelSummary(
            k, cells[k], [(feature_names[j], float(mean_imp[j])) for j in order],
            coverage_accuracy_curve(np.concatenate(pooled_p[k]), yy, config.thresholds),
        )
    return EvalReport(config.to_dict(), int(len(y)), int(y.sum()), tuple(feature_names), models, audits)


def constant_prediction_entropy(y) -> float:
    """Log loss of predicting the base rate for every example."""
    q = float(np.mean(y))
    if q in (0.0, 1.0):
        return 0.0
    return -(q * math.log(q) + (1 - q) * math.log(1 - q))
