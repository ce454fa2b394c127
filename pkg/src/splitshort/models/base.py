"""Shared machinery for split classifiers: data coercion, standardization,
clamped inference and the JSON model file format."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import ClassVar, NamedTuple, Sequence

import numpy as np

from splitshort.atomic import atomic_write_text
from splitshort.errors import DegenerateTrainingError, FormatError, InferenceError, VersionError
from splitshort.features import CATALOG, FeatureVector

EPS = 1e-12
MODEL_FORMAT = "splitshort-model"
MODEL_FORMAT_VERSION = 1


class LabeledExample(NamedTuple):
    order_id: str
    x: tuple[float, ...]
    y: int


def as_xy(data, y=None) -> tuple[np.ndarray, np.ndarray]:
    """Accept either a sequence of LabeledExample or an (X, y) pair."""
    if y is None:
        examples = list(data)
        if not examples:
            return np.zeros((0, len(CATALOG))), np.zeros(0, dtype=np.int64)
        X = np.array([e.x for e in examples], dtype=np.float64)
        y = np.array([e.y for e in examples], dtype=np.int64)
    else:
        X = np.asarray(data, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D with one row per label")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0/1")
    return np.ascontiguousarray(X), y


def require_both_classes(y: np.ndarray) -> None:
    if len(y) < 2 or y.min() == y.max():
        raise DegenerateTrainingError("training data must contain both classes")


def clamp(p):
    return np.clip(p, EPS, 1.0 - EPS)


@dataclass(frozen=True)
class Standardization:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardization":
        if len(X) == 0:
            return cls.identity(X.shape[1])
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        return cls(mean, std)

    @classmethod
    def identity(cls, p: int) -> "Standardization":
        return cls(np.zeros(p), np.ones(p))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std

    def to_dict(self):
        return {"mean": [float(v) for v in self.mean], "std": [float(v) for v in self.std]}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mean"], dtype=np.float64), np.array(d["std"], dtype=np.float64))


class SplitModel:
    """A trained probabilistic classifier for the split label.

    Subclasses implement ``_raw_proba``, ``_importances`` and the parameter
    (de)serialization hooks; outputs are always clamped to [EPS, 1-EPS].
    """

    kind: ClassVar[str] = ""
    registry: ClassVar[dict[str, type["SplitModel"]]] = {}

    def __init_subclass__(cls, **kw):
        super().__init_subclass__(**kw)
        if cls.kind:
            SplitModel.registry[cls.kind] = cls

    def __init__(self, *, standardization: Standardization, hyperparameters: dict | None = None,
                 catalog_version: str = CATALOG.version, feature_names: Sequence[str] | None = None,
                 metadata: dict | None = None):
        self.standardization = standardization
        self.hyperparameters = dict(hyperparameters or {})
        self.catalog_version = catalog_version
        if feature_names is None:
            p = len(standardization.mean)
            feature_names = CATALOG.names if p == len(CATALOG) else tuple(f"x{j}" for j in range(p))
        self.feature_names = tuple(feature_names)
        self.metadata = dict(metadata or {})

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise InferenceError(f"expected {self.n_features} features, got {X.shape[1]}")
        return clamp(self._raw_proba(X))

    def _raw_proba(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _importances(self) -> np.ndarray:
        raise NotImplementedError

    def normalized_importances(self) -> np.ndarray:
        imp = np.maximum(np.asarray(self._importances(), dtype=np.float64), 0.0)
        total = imp.sum()
        return imp / total if total > 0 else np.zeros_like(imp)

    def _params_to_dict(self) -> dict:
        raise NotImplementedError

    @classmethod
    def _from_parts(cls, params: dict, **common) -> "SplitModel":
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "format_version": MODEL_FORMAT_VERSION,
            "kind": self.kind,
            "catalog_version": self.catalog_version,
            "feature_names": list(self.feature_names),
            "hyperparameters": self.hyperparameters,
            "standardization": self.standardization.to_dict(),
            "metadata": self.metadata,
            "parameters": self._params_to_dict(),
        }

    @staticmethod
    def from_dict(d: dict) -> "SplitModel":
        if d.get("format") != MODEL_FORMAT:
            raise FormatError(f"not a model file (format={d.get('format')!r})")
        if d.get("format_version") != MODEL_FORMAT_VERSION:
            raise VersionError(f"model format version {d.get('format_version')!r}, "
                               f"expected {MODEL_FORMAT_VERSION}")
        kind = d.get("kind")
        if kind not in SplitModel.registry:
            raise FormatError(f"unknown model kind {kind!r}")
        try:
            common = dict(
                standardization=Standardization.from_dict(d["standardization"]),
                hyperparameters=d["hyperparameters"],
                catalog_version=d["catalog_version"],
                feature_names=d["feature_names"],
                metadata=d.get("metadata", {}),
            )
            return SplitModel.registry[kind]._from_parts(d["parameters"], **common)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed {kind} model: {exc!r}") from None

    def _common(self) -> dict:
        return dict(standardization=self.standardization, hyperparameters=self.hyperparameters,
                    catalog_version=self.catalog_version, feature_names=self.feature_names,
                    metadata=self.metadata)


def predict(model: SplitModel, x: FeatureVector) -> float:
    if x.catalog_version != model.catalog_version:
        raise InferenceError(f"feature catalog {x.catalog_version} does not match model {model.catalog_version}")
    return float(model.predict_proba(np.array(x.values, dtype=np.float64))[0])


def feature_importance(model: SplitModel) -> list[tuple[str, float]]:
    """(feature, importance) pairs, normalized to sum to 1 (or all 0), descending."""
    imp = model.normalized_importances()
    order = sorted(range(len(imp)), key=lambda j: (-imp[j], j))
    return [(model.feature_names[j], float(imp[j])) for j in order]


def dumps_model(model: SplitModel) -> str:
    return json.dumps(model.to_dict(), indent=1, sort_keys=True) + "\n"


def loads_model(text: str, path=None) -> SplitModel:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, path=path, line=exc.lineno) from None
    if not isinstance(d, dict):
        raise FormatError("model file must hold a JSON object", path=path, line=1)
    return SplitModel.from_dict(d)


def save_model(model: SplitModel, path) -> None:
    atomic_write_text(path, dumps_model(model))


def load_model(path) -> SplitModel:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read(), path=path)
