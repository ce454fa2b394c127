"""A model that ignores its input; used as a baseline and for protocol tests."""
from __future__ import annotations

import numpy as np

from splitshort.models.base import SplitModel, Standardization, as_xy


class ConstantModel(SplitModel):
    kind = "Constant"

    def __init__(self, probability: float, **common):
        super().__init__(**common)
        if not 0.0 <= probability <= 1.0:
            raise ValueError("probability must lie in [0, 1]")
        self.probability = float(probability)

    def _raw_proba(self, X):
        return np.full(len(X), self.probability)

    def _importances(self):
        return np.zeros(self.n_features)

    def _params_to_dict(self):
        return {"probability": self.probability}

    @classmethod
    def _from_parts(cls, params, **common):
        return cls(params["probability"], **common)


def constant_model(probability: float, n_features: int | None = None, **common) -> ConstantModel:
    if n_features is not None:
        common.setdefault("standardization", Standardization.identity(n_features))
        common.setdefault("feature_names", tuple(f"x{j}" for j in range(n_features)))
    else:
        from splitshort.features import CATALOG
        common.setdefault("standardization", Standardization.identity(len(CATALOG)))
    return ConstantModel(probability, **common)


def train_base_rate(data, y=None, **common) -> ConstantModel:
    """Predict the training base rate for every input."""
    X, y = as_xy(data, y)
    rate = float(y.mean()) if len(y) else 0.5
    common.setdefault("standardization", Standardization.identity(X.shape[1]))
    return ConstantModel(rate, hyperparameters={}, metadata={"fitted": "base_rate"}, **common)
