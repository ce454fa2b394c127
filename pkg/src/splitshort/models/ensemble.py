"""Unweighted probability averaging over member models."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from splitshort.errors import CompositionError
from splitshort.models.base import SplitModel, Standardization

DEFAULT_MEMBER_KINDS = ("DecisionTree", "LogitBoost")


class EnsembleModel(SplitModel):
    kind = "Ensemble"

    def __init__(self, members: Sequence[SplitModel], **common):
        super().__init__(**common)
        self.members = tuple(members)

    def _raw_proba(self, X):
        # members clamp individually; the mean of clamped values stays in range
        total = np.zeros(len(X))
        for m in self.members:
            total += m.predict_proba(X)
        return total / len(self.members)

    def _importances(self):
        return np.mean([m.normalized_importances() for m in self.members], axis=0)

    def normalized_importances(self):
        # mean of normalized member importances already sums to 1 (or 0)
        return np.maximum(self._importances(), 0.0)

    def _params_to_dict(self):
        return {"mixing": "mean", "members": [m.to_dict() for m in self.members]}

    @classmethod
    def _from_parts(cls, params, **common):
        if params.get("mixing", "mean") != "mean":
            raise ValueError(f"unsupported mixing {params['mixing']!r}")
        members = [SplitModel.from_dict(d) for d in params["members"]]
        if not members:
            raise ValueError("ensemble without members")
        return cls(members, **common)


def train_ensemble(members: Sequence[SplitModel]) -> EnsembleModel:
    members = list(members)
    if not members:
        raise CompositionError("an ensemble needs at least one member")
    first = members[0]
    for m in members[1:]:
        if m.catalog_version != first.catalog_version or m.feature_names != first.feature_names:
            raise CompositionError(
                f"member catalogs differ: {first.catalog_version} vs {m.catalog_version}")
    return EnsembleModel(
        members,
        standardization=Standardization.identity(first.n_features),
        hyperparameters={"members": [m.kind for m in members]},
        catalog_version=first.catalog_version,
        feature_names=first.feature_names,
    )
