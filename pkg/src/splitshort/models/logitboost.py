"""Two-class LogitBoost with weighted least-squares stumps.

Convention: ``p = sigmoid(2F)`` with ``y* in {0, 1}``. Each iteration fits a
stump ``f`` to the working responses and applies ``F <- F + step * f / 2``
(the Newton step for this parameterization), where ``step`` starts at the
shrinkage and is halved until the training log loss does not increase.
Clipping ``z`` can make the fitted stump point uphill; when no step helps,
the stump is refitted on unclipped (weight-floored) Newton responses.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from splitshort import kernels
from splitshort.models.base import EPS, SplitModel, Standardization, as_xy, require_both_classes
from splitshort.models.tree import presort

W_FLOOR = 1e-6
Z_CLIP = 4.0
DEFAULT_SHRINKAGE = 0.1
MAX_HALVINGS = 20


def _loss(F: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(expit(2.0 * F), EPS, 1.0 - EPS)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log1p(-p)))


def _line_search(F, y, go_left, lv, rv, shrinkage, prev_loss, resid):
    """Halve the step until the loss does not increase; ``loss is None`` on failure.

    ``resid`` is ``y - p``; a direction with non-negative slope is rejected
    without evaluating any step.
    """
    slope = -float(np.sum(np.where(go_left, lv, rv) * resid))
    if not slope < 0.0:
        return 0.0, 0.0, None, 0, 0
    step = shrinkage
    for h in range(MAX_HALVINGS + 1):
        a, b = 0.5 * step * lv, 0.5 * step * rv
        loss = _loss(F + np.where(go_left, a, b), y)
        if loss <= prev_loss:
            return a, b, loss, h, 0
        step *= 0.5
    return 0.0, 0.0, None, MAX_HALVINGS, 0


class LogitBoostModel(SplitModel):
    kind = "LogitBoost"

    def __init__(self, f0, features, thresholds, left_values, right_values, gains, **common):
        super().__init__(**common)
        self.f0 = float(f0)
        self.features = np.asarray(features, dtype=np.int64)
        self.thresholds = np.asarray(thresholds, dtype=np.float64)
        self.left_values = np.asarray(left_values, dtype=np.float64)
        self.right_values = np.asarray(right_values, dtype=np.float64)
        self.gains = np.asarray(gains, dtype=np.float64)

    @property
    def n_stumps(self) -> int:
        return len(self.features)

    def decision_function(self, X, n_stumps: int | None = None) -> np.ndarray:
        """Additive score ``F``; ``p = sigmoid(2F)``."""
        X = np.asarray(X, dtype=np.float64)
        k = self.n_stumps if n_stumps is None else n_stumps
        F = np.full(len(X), self.f0)
        for j in range(k):
            f = self.features[j]
            if f < 0:
                F += self.left_values[j]
            else:
                F += np.where(X[:, f] <= self.thresholds[j], self.left_values[j], self.right_values[j])
        return F

    def staged_scores(self, X, stages):
        """Scores after each requested number of stumps (ascending), in one pass."""
        X = np.asarray(X, dtype=np.float64)
        F = np.full(len(X), self.f0)
        out = {}
        done = 0
        for k in sorted(set(stages)):
            if k > self.n_stumps:
                raise ValueError(f"model has only {self.n_stumps} stumps")
            for j in range(done, k):
                f = self.features[j]
                if f < 0:
                    F += self.left_values[j]
                else:
                    F += np.where(X[:, f] <= self.thresholds[j], self.left_values[j], self.right_values[j])
            done = k
            out[k] = F.copy()
        return out

    def _raw_proba(self, X):
        return expit(2.0 * self.decision_function(X))

    def _importances(self):
        imp = np.zeros(self.n_features)
        used = self.features >= 0
        np.add.at(imp, self.features[used], self.gains[used])
        return imp

    def truncated(self, k: int) -> "LogitBoostModel":
        """The model after the first ``k`` iterations (identical to training with ``n_iters=k``)."""
        if not 0 <= k <= self.n_stumps:
            raise ValueError(f"k must be in [0, {self.n_stumps}]")
        common = self._common()
        common["hyperparameters"] = {**self.hyperparameters, "n_iters": int(k)}
        common["metadata"] = {**self.metadata, "train_log_loss": self.metadata.get("train_log_loss", [])[:k + 1]}
        return LogitBoostModel(self.f0, self.features[:k], self.thresholds[:k], self.left_values[:k],
                               self.right_values[:k], self.gains[:k], **common)

    def _params_to_dict(self):
        return {
            "f0": self.f0,
            "features": self.features.tolist(),
            "thresholds": [float(v) for v in self.thresholds],
            "left_values": [float(v) for v in self.left_values],
            "right_values": [float(v) for v in self.right_values],
            "gains": [float(v) for v in self.gains],
        }

    @classmethod
    def _from_parts(cls, params, **common):
        keys = ("features", "thresholds", "left_values", "right_values", "gains")
        if len({len(params[k]) for k in keys}) != 1:
            raise ValueError("stump arrays differ in length")
        return cls(params["f0"], *(params[k] for k in keys), **common)


def train_logitboost(data, n_iters: int, shrinkage: float = DEFAULT_SHRINKAGE, y=None,
                     **common) -> LogitBoostModel:
    """Fit ``n_iters`` boosting rounds.

    Stored stump values already include the step and the factor 1/2, so the
    score is ``f0`` plus the sum of stump outputs. The per-iteration training
    log loss (clamped) is kept in ``metadata["train_log_loss"]``.
    """
    if n_iters < 0:
        raise ValueError("n_iters must be >= 0")
    if not 0.0 < shrinkage <= 1.0:
        raise ValueError("shrinkage must be in (0, 1]")
    X, y = as_xy(data, y)
    require_both_classes(y)
    n, p = X.shape
    yf = y.astype(np.float64)
    ybar = float(yf.mean())
    f0 = 0.5 * float(np.log(ybar / (1.0 - ybar)))
    F = np.full(n, f0)
    sidx = presort(X)
    feats, thrs, lvals, rvals, gains, halvings, fallbacks = [], [], [], [], [], [], []
    losses = [_loss(F, yf)]
    for _ in range(n_iters):
        prob = expit(2.0 * F)
        w = np.maximum(prob * (1.0 - prob), W_FLOOR)
        resid = yf - prob
        z = np.clip(resid / w, -Z_CLIP, Z_CLIP)
        f, thr, lv, rv, gain = kernels.stump_best_split(X, z, w, sidx)
        if f >= 0:
            go_left = X[:, f] <= thr
        else:
            go_left = np.ones(n, dtype=bool)
        a, b, loss, h, fallback = _line_search(F, yf, go_left, lv, rv, shrinkage, losses[-1], resid)
        if loss is None:
            # clipped responses can point uphill; refit the stump on the
            # unclipped Newton responses, which always give a descent direction
            f, thr, lv, rv, gain = kernels.stump_best_split(X, resid / w, w, sidx)
            go_left = X[:, f] <= thr if f >= 0 else np.ones(n, dtype=bool)
            a, b, loss, h2, fallback = _line_search(F, yf, go_left, lv, rv, shrinkage, losses[-1], resid)
            h += h2
            fallback = 1 if loss is not None else 2
            if loss is None:
                a = b = 0.0
                loss = losses[-1]
        F_new = F + np.where(go_left, a, b)
        fallbacks.append(fallback)
        F = F_new
        feats.append(int(f))
        thrs.append(float(thr) if f >= 0 else 0.0)
        lvals.append(float(a))
        rvals.append(float(b))
        gains.append(float(gain) if f >= 0 else 0.0)
        halvings.append(h)
        losses.append(loss)
    common.setdefault("standardization", Standardization.fit(X))
    return LogitBoostModel(
        f0, feats, thrs, lvals, rvals, gains,
        hyperparameters={"n_iters": int(n_iters), "shrinkage": float(shrinkage)},
        metadata={
            "convention": "p=sigmoid(2F), F += step*stump/2",
            "weight_floor": W_FLOOR,
            "z_clip": Z_CLIP,
            "step_halvings": halvings,
            "fallbacks": fallbacks,
            "train_log_loss": losses,
        },
        **common,
    )
