"""Lasso logistic regression fitted by proximal gradient (ISTA) with backtracking.

Minimizes ``sum_i logloss(sigmoid(w . x_i + b), y_i) + lam * ||w||_1`` on
standardized features; the intercept is not penalized.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from splitshort.models.base import SplitModel, Standardization, as_xy, require_both_classes

TOL = 1e-8
MAX_ITER = 10_000


def smooth_objective(w: np.ndarray, b: float, Xs: np.ndarray, y: np.ndarray) -> float:
    z = Xs @ w + b
    return float(np.sum(np.logaddexp(0.0, z) - y * z))


def smooth_gradient(w: np.ndarray, b: float, Xs: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    r = expit(Xs @ w + b) - y
    return Xs.T @ r, float(r.sum())


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def fit_l1_logistic(Xs, y, lam, *, w0=None, b0=None, tol=TOL, max_iter=MAX_ITER):
    """Return ``(w, b, n_iter, objective)`` for standardized design ``Xs``."""
    n, p = Xs.shape
    y = y.astype(np.float64)
    w = np.zeros(p) if w0 is None else np.array(w0, dtype=np.float64)
    if b0 is None:
        ybar = min(max(y.mean(), 1e-12), 1 - 1e-12)
        b = float(np.log(ybar / (1 - ybar)))
    else:
        b = float(b0)
    # safe step from the Lipschitz bound of the summed loss; backtracking refines
    t = 1.0 / (0.25 * (float(np.sum(Xs * Xs)) + n))
    f = smooth_objective(w, b, Xs, y)
    obj = f + lam * float(np.abs(w).sum())
    it = 0
    for it in range(1, max_iter + 1):
        g, gb = smooth_gradient(w, b, Xs, y)
        t *= 2.0
        while True:
            w_new = soft_threshold(w - t * g, t * lam)
            b_new = b - t * gb
            dw = w_new - w
            db = b_new - b
            f_new = smooth_objective(w_new, b_new, Xs, y)
            bound = f + float(g @ dw) + gb * db + (float(dw @ dw) + db * db) / (2.0 * t)
            if f_new <= bound + 1e-12 * (1.0 + abs(f)) or t < 1e-30:
                break
            t *= 0.5
        obj_new = f_new + lam * float(np.abs(w_new).sum())
        decrease = obj - obj_new
        w, b, f, obj = w_new, b_new, f_new, obj_new
        if decrease < tol * (1.0 + abs(obj)):
            break
    return w, b, it, obj


class LogisticL1Model(SplitModel):
    kind = "LogisticL1"

    def __init__(self, weights, intercept, **common):
        super().__init__(**common)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.intercept = float(intercept)

    def decision_function(self, X):
        return self.standardization.transform(np.asarray(X, dtype=np.float64)) @ self.weights + self.intercept

    def _raw_proba(self, X):
        return expit(self.decision_function(X))

    def _importances(self):
        return np.abs(self.weights)

    def _params_to_dict(self):
        return {"weights": [float(v) for v in self.weights], "intercept": self.intercept}

    @classmethod
    def _from_parts(cls, params, **common):
        return cls(params["weights"], params["intercept"], **common)


def train_logistic_l1(data, lam: float, y=None, *, warm_start: LogisticL1Model | None = None,
                      tol: float = TOL, max_iter: int = MAX_ITER, **common) -> LogisticL1Model:
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    X, y = as_xy(data, y)
    require_both_classes(y)
    std = Standardization.fit(X)
    Xs = std.transform(X)
    w0 = b0 = None
    if warm_start is not None:
        w0, b0 = warm_start.weights, warm_start.intercept
    w, b, n_iter, obj = fit_l1_logistic(Xs, y, lam, w0=w0, b0=b0, tol=tol, max_iter=max_iter)
    return LogisticL1Model(
        w, b, standardization=std, hyperparameters={"lambda": float(lam)},
        metadata={"iterations": n_iter, "objective": obj, "solver": "ista-backtracking"},
        **common,
    )
