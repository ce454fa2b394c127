"""CART classification tree with Gini splits and Laplace-smoothed leaves."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from splitshort import kernels
from splitshort.models.base import SplitModel, Standardization, as_xy


class DecisionTreeModel(SplitModel):
    kind = "DecisionTree"

    def __init__(self, feature, threshold, left, right, n_samples, n_pos, gain, **common):
        super().__init__(**common)
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.n_samples = np.asarray(n_samples, dtype=np.int64)
        self.n_pos = np.asarray(n_pos, dtype=np.int64)
        self.gain = np.asarray(gain, dtype=np.float64)

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def leaf_probability(self) -> np.ndarray:
        return (self.n_pos + 1.0) / (self.n_samples + 2.0)

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] < 0

    def leaf_count(self) -> int:
        return int(np.sum(self.feature < 0))

    def depth(self) -> int:
        best = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if not self.is_leaf(node):
                stack.append((int(self.left[node]), d + 1))
                stack.append((int(self.right[node]), d + 1))
        return best

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[node] >= 0
        while active.any():
            r = rows[active]
            nd = node[r]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def _raw_proba(self, X):
        return self.leaf_probability[self.apply(X)]

    def _importances(self):
        imp = np.zeros(self.n_features)
        internal = self.feature >= 0
        np.add.at(imp, self.feature[internal], self.gain[internal])
        return imp

    def _params_to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(v) for v in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "n_samples": self.n_samples.tolist(),
            "n_pos": self.n_pos.tolist(),
            "gain": [float(v) for v in self.gain],
        }

    @classmethod
    def _from_parts(cls, params, **common):
        keys = ("feature", "threshold", "left", "right", "n_samples", "n_pos", "gain")
        lengths = {len(params[k]) for k in keys}
        if len(lengths) != 1:
            raise ValueError("tree arrays differ in length")
        return cls(*(params[k] for k in keys), **common)


def presort(X: np.ndarray) -> np.ndarray:
    """Per-feature sample order (ties by index), shape (p, n)."""
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int64))


def train_decision_tree(data, min_leaf: int, y=None, **common) -> DecisionTreeModel:
    """Grow a CART tree.

    A node becomes a leaf when it is pure, holds fewer than ``2 * min_leaf``
    samples, or has no admissible split. The best Gini split is taken even
    when its gain is zero, so with ``min_leaf=1`` any consistent training set
    is fitted exactly.
    """
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    X, y = as_xy(data, y)
    n, p = X.shape
    feature, threshold, left, right, n_samples, n_pos, gain = [], [], [], [], [], [], []

    def new_node(m, pos):
        for arr, v in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1),
                       (n_samples, m), (n_pos, pos), (gain, 0.0)):
            arr.append(v)
        return len(feature) - 1

    if n == 0:
        new_node(0, 0)
    else:
        goes_left = np.zeros(n, dtype=bool)
        root_sidx = presort(X)
        root = new_node(n, int(y.sum()))
        stack = [(root, root_sidx)]
        while stack:
            node, sidx = stack.pop()
            m = sidx.shape[1]
            pos = n_pos[node]
            if pos == 0 or pos == m or m < 2 * min_leaf:
                continue
            f, thr, g, n_left = kernels.gini_best_split(X, y, sidx, min_leaf)
            if f < 0:
                continue
            members = sidx[0]
            goes_left[members] = X[members, f] <= thr
            lm = goes_left[sidx]
            l_sidx = np.ascontiguousarray(sidx[lm].reshape(p, n_left))
            r_sidx = np.ascontiguousarray(sidx[~lm].reshape(p, m - n_left))
            feature[node] = int(f)
            threshold[node] = float(thr)
            gain[node] = float(g)
            l_node = new_node(n_left, int(y[l_sidx[0]].sum()))
            r_node = new_node(m - n_left, int(y[r_sidx[0]].sum()))
            left[node] = l_node
            right[node] = r_node
            # right pushed first so the left subtree is numbered first
            stack.append((r_node, r_sidx))
            stack.append((l_node, l_sidx))

    common.setdefault("standardization", Standardization.fit(X) if n else Standardization.identity(p))
    return DecisionTreeModel(feature, threshold, left, right, n_samples, n_pos, gain,
                             hyperparameters={"min_leaf": int(min_leaf)},
                             metadata={"criterion": "gini", "leaf_smoothing": "laplace"}, **common)


class Rule(NamedTuple):
    conditions: tuple[tuple[str, str, float], ...]  # (feature, "<=" | ">", threshold)
    probability: float
    support: int

    def __str__(self):
        if self.conditions:
            cond = " and ".join(f"{f} {op} {t!r}" for f, op, t in self.conditions)
            head = f"if {cond}"
        else:
            head = "always"
        return f"{head} then p_split={self.probability:.6g} (support={self.support})"


def extract_rules(model: DecisionTreeModel) -> list[Rule]:
    """One root-to-leaf rule per leaf, conditions in path order, leaves left to right."""
    if not isinstance(model, DecisionTreeModel):
        raise TypeError(f"rules can only be extracted from a DecisionTree, not {model.kind}")
    rules = []
    probs = model.leaf_probability
    stack = [(0, ())]
    while stack:
        node, conds = stack.pop()
        if model.is_leaf(node):
            rules.append(Rule(conds, float(probs[node]), int(model.n_samples[node])))
            continue
        name = model.feature_names[model.feature[node]]
        thr = float(model.threshold[node])
        stack.append((int(model.right[node]), conds + ((name, ">", thr),)))
        stack.append((int(model.left[node]), conds + ((name, "<=", thr),)))
    return rules
