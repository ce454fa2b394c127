"""Per-order routing: trivial bypass, confident no-split shortcut, or the full solver."""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from splitshort.domain import Assignment, FulfillmentNetwork, Order
from splitshort.errors import ConfigError, InferenceError, SplitShortError
from splitshort.features import CATALOG, extract_features
from splitshort.models.base import SplitModel, Standardization
from splitshort.optimizer import (
    CandidateSet,
    OptimizerConfig,
    candidate_nodes,
    scan_single_nodes,
    solve,
)


class Route(str, enum.Enum):
    TrivialNoSplit = "TrivialNoSplit"
    ShortcutNoSplit = "ShortcutNoSplit"
    FullOptimizer = "FullOptimizer"
    ShortcutFallback = "ShortcutFallback"


@dataclass(frozen=True)
class RouterConfig:
    threshold: float = 0.97
    model_path: str | None = None
    trivial_bypass: bool = True

    def __post_init__(self):
        if not 0.5 <= self.threshold <= 1.0:
            raise ConfigError("router.threshold", f"must lie in [0.5, 1], got {self.threshold!r}")

    def to_dict(self):
        return {"threshold": self.threshold, "model_path": self.model_path, "trivial_bypass": self.trivial_bypass}

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"threshold", "model_path", "trivial_bypass"}
        if unknown:
            raise ConfigError("router", f"unknown fields {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class RoutingOutcome:
    order_id: str
    route: Route
    assignment: Assignment
    predicted_p_split: float | None
    decide_cost_units: int
    regret: float | None = None


def route_order(order: Order, network: FulfillmentNetwork, model: SplitModel | None,
                config: RouterConfig, opt_config: OptimizerConfig | None = None,
                candidates: CandidateSet | None = None) -> RoutingOutcome:
    """Decide one order.

    ``decide_cost_units`` counts candidate-node cost evaluations: one per
    candidate for the single-node scan, the solver's own count otherwise
    (a fallback pays for both).
    """
    opt_config = opt_config or OptimizerConfig()
    if candidates is None:
        candidates = candidate_nodes(order, network, opt_config)
    if config.trivial_bypass and order.is_single_item:
        a = scan_single_nodes(order, network, candidates, opt_config.w_clearance)
        if a is not None:
            return RoutingOutcome(order.order_id, Route.TrivialNoSplit, a, None, len(candidates))
        # a single unit always fits at one node when the order is feasible at all
        res = solve(order, network, opt_config, candidates)
        return RoutingOutcome(order.order_id, Route.ShortcutFallback, res.assignment, None,
                              len(candidates) + res.evaluations)
    if model is None:
        raise InferenceError("a model is required for non-trivial orders")
    fv = extract_features(order, network, candidates, opt_config.w_clearance)
    if fv.catalog_version != model.catalog_version:
        raise InferenceError(f"feature catalog {fv.catalog_version} does not match model {model.catalog_version}")
    p_split = float(model.predict_proba(np.array(fv.values))[0])
    if 1.0 - p_split >= config.threshold:
        a = scan_single_nodes(order, network, candidates, opt_config.w_clearance)
        if a is not None:
            return RoutingOutcome(order.order_id, Route.ShortcutNoSplit, a, p_split, len(candidates))
        res = solve(order, network, opt_config, candidates)
        return RoutingOutcome(order.order_id, Route.ShortcutFallback, res.assignment, p_split,
                              len(candidates) + res.evaluations)
    res = solve(order, network, opt_config, candidates)
    return RoutingOutcome(order.order_id, Route.FullOptimizer, res.assignment, p_split, res.evaluations)


@dataclass
class StreamSummary:
    n_orders: int
    n_errors: int
    route_counts: dict[str, int]
    route_fractions: dict[str, float]
    optimizer_invocations_avoided: int
    decide_cost_units: int
    counterfactual_cost_units: int | None
    wall_time_s: float
    n_multi_item: int
    multi_item_shortcut_coverage: float | None
    shortcut_error_rate: float | None = None
    total_regret: float | None = None
    mean_regret: float | None = None
    errors: list[dict] = field(default_factory=list)

    def to_dict(self, include_timing: bool = True):
        d = dict(self.__dict__)
        if not include_timing:
            d.pop("wall_time_s")
        return d


def simulate_stream(orders: Sequence[Order], network: FulfillmentNetwork, model: SplitModel | None,
                    config: RouterConfig, opt_config: OptimizerConfig | None = None,
                    with_ground_truth: bool = False) -> tuple[list[RoutingOutcome], StreamSummary]:
    """Route every order in input order; per-order failures are tallied, not raised.

    With ``with_ground_truth`` every order is also solved exactly, which gives
    the regret of each decision and the all-solver counterfactual work.
    """
    opt_config = opt_config or OptimizerConfig()
    outcomes: list[RoutingOutcome] = []
    errors = []
    counterfactual = 0
    shortcut_wrong = 0
    n_shortcut = 0
    n_multi = 0
    multi_shortcut = 0
    t0 = time.perf_counter()
    for order in orders:
        try:
            candidates = candidate_nodes(order, network, opt_config)
            out = route_order(order, network, model, config, opt_config, candidates)
            if with_ground_truth:
                truth = solve(order, network, opt_config, candidates)
                counterfactual += truth.evaluations
                regret = out.assignment.objective - truth.assignment.objective
                out = RoutingOutcome(out.order_id, out.route, out.assignment, out.predicted_p_split,
                                     out.decide_cost_units, regret)
                if out.route is Route.ShortcutNoSplit and truth.assignment.nodes_used > 1:
                    shortcut_wrong += 1
        except SplitShortError as exc:
            rec = exc.to_record()
            rec.setdefault("order_id", order.order_id)
            errors.append(rec)
            continue
        outcomes.append(out)
        if out.route is Route.ShortcutNoSplit:
            n_shortcut += 1
        if not order.is_single_item:
            n_multi += 1
            multi_shortcut += out.route is Route.ShortcutNoSplit
    wall = time.perf_counter() - t0
    counts = {r.value: 0 for r in Route}
    for o in outcomes:
        counts[o.route.value] += 1
    n = len(outcomes)
    summary = StreamSummary(
        n_orders=len(orders),
        n_errors=len(errors),
        route_counts=counts,
        route_fractions={k: (v / n if n else 0.0) for k, v in counts.items()},
        optimizer_invocations_avoided=counts[Route.TrivialNoSplit.value] + counts[Route.ShortcutNoSplit.value],
        decide_cost_units=int(sum(o.decide_cost_units for o in outcomes)),
        counterfactual_cost_units=counterfactual if with_ground_truth else None,
        wall_time_s=wall,
        n_multi_item=n_multi,
        multi_item_shortcut_coverage=(multi_shortcut / n_multi) if n_multi else None,
        errors=errors,
    )
    if with_ground_truth:
        total = float(sum(o.regret for o in outcomes))
        summary.shortcut_error_rate = shortcut_wrong / n_shortcut if n_shortcut else 0.0
        summary.total_regret = total
        summary.mean_regret = total / n if n else 0.0
    return outcomes, summary


class OracleLabelModel(SplitModel):
    """Looks up the true label of each order by feature row; a test fixture for routing.

    Built from (feature vector, label) pairs; rows not seen at build time raise.
    """

    kind = "OracleLabel"

    def __init__(self, table: dict[tuple[float, ...], int], **common):
        common.setdefault("standardization", Standardization.identity(len(CATALOG)))
        super().__init__(**common)
        self.table = dict(table)

    @classmethod
    def from_pairs(cls, vectors, labels) -> "OracleLabelModel":
        table = {}
        for v, l in zip(vectors, labels):
            key = tuple(v.values)
            if table.get(key, l.y) != l.y:
                raise ValueError(f"conflicting labels for identical features ({v.order_id})")
            table[key] = l.y
        return cls(table)

    def _raw_proba(self, X):
        try:
            return np.array([float(self.table[tuple(float(v) for v in row)]) for row in X])
        except KeyError:
            raise InferenceError("oracle model queried on an unseen feature vector") from None

    def _importances(self):
        return np.zeros(self.n_features)

    def _params_to_dict(self):
        return {"rows": [[list(k), v] for k, v in sorted(self.table.items())]}

    @classmethod
    def _from_parts(cls, params, **common):
        return cls({tuple(k): v for k, v in params["rows"]}, **common)
