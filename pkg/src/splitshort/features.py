"""Order -> fixed-length feature vector, computed before any optimization.

All features are at most linear in (candidate nodes x order lines). The only
cost evaluation used is the single-node scan, never the full solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from splitshort.domain import FulfillmentNetwork, Order, SplitLabel, shipping_distance
from splitshort.errors import CatalogError, ShapeError
from splitshort.optimizer import CandidateSet, can_fill_alone, single_node_objective

CATALOG_VERSION = "fx-1"


class FeatureDescriptor(NamedTuple):
    name: str
    level: str  # order | item-agg | node-agg | item-node-agg
    description: str


@dataclass(frozen=True)
class FeatureCatalog:
    version: str
    features: tuple[FeatureDescriptor, ...]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise CatalogError(f"unknown feature {name!r} in catalog {self.version}") from None

    def __len__(self):
        return len(self.features)


CATALOG = FeatureCatalog(CATALOG_VERSION, (
    FeatureDescriptor("num_lines", "order", "number of order lines"),
    FeatureDescriptor("total_quantity", "order", "total units ordered"),
    FeatureDescriptor("num_distinct_items", "order", "distinct item ids"),
    FeatureDescriptor("total_weight", "order", "sum of quantity x unit weight"),
    FeatureDescriptor("total_price", "order", "sum of quantity x unit price"),
    FeatureDescriptor("frac_sfs_eligible_lines", "order", "share of lines whose item may ship from store"),
    FeatureDescriptor("frac_sfs_eligible_quantity", "order", "share of units that may ship from store"),
    FeatureDescriptor("min_unit_weight", "item-agg", "lightest item"),
    FeatureDescriptor("max_unit_weight", "item-agg", "heaviest item"),
    FeatureDescriptor("mean_unit_weight", "item-agg", "mean item weight over lines"),
    FeatureDescriptor("min_unit_price", "item-agg", "cheapest item"),
    FeatureDescriptor("max_unit_price", "item-agg", "most expensive item"),
    FeatureDescriptor("mean_unit_price", "item-agg", "mean item price over lines"),
    FeatureDescriptor("max_line_quantity", "item-agg", "largest line quantity"),
    FeatureDescriptor("num_candidate_nodes", "node-agg", "size of the candidate set"),
    FeatureDescriptor("frac_store_candidates", "node-agg", "share of candidates that are stores"),
    FeatureDescriptor("min_shipping_distance", "node-agg", "closest candidate to the destination"),
    FeatureDescriptor("mean_shipping_distance", "node-agg", "mean candidate distance"),
    FeatureDescriptor("frac_nodes_full_inventory", "item-node-agg",
                      "share of candidates holding enough stock for every line"),
    FeatureDescriptor("max_possible_clearance_savings", "item-node-agg",
                      "sum over lines of quantity x best per-unit clearance saving"),
    FeatureDescriptor("max_per_item_clearance_savings_full_inv", "item-node-agg",
                      "best whole-order clearance saving per line among full-stock candidates"),
    FeatureDescriptor("best_no_split_cost", "item-node-agg",
                      "cheapest single-node objective (sentinel when none can fill the order)"),
    FeatureDescriptor("best_no_split_cost_per_item", "item-node-agg", "best_no_split_cost / num_lines"),
    FeatureDescriptor("sum_min_per_item_cost", "item-node-agg",
                      "sum over lines of the best node's fixed plus variable cost for that line"),
    FeatureDescriptor("split_saving_bound", "item-node-agg", "best_no_split_cost - sum_min_per_item_cost"),
    FeatureDescriptor("no_split_feasible", "item-node-agg", "1 if some candidate can fill the order alone"),
))


@dataclass(frozen=True)
class FeatureVector:
    order_id: str
    values: tuple[float, ...]
    catalog_version: str = CATALOG_VERSION


def extract_features(order: Order, network: FulfillmentNetwork, candidates: CandidateSet,
                     w_clearance: float = 1.0) -> FeatureVector:
    items = [network.items_by_id[line.item_id] for line in order.lines]
    qtys = [line.quantity for line in order.lines]
    n_lines = len(order.lines)
    total_qty = sum(qtys)
    weights = [it.weight for it in items]
    prices = [it.price for it in items]
    sfs = [it.sfs_eligible for it in items]

    nodes = [network.nodes_by_id[n] for n in candidates.node_ids]
    n_cand = len(nodes)
    dists = [shipping_distance(n, order.destination) for n in nodes]

    full_inv = [can_fill_alone(order, network, n.node_id) for n in nodes]
    single_costs = [single_node_objective(order, network, n.node_id, w_clearance) for n in nodes]
    feasible_costs = [c for c, ok in zip(single_costs, full_inv) if ok]
    if feasible_costs:
        best_ns = min(feasible_costs)
    else:
        best_ns = 2.0 * max((abs(c) for c in single_costs), default=0.0)

    max_clear = 0.0
    sum_min = 0.0
    for line, item in zip(order.lines, items):
        best_saving = 0.0
        best_line_cost = math.inf
        for node, d in zip(nodes, dists):
            if network.stock(line.item_id, node.node_id) <= 0:
                continue
            s = network.saving(line.item_id, node.node_id)
            best_saving = max(best_saving, s)
            unit = node.unit_rate * item.weight * d - w_clearance * s
            best_line_cost = min(best_line_cost, node.fixed_shipment_cost + line.quantity * unit)
        max_clear += best_saving * line.quantity
        sum_min += best_line_cost if best_line_cost != math.inf else 0.0

    max_full_clear = 0.0
    for node, ok in zip(nodes, full_inv):
        if ok:
            s = sum(network.saving(line.item_id, node.node_id) * line.quantity for line in order.lines)
            max_full_clear = max(max_full_clear, s / n_lines)

    values = (
        float(n_lines),
        float(total_qty),
        float(len({line.item_id for line in order.lines})),
        float(sum(q * w for q, w in zip(qtys, weights))),
        float(sum(q * p for q, p in zip(qtys, prices))),
        sum(sfs) / n_lines,
        sum(q for q, e in zip(qtys, sfs) if e) / total_qty,
        min(weights), max(weights), sum(weights) / n_lines,
        min(prices), max(prices), sum(prices) / n_lines,
        float(max(qtys)),
        float(n_cand),
        (sum(n.is_store for n in nodes) / n_cand) if n_cand else 0.0,
        min(dists, default=0.0),
        (sum(dists) / n_cand) if n_cand else 0.0,
        (sum(full_inv) / n_cand) if n_cand else 0.0,
        max_clear,
        max_full_clear,
        best_ns,
        best_ns / n_lines,
        sum_min,
        best_ns - sum_min,
        1.0 if feasible_costs else 0.0,
    )
    return FeatureVector(order.order_id, tuple(float(v) for v in values))


def feature_matrix(vectors: Sequence[FeatureVector], catalog: FeatureCatalog = CATALOG) -> np.ndarray:
    for v in vectors:
        if v.catalog_version != catalog.version:
            raise CatalogError(f"vector {v.order_id} has catalog {v.catalog_version}, expected {catalog.version}")
    if not vectors:
        return np.zeros((0, len(catalog)))
    return np.array([v.values for v in vectors], dtype=np.float64)


class BinRate(NamedTuple):
    lower: float
    upper: float
    count: int
    split_fraction: float | None  # None for empty bins


def binned_split_rates(features: Sequence[FeatureVector], labels: Sequence[SplitLabel], feature_name: str,
                       n_bins: int, catalog: FeatureCatalog = CATALOG) -> list[BinRate]:
    """Equal-width bins over the observed range; empirical split share per bin."""
    j = catalog.index(feature_name)
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if len(features) != len(labels) or any(f.order_id != l.order_id for f, l in zip(features, labels)):
        raise ShapeError("features and labels are not aligned by order_id")
    if not features:
        return []
    x = np.array([f.values[j] for f in features])
    y = np.array([l.y for l in labels])
    lo, hi = float(x.min()), float(x.max())
    width = (hi - lo) / n_bins
    if width > 0:
        idx = np.minimum(((x - lo) / width).astype(np.int64), n_bins - 1)
    else:
        idx = np.zeros(len(x), dtype=np.int64)
    out = []
    for b in range(n_bins):
        sel = idx == b
        count = int(sel.sum())
        upper = hi if b == n_bins - 1 else lo + (b + 1) * width
        out.append(BinRate(lo + b * width, upper, count, float(y[sel].mean()) if count else None))
    return out
