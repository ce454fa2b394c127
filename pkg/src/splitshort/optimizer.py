"""Exact two-objective fulfillment solver and the single-node linear scan.

The scalarized objective is ``shipping_cost - w_clearance * clearance_savings``.
Given a set of nodes, each node's fixed cost is paid once, so per-unit costs are
additive and the cheapest-first fill of every line is optimal for that set.
The full solver therefore enumerates node subsets (with lower-bound pruning)
and fills greedily inside each subset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from splitshort import kernels
from splitshort.domain import (
    Allocation,
    Assignment,
    FulfillmentNetwork,
    Order,
    SplitLabel,
    evaluate_allocations,
    shipping_distance,
    validate_order,
)
from splitshort.errors import ConfigError, InfeasibleOrderError, InvalidOrderError


@dataclass(frozen=True)
class OptimizerConfig:
    w_clearance: float = 1.0
    candidate_prefilter_k: int = 30
    # None: bounded only by the order's total quantity (no effective limit).
    max_split_nodes: int | None = None

    def __post_init__(self):
        if not self.w_clearance >= 0:
            raise ConfigError("w_clearance", "must be >= 0")
        if self.candidate_prefilter_k < 1:
            raise ConfigError("candidate_prefilter_k", "must be >= 1")
        if self.max_split_nodes is not None and self.max_split_nodes < 1:
            raise ConfigError("max_split_nodes", "must be >= 1")

    def split_limit(self, order: Order) -> int:
        if self.max_split_nodes is None:
            return order.total_quantity
        return self.max_split_nodes


@dataclass(frozen=True)
class CandidateSet:
    order_id: str
    node_ids: tuple[str, ...]

    def __len__(self):
        return len(self.node_ids)


@dataclass(frozen=True)
class SolveResult:
    assignment: Assignment
    evaluations: int
    n_candidates: int


def single_node_objective(order: Order, network: FulfillmentNetwork, node_id: str, w_clearance: float) -> float:
    """Objective of shipping the whole order from one node, ignoring stock.

    Performs the same arithmetic as :func:`evaluate_allocations` on the
    single-node allocation, so the two agree bit for bit.
    """
    node = network.nodes_by_id[node_id]
    weight = 0.0
    clearance = 0.0
    for line in order.lines:
        weight += line.quantity * network.items_by_id[line.item_id].weight
    for line in order.lines:
        clearance += line.quantity * network.saving(line.item_id, node_id)
    shipping = 0.0
    shipping += node.fixed_shipment_cost + node.unit_rate * weight * shipping_distance(node, order.destination)
    return shipping - w_clearance * clearance


def can_fill_alone(order: Order, network: FulfillmentNetwork, node_id: str) -> bool:
    return all(network.stock(line.item_id, node_id) >= line.quantity for line in order.lines)


def _check_order(order: Order, network: FulfillmentNetwork) -> None:
    violations = validate_order(order, network)
    if violations:
        raise InvalidOrderError(order.order_id, violations)


def candidate_nodes(order: Order, network: FulfillmentNetwork, config: OptimizerConfig | None = None) -> CandidateSet:
    """Nodes stocking any ordered item, best first, truncated to ``candidate_prefilter_k``.

    Nodes able to fill the whole order rank first by their single-node
    objective; the rest follow by per-unit-weight shipping rate
    (``unit_rate * distance``). Ties go to the smaller node_id.
    """
    config = config or OptimizerConfig()
    _check_order(order, network)
    stocking: set[str] = set()
    for line in order.lines:
        stocking.update(network.stock_by_item.get(line.item_id, {}))
    if not stocking:
        raise InfeasibleOrderError(order.order_id, "no node stocks any ordered item")
    keyed = []
    for node_id in stocking:
        if can_fill_alone(order, network, node_id):
            keyed.append((0, single_node_objective(order, network, node_id, config.w_clearance), node_id))
        else:
            node = network.nodes_by_id[node_id]
            keyed.append((1, node.unit_rate * shipping_distance(node, order.destination), node_id))
    keyed.sort()
    return CandidateSet(order.order_id, tuple(k[2] for k in keyed[: config.candidate_prefilter_k]))


def _single_node_assignment(order, network, node_id, w_clearance) -> Assignment:
    allocs = [Allocation(line.item_id, node_id, line.quantity) for line in order.lines]
    return evaluate_allocations(order, network, allocs, w_clearance)


def scan_single_nodes(
    order: Order,
    network: FulfillmentNetwork,
    candidates: CandidateSet,
    w_clearance: float,
) -> Assignment | None:
    """One pass over ``candidates``; best node able to fill the order alone, or None."""
    best_key = None
    for node_id in candidates.node_ids:
        if not can_fill_alone(order, network, node_id):
            continue
        key = (single_node_objective(order, network, node_id, w_clearance), node_id)
        if best_key is None or key < best_key:
            best_key = key
    if best_key is None:
        return None
    return _single_node_assignment(order, network, best_key[1], w_clearance)


def solve_no_split(order: Order, network: FulfillmentNetwork, config: OptimizerConfig | None = None,
                   candidates: CandidateSet | None = None) -> Assignment | None:
    """Linear scan for the cheapest single-node assignment.

    Returns None when no candidate can fill the whole order by itself.
    """
    config = config or OptimizerConfig()
    if candidates is None:
        candidates = candidate_nodes(order, network, config)
    return scan_single_nodes(order, network, candidates, config.w_clearance)


class _Problem:
    """Dense per-order arrays fed to the subset search."""

    def __init__(self, order, network, node_ids, w_clearance):
        L, K = len(order.lines), len(node_ids)
        self.node_ids = node_ids
        self.unit_cost = np.full((L, K), math.inf)
        self.inv = np.zeros((L, K), dtype=np.int64)
        self.qty = np.array([line.quantity for line in order.lines], dtype=np.int64)
        self.fixed = np.array([network.nodes_by_id[n].fixed_shipment_cost for n in node_ids], dtype=np.float64)
        self.order = np.full((L, max(K, 1)), -1, dtype=np.int64)
        self.order_len = np.zeros(L, dtype=np.int64)
        self.amort_cost = np.full((L, K), math.inf)
        self.amort_order = np.full((L, max(K, 1)), -1, dtype=np.int64)
        dist = [shipping_distance(network.nodes_by_id[n], order.destination) for n in node_ids]
        for i, line in enumerate(order.lines):
            item = network.items_by_id[line.item_id]
            ranked = []
            for k, node_id in enumerate(node_ids):
                units = network.stock(line.item_id, node_id)
                if units <= 0:
                    continue
                node = network.nodes_by_id[node_id]
                u = node.unit_rate * item.weight * dist[k] - w_clearance * network.saving(line.item_id, node_id)
                self.unit_cost[i, k] = u
                self.inv[i, k] = units
                ranked.append((u, node_id, k))
            ranked.sort()
            self.order_len[i] = len(ranked)
            for r, (_, _, k) in enumerate(ranked):
                self.order[i, r] = k
        # most units node k could ever serve for this order
        total_qty = int(self.qty.sum())
        reach = np.minimum(self.inv, self.qty[:, None]).sum(axis=0)
        for k in range(K):
            cap = min(total_qty, int(reach[k]))
            if cap == 0:
                continue
            share = float(self.fixed[k]) / cap
            for i in range(L):
                if self.inv[i, k] > 0:
                    self.amort_cost[i, k] = float(self.unit_cost[i, k]) + share
        for i in range(L):
            ranked = sorted((float(self.amort_cost[i, k]), node_ids[k], k)
                            for k in range(K) if self.inv[i, k] > 0)
            for r, (_, _, k) in enumerate(ranked):
                self.amort_order[i, r] = k

    def single_node_incumbent(self) -> float:
        best = math.inf
        for k in range(len(self.node_ids)):
            if np.all(self.inv[:, k] >= self.qty):
                total = 0.0
                for i in range(len(self.qty)):
                    total += float(self.unit_cost[i, k]) * int(self.qty[i])
                c = 0.0 + float(self.fixed[k]) + total
                if c < best:
                    best = c
        return best

    def _subset_cost(self, mask) -> tuple[float, int]:
        total = 0.0
        used = 0
        for i in range(len(self.qty)):
            remaining = int(self.qty[i])
            for r in range(int(self.order_len[i])):
                k = int(self.order[i, r])
                if (mask >> k) & 1:
                    take = min(int(self.inv[i, k]), remaining)
                    total += float(self.unit_cost[i, k]) * take
                    used |= 1 << k
                    remaining -= take
                    if remaining == 0:
                        break
            if remaining > 0:
                return math.inf, used
        fixed = 0.0
        for k in range(len(self.node_ids)):
            if (used >> k) & 1:
                fixed += float(self.fixed[k])
        return fixed + total, used

    def drop_heuristic(self, max_nodes: int) -> float:
        """Cost of a feasible subset found by greedy node removal, or inf.

        Only seeds the search bound; it never decides the answer.
        """
        cost, mask = self._subset_cost((1 << len(self.node_ids)) - 1)
        if cost == math.inf:
            return math.inf
        improved = True
        while improved:
            improved = False
            best_drop = None
            for k in range(len(self.node_ids)):
                if (mask >> k) & 1:
                    c, m = self._subset_cost(mask & ~(1 << k))
                    if c < cost and (best_drop is None or c < best_drop[0]):
                        best_drop = (c, m)
            if best_drop is not None:
                cost, mask = best_drop
                improved = True
        if bin(mask).count("1") > max_nodes:
            return math.inf
        return cost

    def greedy_allocations(self, order, mask) -> list[Allocation]:
        allocs = []
        for i, line in enumerate(order.lines):
            remaining = line.quantity
            for r in range(self.order_len[i]):
                k = int(self.order[i, r])
                if (mask >> k) & 1:
                    take = min(int(self.inv[i, k]), remaining)
                    allocs.append(Allocation(line.item_id, self.node_ids[k], take))
                    remaining -= take
                    if remaining == 0:
                        break
        return allocs


def assignment_rank(a: Assignment) -> tuple:
    """Total order on optima: objective, then fewer nodes, then smallest node ids."""
    return (a.objective, a.nodes_used, a.node_ids)


def solve(order: Order, network: FulfillmentNetwork, config: OptimizerConfig | None = None,
          candidates: CandidateSet | None = None) -> SolveResult:
    """Exact solve over the candidate set; also reports the work done.

    ``evaluations`` counts the single-node seeding scan (one per candidate)
    plus every subset visited by the search.
    """
    config = config or OptimizerConfig()
    if candidates is None:
        candidates = candidate_nodes(order, network, config)
    prob = _Problem(order, network, candidates.node_ids, config.w_clearance)
    incumbent = prob.single_node_incumbent()
    if incumbent == math.inf or len(order.lines) > 2:
        incumbent = min(incumbent, prob.drop_heuristic(config.split_limit(order)))
    masks, costs, evals = kernels.bnb_search(
        prob.unit_cost, prob.amort_cost, prob.inv, prob.qty, prob.fixed, prob.order, prob.amort_order,
        prob.order_len,
        config.split_limit(order), incumbent,
    )
    evals += len(candidates)
    if not masks:
        raise InfeasibleOrderError(order.order_id)
    best = min(costs)
    tol = 1e-9 * (1.0 + abs(best))
    chosen = None
    for mask, c in zip(masks, costs):
        if c > best + tol:
            continue
        a = evaluate_allocations(order, network, prob.greedy_allocations(order, mask), config.w_clearance)
        if chosen is None or assignment_rank(a) < assignment_rank(chosen):
            chosen = a
    return SolveResult(chosen, evals, len(candidates))


def solve_full(order: Order, network: FulfillmentNetwork, config: OptimizerConfig | None = None,
               candidates: CandidateSet | None = None) -> Assignment:
    return solve(order, network, config, candidates).assignment


def label_orders(orders: Iterable[Order], network: FulfillmentNetwork,
                 config: OptimizerConfig | None = None) -> list[SplitLabel]:
    """Ground-truth split labels, one per order, in input order."""
    config = config or OptimizerConfig()
    labels = []
    for order in orders:
        a = solve_full(order, network, config)
        labels.append(SplitLabel(order.order_id, int(a.nodes_used > 1), a.nodes_used, a.objective))
    return labels


def label_from_assignment(order_id: str, a: Assignment) -> SplitLabel:
    return SplitLabel(order_id, int(a.nodes_used > 1), a.nodes_used, a.objective)


