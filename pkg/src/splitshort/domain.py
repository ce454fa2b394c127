"""Domain values: catalog, nodes, network, orders, assignments, and cost primitives.

Everything here is an immutable value. Lookups on :class:`FulfillmentNetwork`
are cached lazily; the cached tables are derived data and never mutate the
public fields.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, NamedTuple, Sequence


class NodeKind(str, enum.Enum):
    STORE = "Store"
    FULFILLMENT_CENTER = "FulfillmentCenter"


@dataclass(frozen=True)
class ItemCatalogEntry:
    item_id: str
    weight: float
    price: float
    sfs_eligible: bool


@dataclass(frozen=True)
class Node:
    node_id: str
    kind: NodeKind
    location: tuple[float, float]
    fixed_shipment_cost: float
    unit_rate: float

    @property
    def is_store(self) -> bool:
        return self.kind is NodeKind.STORE


@dataclass(frozen=True)
class FulfillmentNetwork:
    """Items, nodes and the sparse (item, node) inventory/clearance tables.

    ``clearance_saving`` keys are a subset of ``inventory`` keys; a missing
    key means zero saving.
    """

    catalog: tuple[ItemCatalogEntry, ...] = ()
    nodes: tuple[Node, ...] = ()
    inventory: Mapping[tuple[str, str], int] = field(default_factory=dict)
    clearance_saving: Mapping[tuple[str, str], float] = field(default_factory=dict)

    @cached_property
    def items_by_id(self) -> dict[str, ItemCatalogEntry]:
        return {it.item_id: it for it in self.catalog}

    @cached_property
    def nodes_by_id(self) -> dict[str, Node]:
        return {n.node_id: n for n in self.nodes}

    @cached_property
    def stock_by_item(self) -> dict[str, dict[str, int]]:
        """item_id -> {node_id: units} restricted to positive stock."""
        table: dict[str, dict[str, int]] = {}
        for (item_id, node_id), units in self.inventory.items():
            if units > 0:
                table.setdefault(item_id, {})[node_id] = units
        return table

    def stock(self, item_id: str, node_id: str) -> int:
        return self.inventory.get((item_id, node_id), 0)

    def saving(self, item_id: str, node_id: str) -> float:
        return self.clearance_saving.get((item_id, node_id), 0.0)


class OrderLine(NamedTuple):
    item_id: str
    quantity: int


@dataclass(frozen=True)
class Order:
    order_id: str
    destination: tuple[float, float]
    lines: tuple[OrderLine, ...]

    @property
    def total_quantity(self) -> int:
        return sum(line.quantity for line in self.lines)

    @property
    def is_single_item(self) -> bool:
        """One line with quantity one: the only shape that can never split."""
        return len(self.lines) == 1 and self.lines[0].quantity == 1


class Allocation(NamedTuple):
    item_id: str
    node_id: str
    quantity: int


@dataclass(frozen=True)
class Assignment:
    allocations: tuple[Allocation, ...]
    objective: float
    shipping_cost: float
    clearance_savings_total: float
    nodes_used: int

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(sorted({a.node_id for a in self.allocations}))

    @property
    def is_split(self) -> bool:
        return self.nodes_used > 1


@dataclass(frozen=True)
class SplitLabel:
    order_id: str
    y: int
    nodes_used: int
    objective: float


class Violation(NamedTuple):
    code: str
    detail: str


def shipping_distance(node: Node, destination: Sequence[float]) -> float:
    return math.hypot(node.location[0] - destination[0], node.location[1] - destination[1])


def shipment_cost(node: Node, destination: Sequence[float], total_weight: float) -> float:
    """Cost of one shipment of ``total_weight`` from ``node``; the fixed part is paid once."""
    if total_weight < 0:
        raise ValueError("total_weight must be >= 0")
    return node.fixed_shipment_cost + node.unit_rate * total_weight * shipping_distance(node, destination)


def validate_network(network: FulfillmentNetwork) -> list[Violation]:
    out: list[Violation] = []
    seen_items: set[str] = set()
    for it in network.catalog:
        if it.item_id in seen_items:
            out.append(Violation("DUPLICATE_ITEM_ID", it.item_id))
        seen_items.add(it.item_id)
        if not it.weight > 0:
            out.append(Violation("NONPOSITIVE_WEIGHT", it.item_id))
        if not it.price >= 0:
            out.append(Violation("NEGATIVE_PRICE", it.item_id))
    seen_nodes: set[str] = set()
    for n in network.nodes:
        if n.node_id in seen_nodes:
            out.append(Violation("DUPLICATE_NODE_ID", n.node_id))
        seen_nodes.add(n.node_id)
        if not (n.fixed_shipment_cost >= 0 and n.unit_rate >= 0):
            out.append(Violation("NEGATIVE_COST", n.node_id))

    items = network.items_by_id
    nodes = network.nodes_by_id
    for (item_id, node_id), units in sorted(network.inventory.items()):
        key = f"{item_id}@{node_id}"
        if item_id not in items or node_id not in nodes:
            out.append(Violation("DANGLING_INVENTORY_REF", key))
            continue
        if not isinstance(units, int) or units < 0:
            out.append(Violation("INVALID_INVENTORY", key))
            continue
        if units > 0 and nodes[node_id].is_store and not items[item_id].sfs_eligible:
            out.append(Violation("STORE_STOCKS_NON_SFS", key))
    for (item_id, node_id), saving in sorted(network.clearance_saving.items()):
        key = f"{item_id}@{node_id}"
        if item_id not in items or node_id not in nodes:
            out.append(Violation("DANGLING_CLEARANCE_REF", key))
        elif (item_id, node_id) not in network.inventory:
            out.append(Violation("CLEARANCE_WITHOUT_INVENTORY", key))
        if not saving >= 0:
            out.append(Violation("NEGATIVE_SAVING", key))
    return out


def validate_order(order: Order, network: FulfillmentNetwork) -> list[Violation]:
    out: list[Violation] = []
    if not order.lines:
        out.append(Violation("EMPTY_ORDER", order.order_id))
    seen: set[str] = set()
    for line in order.lines:
        if line.item_id in seen:
            out.append(Violation("DUPLICATE_LINE_ITEM", line.item_id))
        seen.add(line.item_id)
        if line.item_id not in network.items_by_id:
            out.append(Violation("UNKNOWN_ITEM", line.item_id))
        if not (isinstance(line.quantity, int) and line.quantity >= 1):
            out.append(Violation("NONPOSITIVE_QUANTITY", line.item_id))
    return out


def evaluate_allocations(
    order: Order,
    network: FulfillmentNetwork,
    allocations: Sequence[Allocation],
    w_clearance: float,
) -> Assignment:
    """Build an :class:`Assignment` with costs computed in canonical order.

    Every solver path funnels through here so equal allocations always get
    bit-identical objectives: allocations sorted by (line position, node_id),
    shipping summed over node_ids ascending.
    """
    pos = {line.item_id: i for i, line in enumerate(order.lines)}
    allocs = tuple(sorted((a for a in allocations if a.quantity > 0),
                          key=lambda a: (pos.get(a.item_id, len(pos)), a.node_id)))
    weights: dict[str, float] = {}
    for a in allocs:
        weights[a.node_id] = weights.get(a.node_id, 0.0) + a.quantity * network.items_by_id[a.item_id].weight
    shipping = 0.0
    for node_id in sorted(weights):
        shipping += shipment_cost(network.nodes_by_id[node_id], order.destination, weights[node_id])
    clearance = 0.0
    for a in allocs:
        clearance += a.quantity * network.saving(a.item_id, a.node_id)
    return Assignment(
        allocations=allocs,
        objective=shipping - w_clearance * clearance,
        shipping_cost=shipping,
        clearance_savings_total=clearance,
        nodes_used=len(weights),
    )


def check_assignment(
    order: Order,
    network: FulfillmentNetwork,
    assignment: Assignment,
    w_clearance: float,
) -> list[Violation]:
    """Re-verify every Assignment invariant without trusting the producer."""
    out: list[Violation] = []
    ordered = {line.item_id: line.quantity for line in order.lines}
    got: dict[str, int] = {}
    for a in assignment.allocations:
        if a.quantity < 1:
            out.append(Violation("NONPOSITIVE_ALLOCATION", f"{a.item_id}@{a.node_id}"))
        if a.item_id not in ordered:
            out.append(Violation("UNORDERED_ITEM", a.item_id))
        if a.quantity > network.stock(a.item_id, a.node_id):
            out.append(Violation("EXCEEDS_INVENTORY", f"{a.item_id}@{a.node_id}"))
        got[a.item_id] = got.get(a.item_id, 0) + a.quantity
    for item_id, qty in ordered.items():
        if got.get(item_id, 0) != qty:
            out.append(Violation("QUANTITY_MISMATCH", item_id))
    used = {a.node_id for a in assignment.allocations if a.quantity > 0}
    if assignment.nodes_used != len(used):
        out.append(Violation("NODES_USED_MISMATCH", str(assignment.nodes_used)))
    if not out:
        ref = evaluate_allocations(order, network, assignment.allocations, w_clearance)
        if ref.objective != assignment.objective:
            out.append(Violation("OBJECTIVE_MISMATCH", f"{assignment.objective!r} != {ref.objective!r}"))
        expected = assignment.shipping_cost - w_clearance * assignment.clearance_savings_total
        if expected != assignment.objective:
            out.append(Violation("OBJECTIVE_DECOMPOSITION", repr(expected)))
    return out
