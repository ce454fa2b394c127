"""Seeded synthetic fulfillment networks and order streams.

Defaults are calibrated so that labeled streams resemble a peak-season
ship-from-store sample: ~3.1 lines per order, ~30% single-item orders and
roughly two thirds of multi-item orders left unsplit by the optimizer.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Sequence

import numpy as np

from splitshort.domain import (
    FulfillmentNetwork,
    ItemCatalogEntry,
    Node,
    NodeKind,
    Order,
    OrderLine,
)
from splitshort.errors import ConfigError, GenerationError, InfeasibleOrderError
from splitshort.optimizer import OptimizerConfig, candidate_nodes, scan_single_nodes, solve

MAX_REDRAWS = 100


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 42
    n_nodes: int = 120
    store_fraction: float = 0.95
    n_items: int = 400
    sfs_eligible_fraction: float = 0.58
    n_orders: int = 10000
    items_per_order_mean: float = 3.1
    single_item_order_fraction: float = 0.301
    inventory_density: float = 0.12
    inventory_level_range: tuple[int, int] = (1, 3)
    clearance_probability: float = 0.25
    clearance_saving_range: tuple[float, float] = (0.5, 6.0)
    fixed_cost_range: tuple[float, float] = (4.0, 8.5)
    unit_rate_range: tuple[float, float] = (0.01, 0.03)
    plane_size: float = 100.0
    quantity_distribution: tuple[float, ...] = (0.8, 0.15, 0.05)
    # fulfillment centers stock non-SFS items too, so they get their own knobs
    fc_inventory_density: float = 0.9
    fc_inventory_level_range: tuple[int, int] = (5, 40)
    weight_range: tuple[float, float] = (0.2, 5.0)
    price_range: tuple[float, float] = (5.0, 100.0)
    max_lines: int = 15

    def __post_init__(self):
        for name in ("store_fraction", "sfs_eligible_fraction", "single_item_order_fraction",
                     "inventory_density", "clearance_probability", "fc_inventory_density"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(name, f"must lie in [0, 1], got {v!r}")
        for name in ("n_nodes", "n_items", "n_orders", "max_lines"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")
        for name in ("inventory_level_range", "clearance_saving_range", "fixed_cost_range",
                     "unit_rate_range", "fc_inventory_level_range", "weight_range", "price_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(name, "min must be <= max")
        if min(self.inventory_level_range) < 0 or min(self.fc_inventory_level_range) < 0:
            raise ConfigError("inventory_level_range", "levels must be >= 0")
        if self.weight_range[0] <= 0:
            raise ConfigError("weight_range", "weights must be > 0")
        if min(self.clearance_saving_range) < 0 or min(self.fixed_cost_range) < 0 or min(self.unit_rate_range) < 0:
            raise ConfigError("fixed_cost_range", "costs and savings must be >= 0")
        if not self.items_per_order_mean > 0:
            raise ConfigError("items_per_order_mean", "must be > 0")
        if self.items_per_order_mean > self.max_lines:
            raise ConfigError("items_per_order_mean", f"cannot exceed max_lines={self.max_lines}")
        if self.plane_size <= 0:
            raise ConfigError("plane_size", "must be > 0")
        q = self.quantity_distribution
        if not q or any(m < 0 for m in q) or sum(q) <= 0:
            raise ConfigError("quantity_distribution", "masses must be >= 0 with positive total")

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(key, "unknown generator field")
            kwargs[key] = tuple(value) if isinstance(value, list) else value
        return cls(**kwargs)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def generate_network(config: GeneratorConfig) -> FulfillmentNetwork:
    rng = np.random.default_rng([config.seed, 0])
    n_stores = _round_half_up(config.n_nodes * config.store_fraction)
    n_stores = min(n_stores, config.n_nodes)
    n_sfs = _round_half_up(config.n_items * config.sfs_eligible_fraction)

    sfs_flags = np.zeros(config.n_items, dtype=bool)
    sfs_flags[rng.permutation(config.n_items)[:n_sfs]] = True
    weights = rng.uniform(*config.weight_range, size=config.n_items)
    prices = rng.uniform(*config.price_range, size=config.n_items)
    catalog = tuple(
        ItemCatalogEntry(f"I{i:05d}", float(weights[i]), float(prices[i]), bool(sfs_flags[i]))
        for i in range(config.n_items)
    )

    is_store = np.zeros(config.n_nodes, dtype=bool)
    is_store[rng.permutation(config.n_nodes)[:n_stores]] = True
    locs = rng.uniform(0.0, config.plane_size, size=(config.n_nodes, 2))
    fixed = rng.uniform(*config.fixed_cost_range, size=config.n_nodes)
    rates = rng.uniform(*config.unit_rate_range, size=config.n_nodes)
    nodes = tuple(
        Node(
            f"N{j:04d}",
            NodeKind.STORE if is_store[j] else NodeKind.FULFILLMENT_CENTER,
            (float(locs[j, 0]), float(locs[j, 1])),
            float(fixed[j]),
            float(rates[j]),
        )
        for j in range(config.n_nodes)
    )

    draw = rng.random((config.n_items, config.n_nodes))
    store_lv = rng.integers(config.inventory_level_range[0], config.inventory_level_range[1] + 1,
                            size=(config.n_items, config.n_nodes))
    fc_lv = rng.integers(config.fc_inventory_level_range[0], config.fc_inventory_level_range[1] + 1,
                         size=(config.n_items, config.n_nodes))
    clear_draw = rng.random((config.n_items, config.n_nodes))
    clear_amt = rng.uniform(*config.clearance_saving_range, size=(config.n_items, config.n_nodes))

    inventory: dict[tuple[str, str], int] = {}
    clearance: dict[tuple[str, str], float] = {}
    for i, item in enumerate(catalog):
        for j, node in enumerate(nodes):
            if is_store[j]:
                if not item.sfs_eligible or draw[i, j] >= config.inventory_density:
                    continue
                units = int(store_lv[i, j])
            else:
                if draw[i, j] >= config.fc_inventory_density:
                    continue
                units = int(fc_lv[i, j])
            if units <= 0:
                continue
            inventory[(item.item_id, node.node_id)] = units
            # savings model slow-moving store stock only
            if is_store[j] and clear_draw[i, j] < config.clearance_probability:
                clearance[(item.item_id, node.node_id)] = float(clear_amt[i, j])
    return FulfillmentNetwork(catalog, nodes, inventory, clearance)


def line_count_pmf(config: GeneratorConfig) -> np.ndarray:
    """Line-count pmf over 1..max_lines for orders that are not single-item.

    Single-item orders are placed exactly (one line each); the rest follow a
    truncated shifted geometric whose ratio is solved so the overall mean
    number of lines equals ``items_per_order_mean``.
    """
    s = config.single_item_order_fraction
    K = config.max_lines
    support = np.arange(1, K + 1, dtype=np.float64)
    if s >= 1.0:
        target = 1.0
    else:
        target = (config.items_per_order_mean - s) / (1.0 - s)
    if target <= 1.0 or K == 1:
        pmf = np.zeros(K)
        pmf[0] = 1.0
        return pmf
    if target >= K:
        raise ConfigError("items_per_order_mean", "not attainable with the single-item share and max_lines")

    def mean_for(ratio):
        w = ratio ** (support - 1.0)
        return float((w * support).sum() / w.sum())

    lo, hi = 0.0, 1.0
    while mean_for(hi) < target:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mean_for(mid) < target:
            lo = mid
        else:
            hi = mid
    w = hi ** (support - 1.0)
    return w / w.sum()


def _draw_order(rng, config, order_id, single, line_pmf, qty_pmf, qty_pmf_multi) -> Order:
    dest = (float(rng.uniform(0.0, config.plane_size)), float(rng.uniform(0.0, config.plane_size)))
    if single:
        n_lines = 1
    else:
        n_lines = int(rng.choice(len(line_pmf), p=line_pmf)) + 1
    n_lines = min(n_lines, config.n_items)
    items = rng.choice(config.n_items, size=n_lines, replace=False)
    if single:
        qtys = [1]
    elif n_lines == 1 and qty_pmf_multi is not None:
        qtys = [int(rng.choice(len(qty_pmf_multi), p=qty_pmf_multi)) + 1]
    else:
        qtys = [int(q) + 1 for q in rng.choice(len(qty_pmf), size=n_lines, p=qty_pmf)]
    lines = tuple(OrderLine(f"I{int(i):05d}", q) for i, q in zip(items, qtys))
    return Order(order_id, dest, lines)


def is_fulfillable(order: Order, network: FulfillmentNetwork, opt_config: OptimizerConfig) -> bool:
    try:
        cands = candidate_nodes(order, network, opt_config)
        if scan_single_nodes(order, network, cands, opt_config.w_clearance) is not None:
            return True
        solve(order, network, opt_config, cands)
        return True
    except InfeasibleOrderError:
        return False


def generate_orders(config: GeneratorConfig, network: FulfillmentNetwork,
                    opt_config: OptimizerConfig | None = None) -> list[Order]:
    """Exactly ``n_orders`` feasible orders; the single-item count is exact.

    Infeasible draws are redrawn up to 100 times before giving up.
    """
    opt_config = opt_config or OptimizerConfig()
    if not network.catalog:
        raise GenerationError("network has no items")
    rng = np.random.default_rng([config.seed, 1])
    n = config.n_orders
    n_single = min(_round_half_up(n * config.single_item_order_fraction), n)
    single_flags = np.zeros(n, dtype=bool)
    single_flags[rng.permutation(n)[:n_single]] = True
    line_pmf = line_count_pmf(config)
    q = np.asarray(config.quantity_distribution, dtype=np.float64)
    qty_pmf = q / q.sum()
    qty_pmf_multi = None
    if q[1:].sum() > 0:
        qm = q.copy()
        qm[0] = 0.0
        qty_pmf_multi = qm / qm.sum()

    orders = []
    for idx in range(n):
        order_id = f"O{idx:06d}"
        for _ in range(MAX_REDRAWS):
            order = _draw_order(rng, config, order_id, bool(single_flags[idx]), line_pmf, qty_pmf, qty_pmf_multi)
            if is_fulfillable(order, network, opt_config):
                break
        else:
            raise GenerationError(f"order {order_id}: no feasible draw after {MAX_REDRAWS} attempts",
                                  order_id=order_id)
        orders.append(order)
    return orders


def single_item_share(orders: Sequence[Order]) -> float:
    return sum(o.is_single_item for o in orders) / len(orders) if orders else 0.0
