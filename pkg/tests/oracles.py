"""Independent reference implementations used as test oracles.

Nothing here calls the subset search. The allocation enumerator walks every
integer allocation of every line over the candidate nodes, so it is only
usable on small instances.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from splitshort.domain import (
    Allocation,
    FulfillmentNetwork,
    ItemCatalogEntry,
    Node,
    NodeKind,
    Order,
    OrderLine,
    evaluate_allocations,
)
from splitshort.optimizer import assignment_rank


def compositions(total, caps):
    """All vectors x with 0 <= x[k] <= caps[k] and sum(x) == total."""
    if not caps:
        if total == 0:
            yield ()
        return
    head, rest = caps[0], caps[1:]
    room = sum(rest)
    for x in range(min(head, total), -1, -1):
        if total - x <= room:
            for tail in compositions(total - x, rest):
                yield (x,) + tail


def _raw_objective(order, network, node_ids, combo, w_clearance):
    # plain re-derivation of the cost model, no shared code with the solver
    weight = {}
    saving = 0.0
    for line, dist in zip(order.lines, combo):
        item = network.items_by_id[line.item_id]
        for nid, q in zip(node_ids, dist):
            if q:
                weight[nid] = weight.get(nid, 0.0) + q * item.weight
                saving += q * network.clearance_saving.get((line.item_id, nid), 0.0)
    ship = 0.0
    for nid, wgt in weight.items():
        node = network.nodes_by_id[nid]
        dx = node.location[0] - order.destination[0]
        dy = node.location[1] - order.destination[1]
        ship += node.fixed_shipment_cost + node.unit_rate * wgt * math.sqrt(dx * dx + dy * dy)
    return ship - w_clearance * saving, len(weight)


def brute_force_optima(order: Order, network: FulfillmentNetwork, node_ids, w_clearance=1.0,
                       max_nodes=None, rel_tol=1e-9):
    """Every allocation within ``rel_tol`` of the optimum, re-costed canonically.

    Returns the list of assignments sorted by the solver's tie-break rank,
    or an empty list when nothing is feasible.
    """
    node_ids = tuple(node_ids)
    per_line = []
    for line in order.lines:
        caps = tuple(network.inventory.get((line.item_id, n), 0) for n in node_ids)
        per_line.append(list(compositions(line.quantity, caps)))
    scored = []
    for combo in itertools.product(*per_line):
        obj, used = _raw_objective(order, network, node_ids, combo, w_clearance)
        if max_nodes is not None and used > max_nodes:
            continue
        scored.append((obj, combo))
    if not scored:
        return []
    best = min(s[0] for s in scored)
    near = [c for o, c in scored if o <= best + rel_tol * (1.0 + abs(best))]
    out = []
    for combo in near:
        allocs = [Allocation(line.item_id, nid, q)
                  for line, dist in zip(order.lines, combo) for nid, q in zip(node_ids, dist) if q]
        out.append(evaluate_allocations(order, network, allocs, w_clearance))
    out.sort(key=assignment_rank)
    return out


def brute_force_single_node(order, network, node_ids, w_clearance=1.0):
    """Cheapest node able to ship the whole order alone, by plain scan."""
    best = None
    for nid in node_ids:
        if all(network.inventory.get((l.item_id, nid), 0) >= l.quantity for l in order.lines):
            combo = tuple(tuple(l.quantity if n == nid else 0 for n in node_ids) for l in order.lines)
            obj, _ = _raw_objective(order, network, node_ids, combo, w_clearance)
            if best is None or (obj, nid) < best:
                best = (obj, nid)
    return best


def random_instance(seed: int, max_nodes: int = 12, max_lines: int = 4, max_total_qty: int = 6,
                    min_nodes: int = 1):
    """A small random network plus one feasible order over it."""
    rng = np.random.default_rng([20231, seed])
    n_nodes = int(rng.integers(min_nodes, max_nodes + 1))
    n_lines = int(rng.integers(1, max_lines + 1))
    n_items = n_lines + int(rng.integers(0, 3))
    catalog = tuple(
        ItemCatalogEntry(f"I{i}", float(rng.uniform(0.2, 3.0)), float(rng.uniform(1, 50)), bool(rng.random() < 0.7))
        for i in range(n_items))
    nodes = tuple(
        Node(f"N{k:02d}", NodeKind.STORE if rng.random() < 0.7 else NodeKind.FULFILLMENT_CENTER,
             (float(rng.uniform(0, 20)), float(rng.uniform(0, 20))),
             float(rng.uniform(1, 8)), float(rng.uniform(0.02, 0.6)))
        for k in range(n_nodes))
    # quantities: start at one per line, spread the remainder at random
    qty = [1] * n_lines
    extra = int(rng.integers(0, max_total_qty - n_lines + 1))
    for _ in range(extra):
        qty[int(rng.integers(n_lines))] += 1
    chosen = rng.choice(n_items, size=n_lines, replace=False)
    inventory, clearance = {}, {}
    for it in catalog:
        for n in nodes:
            if n.is_store and not it.sfs_eligible:
                continue
            if rng.random() < 0.55:
                inventory[(it.item_id, n.node_id)] = int(rng.integers(1, 4))
                if n.is_store and rng.random() < 0.35:
                    clearance[(it.item_id, n.node_id)] = float(rng.uniform(0, 4))
    lines = []
    for j, i in enumerate(chosen):
        it = catalog[int(i)]
        have = sum(v for (a, _), v in inventory.items() if a == it.item_id)
        if have < qty[j]:
            # top up one node that may legally hold the item
            legal = [n for n in nodes if not (n.is_store and not it.sfs_eligible)]
            if not legal:
                n = nodes[0]
                nodes = tuple(Node(x.node_id, NodeKind.FULFILLMENT_CENTER, x.location, x.fixed_shipment_cost,
                                   x.unit_rate) if x.node_id == n.node_id else x for x in nodes)
                for key in [k for k in clearance if k[1] == n.node_id]:
                    del clearance[key]
                legal = [nodes[0]]
            n = legal[int(rng.integers(len(legal)))]
            key = (it.item_id, n.node_id)
            inventory[key] = inventory.get(key, 0) + qty[j] - have
        lines.append(OrderLine(it.item_id, qty[j]))
    network = FulfillmentNetwork(catalog, nodes, inventory, clearance)
    order = Order(f"O{seed}", (float(rng.uniform(0, 20)), float(rng.uniform(0, 20))), tuple(lines))
    return network, order


def numeric_gradient(f, x, h=1e-6):
    """Central differences, one coordinate at a time."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def reference_l1_logistic(Xs, y, lam):
    """Solve the same L1 logistic objective with scipy's L-BFGS-B.

    Uses the positive/negative split w = u - v with u, v >= 0, which turns
    the non-smooth penalty into a linear term.
    """
    from scipy.optimize import minimize
    from scipy.special import expit

    n, p = Xs.shape

    def fun(z):
        u, v, b = z[:p], z[p:2 * p], z[-1]
        w = u - v
        s = Xs @ w + b
        loss = np.mean(np.logaddexp(0.0, s) - y * s)
        r = (expit(s) - y) / n
        gw = Xs.T @ r
        g = np.concatenate([gw + lam, -gw + lam, [r.sum()]])
        return loss + lam * (u.sum() + v.sum()), g

    bounds = [(0, None)] * (2 * p) + [(None, None)]
    res = minimize(fun, np.zeros(2 * p + 1), jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"maxiter": 20000, "ftol": 1e-15, "gtol": 1e-12})
    z = res.x
    return z[:p] - z[p:2 * p], float(z[-1]), float(res.fun)
