import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import two_line_order, two_node_network
from oracles import random_instance
from splitshort.domain import Order, OrderLine
from splitshort.errors import ConfigError, InferenceError
from splitshort.features import extract_features
from splitshort.models import constant_model, dumps_model, loads_model
from splitshort.optimizer import OptimizerConfig, candidate_nodes, label_orders, solve, solve_full
from splitshort.router import OracleLabelModel, Route, RouterConfig, route_order, simulate_stream


@pytest.fixture(scope="module")
def world_with_oracle(small_world):
    net, orders = small_world
    orders = orders[:250]
    labels = label_orders(orders, net)
    vecs = [extract_features(o, net, candidate_nodes(o, net)) for o in orders]
    return net, orders, labels, OracleLabelModel.from_pairs(vecs, labels)


def test_config_validation():
    with pytest.raises(ConfigError):
        RouterConfig(threshold=0.3)
    with pytest.raises(ConfigError):
        RouterConfig.from_dict({"threshold": 0.9, "speed": 3})
    assert RouterConfig.from_dict(RouterConfig(0.9).to_dict()) == RouterConfig(0.9)


def test_confident_no_split_shortcuts():
    out = route_order(two_line_order(), two_node_network(), constant_model(0.02), RouterConfig(0.97))
    assert out.route is Route.ShortcutNoSplit
    assert out.assignment.objective == 9.0
    assert out.decide_cost_units <= 2


def test_threshold_one_never_shortcuts():
    out = route_order(two_line_order(), two_node_network(), constant_model(0.0), RouterConfig(1.0))
    assert out.route is Route.FullOptimizer


def test_single_item_bypass_needs_no_model():
    o = Order("s", (0, 0), (OrderLine("A", 1),))
    out = route_order(o, two_node_network(), None, RouterConfig())
    assert out.route is Route.TrivialNoSplit and out.predicted_p_split is None
    with pytest.raises(InferenceError):
        route_order(two_line_order(), two_node_network(), None, RouterConfig())


def test_fallback_when_no_single_node():
    net = dataclasses.replace(two_node_network(), inventory={("A", "N1"): 1, ("B", "N2"): 1})
    out = route_order(two_line_order(), net, constant_model(0.0), RouterConfig(0.6))
    assert out.route is Route.ShortcutFallback
    assert out.assignment == solve_full(two_line_order(), net)


def test_catalog_mismatch_is_tallied():
    bad = loads_model(dumps_model(constant_model(0.1)).replace('"fx-1"', '"fx-0"'))
    outs, summary = simulate_stream([two_line_order()], two_node_network(), bad, RouterConfig())
    assert outs == [] and summary.n_errors == 1
    assert summary.errors[0]["code"] == "INFERENCE_ERROR" and summary.errors[0]["order_id"] == "O1"


def test_always_split_model(world_with_oracle):
    net, orders, _, _ = world_with_oracle
    outs, s = simulate_stream(orders, net, constant_model(1.0), RouterConfig(0.97), with_ground_truth=True)
    assert s.route_counts["ShortcutNoSplit"] == 0
    assert s.total_regret == 0.0
    assert s.multi_item_shortcut_coverage == 0.0


def test_oracle_has_zero_regret(world_with_oracle):
    net, orders, labels, oracle = world_with_oracle
    outs, s = simulate_stream(orders, net, oracle, RouterConfig(0.5), with_ground_truth=True)
    assert s.n_errors == 0
    assert all(o.regret == 0.0 for o in outs)
    assert s.shortcut_error_rate == 0.0
    n_multi_nosplit = sum(1 for o, l in zip(orders, labels) if not o.is_single_item and l.y == 0)
    assert s.route_counts["ShortcutNoSplit"] == n_multi_nosplit


def test_threshold_monotone(world_with_oracle):
    net, orders, _, _ = world_with_oracle
    rng = np.random.default_rng(0)
    noisy = {}
    for o in orders:
        noisy[o.order_id] = float(rng.random())

    sets = []
    for t in (0.6, 0.8, 0.9, 0.97):
        chosen = set()
        for o in orders:
            m = constant_model(noisy[o.order_id])
            if route_order(o, net, m, RouterConfig(t)).route is Route.ShortcutNoSplit:
                chosen.add(o.order_id)
        sets.append(chosen)
    for lo, hi in zip(sets, sets[1:]):
        assert hi <= lo


def test_never_shortcut_equals_solver(world_with_oracle):
    net, orders, _, _ = world_with_oracle
    cfg = RouterConfig(1.0, trivial_bypass=False)
    outs, _ = simulate_stream(orders, net, constant_model(0.0), cfg)
    for o, out in zip(orders, outs):
        assert out.route is Route.FullOptimizer
        assert out.assignment == solve_full(o, net)


@given(st.integers(0, 10**5))
def test_work_accounting(seed):
    net, o = random_instance(seed, min_nodes=2)
    cands = candidate_nodes(o, net)
    short = route_order(o, net, constant_model(0.0), RouterConfig(0.9, trivial_bypass=False), candidates=cands)
    full = route_order(o, net, constant_model(1.0), RouterConfig(0.9, trivial_bypass=False), candidates=cands)
    res = solve(o, net, OptimizerConfig(), cands)
    assert full.decide_cost_units == res.evaluations
    if short.route is Route.ShortcutNoSplit:
        assert short.decide_cost_units <= len(cands)
        if len(cands) >= 2 and len(o.lines) >= 2:
            assert full.decide_cost_units > short.decide_cost_units


def test_summary_counts(world_with_oracle):
    net, orders, _, oracle = world_with_oracle
    outs, s = simulate_stream(orders, net, oracle, RouterConfig(0.97), with_ground_truth=True)
    assert sum(s.route_counts.values()) == len(outs) == s.n_orders
    assert s.counterfactual_cost_units >= s.decide_cost_units
    assert "wall_time_s" not in s.to_dict(include_timing=False)
    assert s.optimizer_invocations_avoided == s.route_counts["TrivialNoSplit"] + s.route_counts["ShortcutNoSplit"]
