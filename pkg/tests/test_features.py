import dataclasses
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import two_line_order, two_node_network
from oracles import random_instance
from splitshort import optimizer
from splitshort.domain import FulfillmentNetwork, Order, OrderLine, SplitLabel
from splitshort.errors import CatalogError, ShapeError
from splitshort.features import (
    CATALOG,
    CATALOG_VERSION,
    FeatureVector,
    binned_split_rates,
    extract_features,
    feature_matrix,
)
from splitshort.optimizer import CandidateSet, candidate_nodes


def fx(order, net, **kw):
    return dict(zip(CATALOG.names, extract_features(order, net, candidate_nodes(order, net), **kw).values))


def test_catalog_shape():
    assert len(CATALOG) == 26
    assert len(set(CATALOG.names)) == len(CATALOG)
    assert CATALOG.names[-1] == "no_split_feasible"
    for named in ("total_quantity", "frac_sfs_eligible_lines", "num_candidate_nodes", "frac_nodes_full_inventory",
                  "max_possible_clearance_savings", "max_per_item_clearance_savings_full_inv",
                  "best_no_split_cost_per_item"):
        assert named in CATALOG.names
    with pytest.raises(CatalogError):
        CATALOG.index("nope")


def test_counts_for_single_line():
    net = two_node_network()
    v = fx(Order("o", (0, 0), (OrderLine("A", 2),)), net)
    assert v["num_lines"] == 1.0 and v["total_quantity"] == 2.0


def test_full_inventory_everywhere():
    net = dataclasses.replace(two_node_network(), inventory={("A", "N1"): 1, ("B", "N1"): 1,
                                                             ("A", "N2"): 1, ("B", "N2"): 1})
    assert fx(two_line_order(), net)["frac_nodes_full_inventory"] == 1.0


def test_no_clearance_means_zero_savings():
    v = fx(two_line_order(), two_node_network())
    assert v["max_possible_clearance_savings"] == 0.0
    assert v["max_per_item_clearance_savings_full_inv"] == 0.0


def test_worked_values():
    v = fx(two_line_order(), two_node_network(saving_a_n1=10.0))
    assert v["num_candidate_nodes"] == 2.0
    assert v["frac_nodes_full_inventory"] == 0.5
    assert v["best_no_split_cost"] == 9.0
    assert v["best_no_split_cost_per_item"] == 4.5
    # line A: N1 costs 5 + 1 - 10 = -4; line B: only N2, 5 + 2 = 7
    assert v["sum_min_per_item_cost"] == 3.0
    assert v["split_saving_bound"] == 6.0
    assert v["max_possible_clearance_savings"] == 10.0
    assert v["min_shipping_distance"] == 1.0 and v["mean_shipping_distance"] == 1.5
    assert v["no_split_feasible"] == 1.0
    assert v["frac_sfs_eligible_lines"] == 1.0


def test_sentinel_when_no_single_node():
    net = dataclasses.replace(two_node_network(), inventory={("A", "N1"): 1, ("B", "N2"): 1})
    v = fx(two_line_order(), net)
    # single-node costs ignoring stock: N1 = 5 + 2*1 = 7, N2 = 5 + 2*2 = 9
    assert v["best_no_split_cost"] == 18.0
    assert v["no_split_feasible"] == 0.0


def test_pre_decision_purity(monkeypatch):
    def boom(*a, **k):
        raise AssertionError("feature extraction must not run the solver")
    monkeypatch.setattr(optimizer, "solve", boom)
    monkeypatch.setattr(optimizer, "solve_full", boom)
    net, orders = two_node_network(), [two_line_order()]
    extract_features(orders[0], net, candidate_nodes(orders[0], net))


def _doubled(net: FulfillmentNetwork) -> FulfillmentNetwork:
    nodes = net.nodes + tuple(dataclasses.replace(n, node_id=n.node_id + "_dup") for n in net.nodes)
    inv = dict(net.inventory)
    inv.update({(i, n + "_dup"): u for (i, n), u in net.inventory.items()})
    clr = dict(net.clearance_saving)
    clr.update({(i, n + "_dup"): s for (i, n), s in net.clearance_saving.items()})
    return FulfillmentNetwork(net.catalog, nodes, inv, clr)


@given(st.integers(0, 10**5))
def test_duplicating_candidates(seed):
    net, o = random_instance(seed)
    c = candidate_nodes(o, net)
    big = _doubled(net)
    c2 = CandidateSet(o.order_id, c.node_ids + tuple(n + "_dup" for n in c.node_ids))
    a = dict(zip(CATALOG.names, extract_features(o, net, c).values))
    b = dict(zip(CATALOG.names, extract_features(o, big, c2).values))
    assert b["frac_nodes_full_inventory"] == pytest.approx(a["frac_nodes_full_inventory"])
    assert b["frac_store_candidates"] == pytest.approx(a["frac_store_candidates"])
    assert b["num_candidate_nodes"] == 2 * a["num_candidate_nodes"]


@given(st.integers(0, 10**5))
def test_finite_and_deterministic(seed):
    net, o = random_instance(seed)
    c = candidate_nodes(o, net)
    v = extract_features(o, net, c)
    assert len(v.values) == len(CATALOG)
    assert all(math.isfinite(x) for x in v.values)
    assert v == extract_features(o, net, c)
    assert v.catalog_version == CATALOG_VERSION


def test_feature_matrix_checks_catalog():
    with pytest.raises(CatalogError):
        feature_matrix([FeatureVector("a", (0.0,) * len(CATALOG), "fx-0")])
    assert feature_matrix([]).shape == (0, len(CATALOG))


def _vec(oid, value):
    vals = [0.0] * len(CATALOG)
    vals[CATALOG.index("num_lines")] = value
    return FeatureVector(oid, tuple(vals))


class TestBinnedRates:
    def test_all_negative(self):
        feats = [_vec(str(i), float(i)) for i in range(10)]
        labels = [SplitLabel(str(i), 0, 1, 0.0) for i in range(10)]
        for b in binned_split_rates(feats, labels, "num_lines", 4):
            assert b.count == 0 or b.split_fraction == 0.0

    def test_one_bin_is_global_rate(self):
        feats = [_vec(str(i), float(i)) for i in range(8)]
        labels = [SplitLabel(str(i), int(i % 4 == 0), 1, 0.0) for i in range(8)]
        (b,) = binned_split_rates(feats, labels, "num_lines", 1)
        assert b.count == 8 and b.split_fraction == 0.25

    def test_two_points_two_bins(self):
        feats = [_vec("a", 0.0), _vec("b", 1.0)]
        labels = [SplitLabel("a", 0, 1, 0.0), SplitLabel("b", 1, 2, 0.0)]
        assert [b.split_fraction for b in binned_split_rates(feats, labels, "num_lines", 2)] == [0.0, 1.0]

    def test_empty_bin_marked_absent(self):
        feats = [_vec("a", 0.0), _vec("b", 3.0)]
        labels = [SplitLabel("a", 0, 1, 0.0), SplitLabel("b", 1, 2, 0.0)]
        bins = binned_split_rates(feats, labels, "num_lines", 3)
        assert bins[1].count == 0 and bins[1].split_fraction is None

    def test_errors(self):
        feats = [_vec("a", 0.0)]
        with pytest.raises(CatalogError):
            binned_split_rates(feats, [SplitLabel("a", 0, 1, 0.0)], "colour", 2)
        with pytest.raises(ShapeError):
            binned_split_rates(feats, [SplitLabel("zz", 0, 1, 0.0)], "num_lines", 2)
