import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import random_instance
from splitshort.atomic import atomic_write_text
from splitshort.config import RunConfig, default_config, default_config_text
from splitshort.domain import Allocation, SplitLabel
from splitshort.errors import ConfigError, FormatError, VersionError
from splitshort.features import extract_features
from splitshort.formats import (
    dumps_features,
    dumps_labels,
    dumps_orders,
    dumps_outcomes,
    load_network,
    loads_features,
    loads_labels,
    loads_orders,
    loads_outcome_rows,
    loads_table,
    read_text,
    save_network,
)
from splitshort.optimizer import candidate_nodes
from splitshort.router import RouterConfig, route_order
from splitshort.models import constant_model


def test_network_roundtrip(tmp_path, small_world):
    net, _ = small_world
    save_network(net, tmp_path / "net")
    back = load_network(tmp_path / "net")
    assert back.catalog == net.catalog and back.nodes == net.nodes
    assert dict(back.inventory) == dict(net.inventory)
    assert dict(back.clearance_saving) == dict(net.clearance_saving)


def test_orders_roundtrip(small_world):
    _, orders = small_world
    text = dumps_orders(orders)
    assert text.startswith("#splitshort-orders version=1\n")
    assert loads_orders(text) == orders


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(1, 9),
                          st.floats(-1e9, 1e9, allow_nan=False, allow_infinity=False)), max_size=20))
def test_labels_roundtrip(rows):
    labels = [SplitLabel(f"o{i}", y, n, obj) for i, (y, n, obj) in enumerate(rows)]
    assert loads_labels(dumps_labels(labels)) == labels


@given(st.integers(0, 10**5))
def test_features_roundtrip(seed):
    net, o = random_instance(seed)
    v = extract_features(o, net, candidate_nodes(o, net))
    assert loads_features(dumps_features([v])) == [v]


def test_outcomes_rows():
    from helpers import two_line_order, two_node_network
    out = route_order(two_line_order(), two_node_network(), constant_model(0.02), RouterConfig())
    (rec,) = loads_outcome_rows(dumps_outcomes([out]))
    assert rec["route"] == "ShortcutNoSplit" and rec["p_split"] == 0.02 and rec["objective"] == 9.0
    assert rec["allocations"] == "A@N2:1;B@N2:1"
    assert isinstance(out.assignment.allocations[0], Allocation)


def test_version_mismatch_rejected():
    text = dumps_labels([SplitLabel("a", 0, 1, 1.5)]).replace("version=1", "version=2")
    with pytest.raises(VersionError):
        loads_labels(text)


def test_catalog_mismatch_rejected():
    net, o = random_instance(1)
    text = dumps_features([extract_features(o, net, candidate_nodes(o, net))]).replace("catalog=fx-1", "catalog=fx-9")
    with pytest.raises(VersionError):
        loads_features(text)


def test_errors_carry_line_numbers():
    text = "#splitshort-labels version=1\norder_id,y,nodes_used,objective\na,0,1,1.0\nb,7,1,1.0\n"
    with pytest.raises(FormatError) as exc:
        loads_labels(text, path="labels.csv")
    assert exc.value.line == 4 and "labels.csv:4" in str(exc.value)
    with pytest.raises(FormatError) as exc:
        loads_orders("#splitshort-orders version=1\norder_id,dest_x,dest_y,lines\nx,1.0,2.0,I1\n")
    assert exc.value.line == 3
    with pytest.raises(FormatError):
        loads_table("order_id\n", "labels")
    with pytest.raises(FormatError):
        loads_table("#splitshort-orders version=1\n", "labels")


def test_missing_file(tmp_path):
    with pytest.raises(FormatError, match="file not found"):
        read_text(tmp_path / "nope.csv")


def test_atomic_write_replaces_whole_file(tmp_path):
    p = tmp_path / "x.txt"
    atomic_write_text(p, "first\n")
    atomic_write_text(p, "second\n")
    assert p.read_text() == "second\n"
    assert [f.name for f in tmp_path.iterdir()] == ["x.txt"]


class TestRunConfig:
    def test_default_file_matches_code(self):
        assert default_config() == RunConfig()
        assert RunConfig().dumps() == default_config_text()

    def test_seed_propagates(self):
        cfg = RunConfig(seed=9)
        assert cfg.generator.seed == 9 and cfg.cv.seed == 9
        assert cfg.with_seed(4).cv.seed == 4

    def test_roundtrip(self):
        cfg = RunConfig.loads(json.dumps({"seed": 3, "generator": {"n_orders": 50}, "router": {"threshold": 0.9}}))
        assert RunConfig.loads(cfg.dumps()) == cfg
        assert cfg.generator.n_orders == 50 and cfg.router.threshold == 0.9

    @pytest.mark.parametrize("doc", [
        {"colour": 1}, {"optimizer": {"speed": 1}}, {"seed": "x"}, {"catalog_version": "fx-0"},
        {"train": {"shrinkage": 0.0}}, {"format_version": 7}, {"router": {"threshold": 2.0}},
    ])
    def test_rejects_bad_documents(self, doc):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(doc)
