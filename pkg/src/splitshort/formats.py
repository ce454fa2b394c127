"""Text file formats: versioned CSV tables and JSON documents.

Every CSV file starts with one metadata line such as
``#splitshort-orders version=1`` (plus ``catalog=fx-1`` for feature tables),
then a header row. Reals are written with ``repr`` (shortest round-trip form),
so write-then-read reproduces every value exactly.
"""
from __future__ import annotations

import csv
import io
import json
import os
from typing import Iterable, Sequence

from splitshort.atomic import atomic_write_text
from splitshort.domain import (
    Allocation,
    FulfillmentNetwork,
    ItemCatalogEntry,
    Node,
    NodeKind,
    Order,
    OrderLine,
    SplitLabel,
)
from splitshort.errors import FormatError, VersionError
from splitshort.features import CATALOG, CATALOG_VERSION, FeatureVector

FORMAT_VERSION = 1

ITEM_COLUMNS = ("item_id", "weight", "price", "sfs_eligible")
NODE_COLUMNS = ("node_id", "kind", "x", "y", "fixed_shipment_cost", "unit_rate")
INVENTORY_COLUMNS = ("item_id", "node_id", "units", "clearance_saving")
ORDER_COLUMNS = ("order_id", "dest_x", "dest_y", "lines")
LABEL_COLUMNS = ("order_id", "y", "nodes_used", "objective")
OUTCOME_COLUMNS = ("order_id", "route", "p_split", "decide_cost_units", "regret", "objective",
                   "nodes_used", "allocations")


def fmt_float(v: float) -> str:
    return repr(float(v))


def _header_line(kind: str, **extra) -> str:
    parts = [f"#splitshort-{kind}", f"version={FORMAT_VERSION}"]
    parts += [f"{k}={v}" for k, v in extra.items()]
    return " ".join(parts) + "\n"


def dumps_table(kind: str, columns: Sequence[str], rows: Iterable[Sequence], **extra) -> str:
    buf = io.StringIO()
    buf.write(_header_line(kind, **extra))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def loads_table(text: str, kind: str, columns: Sequence[str] | None = None, path=None,
                **expected) -> tuple[list[str], list[tuple[int, list[str]]]]:
    """Parse and check the metadata line; returns (header, [(line_no, fields)])."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#splitshort-"):
        raise FormatError("missing #splitshort header line", path=path, line=1)
    tokens = lines[0].split()
    got_kind = tokens[0][len("#splitshort-"):]
    if got_kind != kind:
        raise FormatError(f"expected a {kind} file, found {got_kind}", path=path, line=1)
    meta = {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise FormatError(f"bad header token {tok!r}", path=path, line=1)
        k, v = tok.split("=", 1)
        meta[k] = v
    if meta.get("version") != str(FORMAT_VERSION):
        raise VersionError(f"{kind} file version {meta.get('version')!r}, expected {FORMAT_VERSION}",
                           path=path, line=1)
    for k, v in expected.items():
        if meta.get(k) != v:
            raise VersionError(f"{k}={meta.get(k)!r}, expected {v!r}", path=path, line=1)
    reader = csv.reader(lines[1:])
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("missing column header", path=path, line=2) from None
    if columns is not None and tuple(header) != tuple(columns):
        raise FormatError(f"columns {header} != {list(columns)}", path=path, line=2)
    rows = []
    try:
        for i, fields in enumerate(reader):
            if len(fields) != len(header):
                raise FormatError(f"{len(fields)} fields, expected {len(header)}", path=path, line=i + 3)
            rows.append((i + 3, fields))
    except csv.Error as exc:
        raise FormatError(str(exc), path=path, line=reader.line_num + 1) from None
    return header, rows


def _parse(conv, value, path, line, what):
    try:
        return conv(value)
    except (ValueError, TypeError):
        raise FormatError(f"bad {what} {value!r}", path=path, line=line) from None


def _bool(s: str) -> bool:
    if s in ("1", "true", "True"):
        return True
    if s in ("0", "false", "False"):
        return False
    raise ValueError(s)


def read_text(path) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except FileNotFoundError:
        raise FormatError("file not found", path=path) from None


# -- network -----------------------------------------------------------------

def network_files(network: FulfillmentNetwork) -> dict[str, str]:
    items = dumps_table("items", ITEM_COLUMNS, (
        (it.item_id, fmt_float(it.weight), fmt_float(it.price), int(it.sfs_eligible)) for it in network.catalog))
    nodes = dumps_table("nodes", NODE_COLUMNS, (
        (n.node_id, n.kind.value, fmt_float(n.location[0]), fmt_float(n.location[1]),
         fmt_float(n.fixed_shipment_cost), fmt_float(n.unit_rate)) for n in network.nodes))
    keys = sorted(network.inventory)
    inv = dumps_table("inventory", INVENTORY_COLUMNS, (
        (i, n, network.inventory[(i, n)],
         fmt_float(network.clearance_saving[(i, n)]) if (i, n) in network.clearance_saving else "")
        for i, n in keys))
    return {"items.csv": items, "nodes.csv": nodes, "inventory.csv": inv}


def save_network(network: FulfillmentNetwork, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    for name, text in network_files(network).items():
        atomic_write_text(os.path.join(directory, name), text)


def load_network(directory) -> FulfillmentNetwork:
    p = os.path.join(directory, "items.csv")
    _, rows = loads_table(read_text(p), "items", ITEM_COLUMNS, path=p)
    catalog = tuple(
        ItemCatalogEntry(f[0], _parse(float, f[1], p, ln, "weight"), _parse(float, f[2], p, ln, "price"),
                         _parse(_bool, f[3], p, ln, "sfs_eligible"))
        for ln, f in rows)
    p = os.path.join(directory, "nodes.csv")
    _, rows = loads_table(read_text(p), "nodes", NODE_COLUMNS, path=p)
    nodes = tuple(
        Node(f[0], _parse(NodeKind, f[1], p, ln, "kind"),
             (_parse(float, f[2], p, ln, "x"), _parse(float, f[3], p, ln, "y")),
             _parse(float, f[4], p, ln, "fixed_shipment_cost"), _parse(float, f[5], p, ln, "unit_rate"))
        for ln, f in rows)
    p = os.path.join(directory, "inventory.csv")
    _, rows = loads_table(read_text(p), "inventory", INVENTORY_COLUMNS, path=p)
    inventory, clearance = {}, {}
    for ln, f in rows:
        key = (f[0], f[1])
        if key in inventory:
            raise FormatError(f"duplicate inventory key {key}", path=p, line=ln)
        inventory[key] = _parse(int, f[2], p, ln, "units")
        if f[3] != "":
            clearance[key] = _parse(float, f[3], p, ln, "clearance_saving")
    return FulfillmentNetwork(catalog, nodes, inventory, clearance)


# -- orders ------------------------------------------------------------------

def _lines_field(order: Order) -> str:
    return ";".join(f"{line.item_id}:{line.quantity}" for line in order.lines)


def dumps_orders(orders: Sequence[Order]) -> str:
    return dumps_table("orders", ORDER_COLUMNS, (
        (o.order_id, fmt_float(o.destination[0]), fmt_float(o.destination[1]), _lines_field(o)) for o in orders))


def loads_orders(text: str, path=None) -> list[Order]:
    _, rows = loads_table(text, "orders", ORDER_COLUMNS, path=path)
    out = []
    for ln, f in rows:
        lines = []
        if f[3]:
            for part in f[3].split(";"):
                item, sep, qty = part.rpartition(":")
                if not sep or not item:
                    raise FormatError(f"bad order line {part!r}", path=path, line=ln)
                lines.append(OrderLine(item, _parse(int, qty, path, ln, "quantity")))
        out.append(Order(f[0], (_parse(float, f[1], path, ln, "dest_x"), _parse(float, f[2], path, ln, "dest_y")),
                         tuple(lines)))
    return out


# -- labels and features -------------------------------------------------------

def dumps_labels(labels: Sequence[SplitLabel]) -> str:
    return dumps_table("labels", LABEL_COLUMNS, (
        (l.order_id, l.y, l.nodes_used, fmt_float(l.objective)) for l in labels))


def loads_labels(text: str, path=None) -> list[SplitLabel]:
    _, rows = loads_table(text, "labels", LABEL_COLUMNS, path=path)
    out = []
    for ln, f in rows:
        y = _parse(int, f[1], path, ln, "y")
        if y not in (0, 1):
            raise FormatError(f"label {y} not in {{0, 1}}", path=path, line=ln)
        out.append(SplitLabel(f[0], y, _parse(int, f[2], path, ln, "nodes_used"),
                              _parse(float, f[3], path, ln, "objective")))
    return out


def dumps_features(vectors: Sequence[FeatureVector]) -> str:
    for v in vectors:
        if v.catalog_version != CATALOG_VERSION:
            raise VersionError(f"vector {v.order_id} has catalog {v.catalog_version}")
    return dumps_table("features", ("order_id",) + CATALOG.names,
                       ((v.order_id,) + tuple(fmt_float(x) for x in v.values) for v in vectors),
                       catalog=CATALOG_VERSION)


def loads_features(text: str, path=None) -> list[FeatureVector]:
    _, rows = loads_table(text, "features", ("order_id",) + CATALOG.names, path=path, catalog=CATALOG_VERSION)
    return [FeatureVector(f[0], tuple(_parse(float, x, path, ln, "feature value") for x in f[1:]))
            for ln, f in rows]


# -- outcomes ----------------------------------------------------------------

def _alloc_field(allocs: Sequence[Allocation]) -> str:
    return ";".join(f"{a.item_id}@{a.node_id}:{a.quantity}" for a in allocs)


def dumps_outcomes(outcomes) -> str:
    return dumps_table("outcomes", OUTCOME_COLUMNS, (
        (o.order_id, o.route.value, "" if o.predicted_p_split is None else fmt_float(o.predicted_p_split),
         o.decide_cost_units, "" if o.regret is None else fmt_float(o.regret), fmt_float(o.assignment.objective),
         o.assignment.nodes_used, _alloc_field(o.assignment.allocations))
        for o in outcomes))


def loads_outcome_rows(text: str, path=None) -> list[dict]:
    """Outcomes as plain records (the assignment is kept as its text field)."""
    header, rows = loads_table(text, "outcomes", OUTCOME_COLUMNS, path=path)
    out = []
    for ln, f in rows:
        rec = dict(zip(header, f))
        rec["p_split"] = None if rec["p_split"] == "" else _parse(float, rec["p_split"], path, ln, "p_split")
        rec["regret"] = None if rec["regret"] == "" else _parse(float, rec["regret"], path, ln, "regret")
        rec["decide_cost_units"] = _parse(int, rec["decide_cost_units"], path, ln, "decide_cost_units")
        rec["objective"] = _parse(float, rec["objective"], path, ln, "objective")
        rec["nodes_used"] = _parse(int, rec["nodes_used"], path, ln, "nodes_used")
        out.append(rec)
    return out


# -- JSON documents ------------------------------------------------------------

def dumps_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


def loads_json(text: str, path=None):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, path=path, line=exc.lineno) from None


def load_json(path):
    return loads_json(read_text(path), path=path)


def save_json(obj, path) -> None:
    atomic_write_text(path, dumps_json(obj))


def save_text(text: str, path) -> None:
    atomic_write_text(path, text)
