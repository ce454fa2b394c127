"""Small fixtures shared by several test modules."""
import numpy as np

from splitshort.domain import FulfillmentNetwork, ItemCatalogEntry, Node, NodeKind, Order, OrderLine
from splitshort.generator import GeneratorConfig


def two_node_network(saving_a_n1: float = 0.0) -> FulfillmentNetwork:
    """Items A, B (weight 1); N1 one unit from the origin stocks A, N2 two units away stocks both."""
    catalog = (ItemCatalogEntry("A", 1.0, 10.0, True), ItemCatalogEntry("B", 1.0, 10.0, True))
    nodes = (Node("N1", NodeKind.STORE, (1.0, 0.0), 5.0, 1.0),
             Node("N2", NodeKind.STORE, (2.0, 0.0), 5.0, 1.0))
    inventory = {("A", "N1"): 1, ("A", "N2"): 1, ("B", "N2"): 1}
    clearance = {("A", "N1"): saving_a_n1} if saving_a_n1 else {}
    return FulfillmentNetwork(catalog, nodes, inventory, clearance)


def two_line_order(order_id: str = "O1") -> Order:
    return Order(order_id, (0.0, 0.0), (OrderLine("A", 1), OrderLine("B", 1)))


SMALL_GEN = GeneratorConfig(seed=11, n_nodes=30, n_items=60, n_orders=400, inventory_density=0.2)


def random_xy(seed: int, n: int = 200, p: int = 5, noise: float = 0.5):
    """Logistic data with a random linear signal."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p)) * rng.uniform(0.5, 3.0, size=p)
    w = rng.normal(size=p)
    s = X @ w / np.sqrt(p) + noise * rng.normal(size=n)
    y = (s > np.median(s)).astype(np.int64)
    return X, y
