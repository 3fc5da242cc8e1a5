import json
from pathlib import Path

import numpy as np
import pytest

from vorclust.distance import GraphMetric, Identity, Square, uniform_model
from vorclust.io import parse_instance_document
from vorclust.model import AdjacencyGraph, FractionalClustering, Unit, build_instance

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def golden_path():
    return FIXTURES / "golden_4node.json"


@pytest.fixture(scope="session")
def two_lobe_path():
    return FIXTURES / "two_lobe.json"


@pytest.fixture()
def golden():
    """The 4-node path-star instance: edges x1x2=1, x2x3=1, x2x4=2."""
    units = [
        Unit("x1", (0.0, 0.0), 1.0),
        Unit("x2", (1.0, 0.0), 1.0),
        Unit("x3", (2.0, 0.0), 1.0),
        Unit("x4", (1.0, 2.0), 1.0),
    ]
    graph = AdjacencyGraph(lengths={("x1", "x2"): 1.0, ("x2", "x3"): 1.0, ("x2", "x4"): 2.0})
    return build_instance(units, 2, [2.0, 2.0], graph=graph)


@pytest.fixture()
def clustering_a():
    return FractionalClustering(
        2, 4, {(0, 0): 1.0, (0, 1): 0.5, (0, 2): 0.5, (1, 1): 0.5, (1, 2): 0.5, (1, 3): 1.0}
    )


@pytest.fixture()
def clustering_b():
    return FractionalClustering(2, 4, {(0, 0): 1.0, (0, 2): 1.0, (1, 1): 1.0, (1, 3): 1.0})


@pytest.fixture()
def golden_model_identity():
    return uniform_model(GraphMetric(), Identity(), ("x1", "x4"), (1.0, 0.0))


@pytest.fixture()
def golden_model_square():
    return uniform_model(GraphMetric(), Square(), ("x1", "x4"), (4.0, 0.0))


def random_geometric_instance(rng, m_max=60, k_max=8, unit_weights=False, with_graph=False):
    """Instance with random positions, weights and capacities; graph optional."""
    k = int(rng.integers(1, k_max + 1))
    m = int(rng.integers(max(k, 2), m_max + 1))
    pos = rng.random((m, 2)) * 10.0
    w = np.ones(m) if unit_weights else rng.random(m) + 0.1
    units = [Unit(f"u{j}", (float(x), float(y)), float(w[j])) for j, (x, y) in enumerate(pos)]
    if unit_weights:
        cap = rng.multinomial(m - k, np.ones(k) / k) + 1.0
    else:
        cap = rng.random(k) + 0.1
        cap = cap / cap.sum() * w.sum()
    graph = connected_geometric_graph(rng, pos) if with_graph else None
    return build_instance(units, k, list(cap), graph=graph)


def connected_geometric_graph(rng, pos):
    """Random geometric edges plus a position-sorted chain for connectivity."""
    m = len(pos)
    lengths = {}
    order = np.lexsort((pos[:, 1], pos[:, 0]))
    for a, b in zip(order, order[1:]):
        a, b = int(a), int(b)
        lengths[(f"u{a}", f"u{b}")] = float(np.hypot(*(pos[a] - pos[b])) + 1e-6)
    target = min(3 * m, m * (m - 1) // 2)
    tries = 0
    while len(lengths) < target and tries < 20 * m:
        tries += 1
        a, b = rng.integers(0, m, 2)
        a, b = int(a), int(b)
        if a == b:
            continue
        key = (f"u{min(a,b)}", f"u{max(a,b)}")
        if key in lengths or (key[1], key[0]) in lengths:
            continue
        lengths[key] = float(np.hypot(*(pos[a] - pos[b])) + 1e-6)
    return AdjacencyGraph(lengths=lengths)


def blob_document(seed, counts, centers, sigma, k, capacities=None, with_graph=False):
    """Gaussian blob instance as a parsed instance document."""
    rng = np.random.default_rng(seed)
    pts = np.vstack([rng.normal(c, sigma, (n, 2)) for c, n in zip(centers, counts)])
    doc = {
        "units": [
            {"id": f"u{i}", "x": float(x), "y": float(y), "weight": 1.0}
            for i, (x, y) in enumerate(pts)
        ],
        "k": k,
    }
    if capacities is not None:
        doc["capacities"] = capacities
    if with_graph:
        graph = connected_geometric_graph(rng, pts)
        doc["edges"] = [
            {"a": a, "b": b, "length": l} for (a, b), l in sorted(graph.lengths.items())
        ]
    return parse_instance_document(doc)
