import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vorclust.distance import (
    Affine,
    Ellipsoidal,
    Euclidean,
    GraphMetric,
    Identity,
    Square,
    cost_matrix,
    ellipsoidal_norm,
    estimate_anisotropy,
    eval_f,
    metric_distance,
    shortest_path_dag,
    shortest_paths,
    uniform_model,
)
from vorclust.model import AdjacencyGraph, FractionalClustering, Unit, build_instance

finite_coord = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def test_eval_f_identity_golden(golden, golden_model_identity):
    assert eval_f(golden_model_identity, 0, "x3", golden) == 3.0
    assert eval_f(golden_model_identity, 1, "x2", golden) == 2.0


def test_eval_f_square_derived(golden):
    model = uniform_model(GraphMetric(), Square(), ("x1", "x4"), (4.0, 0.0))
    assert eval_f(model, 0, "x4", golden) == 13.0
    assert eval_f(model, 1, "x3", golden) == 9.0


def test_eval_f_euclidean_345():
    model = uniform_model(Euclidean(), Identity(), ((0.0, 0.0),))
    assert eval_f(model, 0, (3.0, 4.0)) == 5.0


def test_eval_f_point_under_graph_metric_rejected(golden, golden_model_identity):
    with pytest.raises(ValueError):
        eval_f(golden_model_identity, 0, (1.0, 1.0), golden)


def test_shortest_paths_golden(golden):
    sp = shortest_paths(golden.graph, "x1", [u.id for u in golden.units])
    assert [sp.distance[u] for u in ("x1", "x2", "x3", "x4")] == [0.0, 1.0, 2.0, 3.0]
    assert sp.distance["x1"] == 0.0
    # predecessors form a tree rooted at the source
    assert sp.predecessor["x1"] is None
    for u in ("x2", "x3", "x4"):
        assert sp.predecessor[u] is not None


def test_shortest_paths_triangle_two_hops():
    g = AdjacencyGraph(lengths={("a", "b"): 1.0, ("b", "c"): 1.0, ("a", "c"): 3.0})
    sp = shortest_paths(g, "a", ["a", "b", "c"])
    assert sp.distance["c"] == 2.0
    assert sp.predecessor["c"] == "b"


def test_shortest_paths_disconnected_raises():
    g = AdjacencyGraph(lengths={("a", "b"): 1.0, ("c", "d"): 1.0})
    with pytest.raises(ValueError, match="disconnected"):
        shortest_paths(g, "a", ["a", "b", "c", "d"])


def test_shortest_path_dag_has_all_ties():
    # two equal-length routes from a to d
    g = AdjacencyGraph(
        lengths={("a", "b"): 1.0, ("a", "c"): 1.0, ("b", "d"): 1.0, ("c", "d"): 1.0}
    )
    dag = shortest_path_dag(g, "a", ["a", "b", "c", "d"])
    assert set(dag["d"]) == {"b", "c"}
    assert dag["a"] == ()


def test_tree_edges_satisfy_tightness(golden):
    sp = shortest_paths(golden.graph, "x4", [u.id for u in golden.units])
    for u, p in sp.predecessor.items():
        if p is None:
            continue
        edge = (u, p) if (u, p) in golden.graph.lengths else (p, u)
        assert sp.distance[u] == pytest.approx(sp.distance[p] + golden.graph.lengths[edge])


def test_ellipsoidal_norm_examples():
    assert ellipsoidal_norm(((1.0, 0.0), (0.0, 1.0)), (3.0, 4.0)) == 5.0
    assert ellipsoidal_norm(((2.0, 0.0), (0.0, 0.5)), (1.0, 0.0)) == pytest.approx(math.sqrt(2))
    assert ellipsoidal_norm(((2.0, 0.3), (0.3, 0.5)), (0.0, 0.0)) == 0.0


def test_ellipsoidal_rejects_non_spd():
    with pytest.raises(ValueError):
        Ellipsoidal(matrix=((1.0, 2.0), (2.0, 1.0)))  # indefinite
    with pytest.raises(ValueError):
        Ellipsoidal(matrix=((1.0, 0.5), (0.0, 1.0)))  # asymmetric


def test_affine_transform_validation():
    with pytest.raises(ValueError):
        Affine(alpha=-1.0, beta=0.0)
    assert Affine(alpha=2.0, beta=3.0).apply(5.0) == 13.0


def test_cost_matrix_golden_rows(golden):
    model = uniform_model(GraphMetric(), Identity(), ("x1", "x4"))
    C = cost_matrix(golden, model)
    assert C.tolist() == [[0.0, 1.0, 2.0, 3.0], [3.0, 2.0, 3.0, 0.0]]
    model_sq = uniform_model(GraphMetric(), Square(), ("x1", "x4"))
    C2 = cost_matrix(golden, model_sq)
    assert C2.tolist() == [[0.0, 1.0, 4.0, 9.0], [9.0, 4.0, 9.0, 0.0]]


def test_cost_matrix_single_cluster(golden):
    model = uniform_model(GraphMetric(), Identity(), ("x2",))
    inst = build_instance(list(golden.units), 1, [4.0], graph=golden.graph)
    C = cost_matrix(inst, model)
    assert C.shape == (1, 4)
    assert C[0].tolist() == [1.0, 0.0, 1.0, 2.0]


def test_estimate_anisotropy_axis_aligned():
    units = [
        Unit("a", (1.0, 0.0), 1.0),
        Unit("b", (-1.0, 0.0), 1.0),
        Unit("c", (0.0, 2.0), 1.0),
        Unit("d", (0.0, -2.0), 1.0),
    ]
    inst = build_instance(units, 1, [4.0])
    ref = FractionalClustering(1, 4, {(0, j): 1.0 for j in range(4)})
    est = estimate_anisotropy(inst, ref)
    M = est.matrices[0].as_array()
    assert np.allclose(M, np.diag([2.0, 0.5]), atol=1e-12)
    assert est.regularized == (False,)


def test_estimate_anisotropy_isotropic_circle():
    rng = np.random.default_rng(0)
    ang = rng.uniform(0, 2 * np.pi, 400)
    pts = np.c_[np.cos(ang), np.sin(ang)]
    units = [Unit(f"u{i}", (float(x), float(y)), 1.0) for i, (x, y) in enumerate(pts)]
    inst = build_instance(units, 1, [400.0])
    ref = FractionalClustering(1, 400, {(0, j): 1.0 for j in range(400)})
    est = estimate_anisotropy(inst, ref)
    M = est.matrices[0].as_array()
    # covariance of a centered unit circle is ~I/2, so M ~ 2I
    off_ratio = abs(M[0, 1]) / abs(M[0, 0])
    assert off_ratio < 0.1
    assert abs(M[0, 0] - M[1, 1]) / M[0, 0] < 0.1
    # inverse relation M V = I within tolerance for a well-conditioned V
    V = np.zeros((2, 2))
    c = pts.mean(axis=0)
    for p in pts:
        V += np.outer(p - c, p - c) / 400.0
    assert np.allclose(M @ V, np.eye(2), atol=1e-8)


def test_estimate_anisotropy_degenerate_flagged():
    units = [Unit("a", (1.0, 1.0), 1.0), Unit("b", (1.0, 1.0), 1.0), Unit("c", (5.0, 5.0), 1.0)]
    inst = build_instance(units, 2, [2.0, 1.0])
    ref = FractionalClustering(2, 3, {(0, 0): 1.0, (0, 1): 1.0, (1, 2): 1.0})
    est = estimate_anisotropy(inst, ref)
    assert est.regularized == (True, True)
    for mat in est.matrices:
        np.linalg.cholesky(mat.as_array())  # still SPD after clamping


def test_estimate_anisotropy_needs_integer(golden, clustering_a):
    with pytest.raises(ValueError):
        estimate_anisotropy(golden, clustering_a)


@given(
    st.lists(st.tuples(finite_coord, finite_coord), min_size=3, max_size=3, unique=True),
    st.sampled_from(["euclidean", "ellipsoidal"]),
)
@settings(max_examples=80, deadline=None)
def test_metric_axioms_point_metrics(points, kind):
    metric = Euclidean() if kind == "euclidean" else Ellipsoidal(matrix=((2.0, 0.4), (0.4, 0.7)))
    x, y, z = [np.asarray(p) for p in points]

    def d(a, b):
        return metric_distance(metric, tuple(a), tuple(b))

    assert d(x, x) == pytest.approx(0.0, abs=1e-9)
    assert d(x, y) == pytest.approx(d(y, x), abs=1e-9)
    assert d(x, z) <= d(x, y) + d(y, z) + 1e-9


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_metric_axioms_graph_triples(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 12))
    lengths = {}
    for a in range(n - 1):  # chain keeps it connected
        lengths[(f"v{a}", f"v{a+1}")] = float(rng.uniform(0.1, 3.0))
    for _ in range(n):
        a, b = rng.integers(0, n, 2)
        if a != b:
            key = (f"v{min(a,b)}", f"v{max(a,b)}")
            lengths.setdefault(key, float(rng.uniform(0.1, 3.0)))
    g = AdjacencyGraph(lengths=lengths)
    nodes = [f"v{i}" for i in range(n)]
    x, y, z = rng.choice(nodes, 3, replace=True)
    dx = shortest_paths(g, x, nodes).distance
    dy = shortest_paths(g, y, nodes).distance
    assert dx[x] == 0.0
    assert dx[y] == pytest.approx(dy[x], rel=1e-9)
    assert dx[z] <= dx[y] + dy[z] + 1e-9


def test_ellipsoidal_identity_matches_euclidean():
    rng = np.random.default_rng(1)
    metric = Ellipsoidal(matrix=((1.0, 0.0), (0.0, 1.0)))
    for _ in range(50):
        a, b = rng.normal(0, 5, (2, 2))
        de = metric_distance(Euclidean(), tuple(a), tuple(b))
        dm = metric_distance(metric, tuple(a), tuple(b))
        assert abs(de - dm) <= 1e-12 * max(1.0, de)
