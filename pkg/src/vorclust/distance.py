"""Distance measures, transformations and per-cluster cost evaluation.

A cluster's score for a point x is f_i(x) = h(d_i(s_i, x)) + mu_i, where d_i
is Euclidean, an ellipsoidal norm, or the shortest-path metric of the
instance graph; h is a shared monotone transformation; s_i the cluster site
and mu_i its additive weight.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .config import DEFAULT_TOLS, Tolerances
from .model import AdjacencyGraph, FractionalClustering, Instance, UnitId, cluster_weights


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class Euclidean:
    kind: str = "euclidean"


@dataclass(frozen=True)
class Ellipsoidal:
    """Norm sqrt(x' M x) for a symmetric positive definite 2x2 matrix M."""

    matrix: tuple[tuple[float, float], tuple[float, float]]
    kind: str = "ellipsoidal"

    def __post_init__(self) -> None:
        M = np.asarray(self.matrix, dtype=float)
        if M.shape != (2, 2):
            raise ValueError("ellipsoidal matrix must be 2x2")
        if abs(M[0, 1] - M[1, 0]) > DEFAULT_TOLS.spd_symmetry * max(1.0, float(np.abs(M).max())):
            raise ValueError("ellipsoidal matrix must be symmetric")
        eigs = np.linalg.eigvalsh((M + M.T) / 2.0)
        if not np.all(eigs > 0):
            raise ValueError(f"ellipsoidal matrix must be positive definite, eigenvalues {eigs}")
        object.__setattr__(self, "matrix", ((float(M[0, 0]), float(M[0, 1])), (float(M[1, 0]), float(M[1, 1]))))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=float)


@dataclass(frozen=True)
class GraphMetric:
    """Shortest-path metric of the instance's adjacency graph."""

    kind: str = "graph"


Metric = Union[Euclidean, Ellipsoidal, GraphMetric]


def ellipsoidal_norm(M: Union[Ellipsoidal, np.ndarray, Sequence[Sequence[float]]], x: Sequence[float]) -> float:
    """sqrt(x' M x); zero exactly when x is zero for SPD M."""
    if not isinstance(M, Ellipsoidal):
        M = Ellipsoidal(matrix=tuple(map(tuple, np.asarray(M, dtype=float))))
    v = np.asarray(x, dtype=float)
    return float(np.sqrt(max(0.0, float(v @ M.as_array() @ v))))


# ---------------------------------------------------------------------------
# transformations


@dataclass(frozen=True)
class Identity:
    kind: str = "identity"

    def apply(self, d: float) -> float:
        return d


@dataclass(frozen=True)
class Square:
    kind: str = "square"

    def apply(self, d: float) -> float:
        return d * d


@dataclass(frozen=True)
class Affine:
    alpha: float
    beta: float
    kind: str = "affine"

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError("affine transform needs alpha >= 0")

    def apply(self, d: float) -> float:
        return self.alpha * d + self.beta


Transform = Union[Identity, Square, Affine]


def is_affine(h: Transform) -> bool:
    return isinstance(h, (Identity, Affine))


# ---------------------------------------------------------------------------
# shortest paths


@dataclass(frozen=True)
class ShortestPaths:
    source: UnitId
    distance: dict[UnitId, float]
    predecessor: dict[UnitId, Optional[UnitId]]


def shortest_paths(
    graph: AdjacencyGraph,
    source: UnitId,
    nodes: Optional[Sequence[UnitId]] = None,
    tols: Tolerances = DEFAULT_TOLS,
) -> ShortestPaths:
    """Exact Dijkstra distances with one deterministic predecessor per node.

    Ties are broken toward the smallest predecessor id so repeated runs give
    identical trees.  Raises if any requested node is unreachable.
    """
    adj = graph.neighbors()
    if nodes is None:
        nodes = sorted(adj, key=str)
    if source not in adj and len(nodes) > 1:
        raise ValueError(f"source {source!r} has no incident edges")
    dist: dict[UnitId, float] = {source: 0.0}
    pred: dict[UnitId, Optional[UnitId]] = {source: None}
    done: set[UnitId] = set()
    heap: list[tuple[float, str, UnitId]] = [(0.0, str(source), source)]
    while heap:
        d, _, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, length in adj.get(u, ()):
            nd = d + length
            old = dist.get(v)
            if old is None or nd < old - tols.path_tie * max(1.0, abs(old)):
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, str(v), v))
            elif abs(nd - old) <= tols.path_tie * max(1.0, abs(old)) and str(u) < str(pred[v]):
                pred[v] = u
    missing = [n for n in nodes if n not in dist]
    if missing:
        raise ValueError(f"graph is disconnected: no path from {source!r} to {missing[:5]}")
    return ShortestPaths(source=source, distance=dist, predecessor=pred)


def shortest_path_dag(
    graph: AdjacencyGraph,
    source: UnitId,
    nodes: Optional[Sequence[UnitId]] = None,
    tols: Tolerances = DEFAULT_TOLS,
) -> dict[UnitId, tuple[UnitId, ...]]:
    """All-shortest-paths predecessor sets: p is kept for u iff d(p)+len(p,u)=d(u).

    The star-shapedness checks quantify over every shortest path, so they
    need the full DAG rather than a single tree.
    """
    sp = shortest_paths(graph, source, nodes, tols)
    adj = graph.neighbors()
    dag: dict[UnitId, tuple[UnitId, ...]] = {}
    for u, du in sp.distance.items():
        preds = []
        for v, length in adj.get(u, ()):
            dv = sp.distance.get(v)
            if dv is None:
                continue
            if abs(dv + length - du) <= tols.path_tie * max(1.0, abs(du)) and dv < du:
                preds.append(v)
        dag[u] = tuple(sorted(preds, key=str))
    return dag


# ---------------------------------------------------------------------------
# distance models


Site = Union[tuple[float, float], UnitId]


@dataclass(frozen=True)
class DistanceModel:
    """Per-cluster metrics, a shared transformation, sites and additive weights."""

    metrics: tuple[Metric, ...]
    transform: Transform
    sites: tuple[Site, ...]
    mu: tuple[float, ...]

    def __post_init__(self) -> None:
        k = len(self.metrics)
        if not (len(self.sites) == len(self.mu) == k):
            raise ValueError("metrics, sites and mu must have equal length")
        for metric, site in zip(self.metrics, self.sites):
            if isinstance(metric, GraphMetric) and isinstance(site, tuple):
                raise ValueError("graph metrics need unit-id sites, not coordinates")
        object.__setattr__(self, "mu", tuple(float(v) for v in self.mu))

    @property
    def k(self) -> int:
        return len(self.metrics)

    def with_mu(self, mu: Sequence[float]) -> "DistanceModel":
        return DistanceModel(self.metrics, self.transform, self.sites, tuple(float(v) for v in mu))

    def with_sites(self, sites: Sequence[Site]) -> "DistanceModel":
        return DistanceModel(self.metrics, self.transform, tuple(sites), self.mu)

    def uses_graph(self) -> bool:
        return any(isinstance(mtr, GraphMetric) for mtr in self.metrics)

    def point_sites(self) -> np.ndarray:
        if self.uses_graph():
            raise ValueError("sites are unit ids under a graph metric")
        return np.array(self.sites, dtype=float)


def uniform_model(metric: Metric, transform: Transform, sites: Sequence[Site], mu: Optional[Sequence[float]] = None) -> DistanceModel:
    k = len(tuple(sites))
    return DistanceModel(
        metrics=tuple([metric] * k),
        transform=transform,
        sites=tuple(sites),
        mu=tuple(mu) if mu is not None else (0.0,) * k,
    )


def metric_distance(
    metric: Metric,
    site: Site,
    x: Union[Sequence[float], UnitId],
    instance: Optional[Instance] = None,
) -> float:
    if isinstance(metric, GraphMetric):
        if instance is None or instance.graph is None:
            raise ValueError("graph metric needs an instance with an adjacency graph")
        if isinstance(x, (tuple, list, np.ndarray)):
            raise ValueError("graph metric distances are defined on units, not coordinates")
        sp = shortest_paths(instance.graph, site, [u.id for u in instance.units])
        return sp.distance[x]
    if not isinstance(x, (tuple, list, np.ndarray)):
        raise ValueError("point metrics need coordinates")
    p = np.asarray(x, dtype=float)
    s = np.asarray(site, dtype=float)
    if isinstance(metric, Euclidean):
        return float(np.hypot(*(p - s)))
    return ellipsoidal_norm(metric, p - s)


def eval_f(
    model: DistanceModel,
    i: int,
    x: Union[Sequence[float], UnitId],
    instance: Optional[Instance] = None,
) -> float:
    """h(d_i(s_i, x)) + mu_i for one cluster and one point or unit."""
    if not (0 <= i < model.k):
        raise IndexError(f"cluster index {i} out of range")
    metric = model.metrics[i]
    if not isinstance(metric, GraphMetric) and not isinstance(x, (tuple, list, np.ndarray)):
        if instance is None:
            raise ValueError("pass coordinates, or an instance to resolve unit ids")
        x = instance.units[instance.index_of(x)].position
    d = metric_distance(metric, model.sites[i], x, instance)
    return model.transform.apply(d) + model.mu[i]


def cost_matrix(instance: Instance, model: DistanceModel, tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """k x m matrix of transformed distances h(d_i(s_i, x_j)), without mu.

    Graph metrics cost one shortest-path run per site; point metrics are
    evaluated in closed form.
    """
    if model.k < 1:
        raise ValueError("model must have at least one cluster")
    pos = instance.positions()
    unit_ids = [u.id for u in instance.units]
    rows = []
    for i, metric in enumerate(model.metrics):
        if isinstance(metric, GraphMetric):
            if instance.graph is None:
                raise ValueError("instance has no adjacency graph")
            sp = shortest_paths(instance.graph, model.sites[i], unit_ids, tols)
            d = np.array([sp.distance[u] for u in unit_ids])
        elif isinstance(metric, Euclidean):
            s = np.asarray(model.sites[i], dtype=float)
            d = np.hypot(*(pos - s).T)
        else:
            s = np.asarray(model.sites[i], dtype=float)
            diff = pos - s
            M = metric.as_array()
            d = np.sqrt(np.maximum(0.0, np.einsum("nd,de,ne->n", diff, M, diff)))
        if isinstance(model.transform, Identity):
            rows.append(d)
        elif isinstance(model.transform, Square):
            rows.append(d * d)
        else:
            rows.append(model.transform.alpha * d + model.transform.beta)
    return np.vstack(rows)


# ---------------------------------------------------------------------------
# anisotropy estimation


@dataclass(frozen=True)
class AnisotropyEstimate:
    matrices: tuple[Ellipsoidal, ...]
    regularized: tuple[bool, ...]


def cluster_centroids(instance: Instance, clustering: FractionalClustering) -> np.ndarray:
    """Weighted mean position of each cluster's (fractional) members."""
    w = instance.weights()
    pos = instance.positions()
    cw = cluster_weights(clustering, instance)
    num = np.zeros((clustering.k, 2))
    for (i, j), v in clustering.entries.items():
        num[i] += v * w[j] * pos[j]
    return num / cw[:, None]


def estimate_anisotropy(
    instance: Instance,
    reference: FractionalClustering,
    tols: Tolerances = DEFAULT_TOLS,
) -> AnisotropyEstimate:
    """Fit one ellipsoidal norm per cluster from the reference clustering.

    Per cluster: weighted covariance of member positions about the centroid,
    eigendecomposition, reciprocal eigenvalues.  Near-singular covariances
    (collinear or single-point clusters) are clamped to a floor and flagged.
    """
    if not reference.is_integer(tols.integer_entry):
        raise ValueError("anisotropy estimation needs an integer reference clustering")
    w = instance.weights()
    pos = instance.positions()
    cw = cluster_weights(reference, instance)
    cents = cluster_centroids(instance, reference)
    mats: list[Ellipsoidal] = []
    flags: list[bool] = []
    for i in range(reference.k):
        V = np.zeros((2, 2))
        for j in reference.support(i):
            diff = pos[j] - cents[i]
            V += (reference.value(i, j) * w[j] / cw[i]) * np.outer(diff, diff)
        eigvals, Q = np.linalg.eigh(V)
        floor = max(tols.eig_floor_rel * float(eigvals.max()), tols.eig_floor_abs)
        clamped = np.maximum(eigvals, floor)
        flags.append(bool(np.any(eigvals < floor)))
        M = Q @ np.diag(1.0 / clamped) @ Q.T
        M = (M + M.T) / 2.0
        mats.append(Ellipsoidal(matrix=tuple(map(tuple, M))))
    return AnisotropyEstimate(matrices=tuple(mats), regularized=tuple(flags))
