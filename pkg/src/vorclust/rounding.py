"""Rounding fractional clusterings to integer ones.

Two procedures: a successive tree rounding over the assignment forest of an
extremal solution, which guarantees a relative balance error below
max_j,i omega_j / kappa_i while only ever shrinking supports, and a
connectivity-aware variant for shortest-path models that assigns whole
fractional units while keeping every cluster's induced subgraph connected.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .config import DEFAULT_TOLS, Tolerances
from .distance import DistanceModel, GraphMetric, is_affine
from .model import FractionalClustering, Instance, UnitId, cluster_weights


class NotExtremalError(ValueError):
    """The assignment graph of the input has a cycle."""


class ConnectivityBlockedError(RuntimeError):
    """No connectivity-preserving integral completion exists."""

    def __init__(self, blocked: Sequence[tuple[UnitId, tuple[int, ...]]]):
        self.blocked = tuple(blocked)
        units = ", ".join(f"{u!r} (supports clusters {list(cs)})" for u, cs in self.blocked)
        super().__init__(f"rounding blocked; escalate to pins for: {units}")


@dataclass(frozen=True)
class RoundingOutcome:
    clustering: FractionalClustering
    epsilon_achieved: float
    epsilon_bound: float
    moved_units: tuple[tuple[int, tuple[tuple[int, float], ...], int], ...]


def epsilon_bound(instance: Instance) -> float:
    """Worst-case relative deviation of the tree rounding: max_j,i w_j / kappa_i."""
    return float(instance.weights().max() / instance.capacity_array().min())


def _forest(clustering: FractionalClustering) -> tuple[dict[int, list[int]], dict[int, list[int]]]:
    """Adjacency of the bipartite assignment graph; raises on cycles."""
    k, m = clustering.k, clustering.m
    cl_adj: dict[int, list[int]] = {i: [] for i in range(k)}
    un_adj: dict[int, list[int]] = {j: [] for j in range(m)}
    parent = list(range(k + m))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in sorted(clustering.entries):
        cl_adj[i].append(j)
        un_adj[j].append(i)
        a, b = find(i), find(k + j)
        if a == b:
            raise NotExtremalError(
                f"assignment graph has a cycle through cluster {i} and unit {j}; input is not extremal"
            )
        parent[max(a, b)] = min(a, b)
    return cl_adj, un_adj


def reduce_to_vertex(instance: Instance, clustering: FractionalClustering) -> FractionalClustering:
    """Cancel assignment-graph cycles until the clustering is extremal.

    Pushing a circulation around a cycle keeps all row and column sums, so
    balance is untouched; the support only shrinks, so any feasible diagram
    stays feasible.  For points of an optimal face, cycles carry zero reduced
    cost and the objective is preserved as well.
    """
    w = instance.weights()
    flows = {e: v * w[e[1]] for e, v in clustering.entries.items()}
    while True:
        cycle = _find_cycle(clustering.k, clustering.m, flows)
        if cycle is None:
            break
        # orient the push to drain the lexicographically-smallest minimum arc
        theta = min(flows[e] for e in cycle)
        tight = min(e for e in cycle if flows[e] <= theta)
        start = cycle.index(tight)
        signs = {}
        for off, e in enumerate(cycle[start:] + cycle[:start]):
            signs[e] = -1 if off % 2 == 0 else +1
        for e, s in signs.items():
            flows[e] = max(0.0, flows[e] + s * theta)
        flows = {e: f for e, f in flows.items() if f > 0}
    entries: dict[tuple[int, int], float] = {}
    for j in range(clustering.m):
        col = {i: flows[(i, j)] for i in range(clustering.k) if (i, j) in flows}
        total = sum(col.values())
        for i, f in col.items():
            entries[(i, j)] = f / total
    return FractionalClustering(k=clustering.k, m=clustering.m, entries=entries)


def _find_cycle(k: int, m: int, flows: dict[tuple[int, int], float]) -> Optional[list[tuple[int, int]]]:
    """One cycle of the bipartite assignment graph, in cyclic edge order."""
    adj: dict[int, list[tuple[int, tuple[int, int]]]] = {}
    for i, j in sorted(flows):
        adj.setdefault(i, []).append((k + j, (i, j)))
        adj.setdefault(k + j, []).append((i, (i, j)))
    seen: dict[int, Optional[tuple[int, tuple[int, int]]]] = {}
    for root in sorted(adj):
        if root in seen:
            continue
        seen[root] = None
        stack = [root]
        while stack:
            v = stack.pop()
            came_by = seen.get(v)
            for w_node, edge in adj[v]:
                if came_by is not None and came_by[1] == edge:
                    continue
                if w_node not in seen:
                    seen[w_node] = (v, edge)
                    stack.append(w_node)
                else:
                    return _cycle_from_parents(seen, v, w_node, edge)
    return None


def _cycle_from_parents(seen, v, w_node, closing_edge):
    anc_v = [v]
    cur = v
    while seen.get(cur) is not None:
        cur = seen[cur][0]
        anc_v.append(cur)
    pos = {node: idx for idx, node in enumerate(anc_v)}
    cur = w_node
    path_w_edges = []
    while cur not in pos:
        parent, edge = seen[cur]
        path_w_edges.append(edge)
        cur = parent
    lca = cur
    path_v_edges = []
    cur = v
    while cur != lca:
        parent, edge = seen[cur]
        path_v_edges.append(edge)
        cur = parent
    return [closing_edge] + path_w_edges + path_v_edges[::-1]


def round_tree(
    instance: Instance,
    fractional: FractionalClustering,
    tols: Tolerances = DEFAULT_TOLS,
    order: str = "index",
) -> RoundingOutcome:
    """Successive rounding over the assignment forest of a vertex solution.

    Components are processed as trees rooted at their lowest-index cluster,
    clusters in breadth-first order.  Each cluster first settles its
    predecessor unit (taken iff no earlier cluster claimed it), then takes
    its remaining fractional units in unit-index order while the running
    total fits under the capacity; the first unit that does not fit stops
    the intake.  ``order='weight'`` pre-sorts by descending weight instead of
    unit index, a non-default variant that often lands closer to balance.
    """
    if order not in ("index", "weight"):
        raise ValueError("order must be 'index' or 'weight'")
    cw = cluster_weights(fractional, instance)
    cap = instance.capacity_array()
    if np.any(np.abs(cw - cap) > tols.strong_balance * np.maximum(1.0, np.abs(cap))):
        raise ValueError("tree rounding expects a strongly balanced input")
    cl_adj, un_adj = _forest(fractional)
    w = instance.weights()
    k, m = fractional.k, fractional.m
    tol_int = tols.integer_entry

    integral = {(i, j) for (i, j), v in fractional.entries.items() if v >= 1 - tol_int}
    frac_entries = {(i, j): v for (i, j), v in fractional.entries.items() if v < 1 - tol_int}

    # breadth-first cluster order per component, components by lowest cluster
    cluster_order: list[tuple[int, Optional[int]]] = []  # (cluster, predecessor unit)
    seen_cl: set[int] = set()
    seen_un: set[int] = set()
    for root in range(k):
        if root in seen_cl:
            continue
        seen_cl.add(root)
        dq: deque[tuple[int, Optional[int]]] = deque([(root, None)])
        while dq:
            i, pred = dq.popleft()
            cluster_order.append((i, pred))
            next_clusters: list[tuple[int, int]] = []
            for j in cl_adj[i]:
                if j in seen_un:
                    continue
                seen_un.add(j)
                for i2 in un_adj[j]:
                    if i2 not in seen_cl:
                        seen_cl.add(i2)
                        next_clusters.append((i2, j))
            for i2, j in sorted(next_clusters):
                dq.append((i2, j))

    claimed: dict[int, int] = {}  # fractional unit -> cluster that took it
    moved: list[tuple[int, tuple[tuple[int, float], ...], int]] = []
    for i, pred in cluster_order:
        load = math.fsum(w[j] for (ci, j) in integral if ci == i)
        if pred is not None and (i, pred) in frac_entries:
            if pred not in claimed:
                claimed[pred] = i
                load += w[pred]
        rest = [j for (ci, j) in frac_entries if ci == i and j != pred and j not in claimed]
        rest.sort(key=(lambda j: (-w[j], j)) if order == "weight" else (lambda j: j))
        budget = cap[i] - load
        running = 0.0
        for j in rest:
            running += w[j]
            if running <= budget + 1e-9 * max(1.0, abs(budget)):
                claimed[j] = i
            else:
                break

    # a tree guarantees every fractional unit is picked up by its first
    # unclaimed child cluster; verify rather than assume
    frac_units = {j for (_, j) in frac_entries}
    missing = sorted(frac_units - set(claimed))
    if missing:
        raise RuntimeError(f"tree rounding failed to place units {missing}")

    entries = {(i, j): 1.0 for (i, j) in integral}
    for j, i in claimed.items():
        entries[(i, j)] = 1.0
        before = tuple(sorted((ci, v) for (ci, jj), v in frac_entries.items() if jj == j))
        moved.append((j, before, i))
    result = FractionalClustering(k=k, m=m, entries=entries)
    out_w = cluster_weights(result, instance, allow_empty=True)
    eps_ach = float(np.max(np.abs(out_w - cap) / cap))
    return RoundingOutcome(
        clustering=result,
        epsilon_achieved=eps_ach,
        epsilon_bound=epsilon_bound(instance),
        moved_units=tuple(sorted(moved)),
    )


def round_connected(
    instance: Instance,
    fractional: FractionalClustering,
    sites: Sequence[UnitId],
    model: Optional[DistanceModel] = None,
    tols: Tolerances = DEFAULT_TOLS,
) -> RoundingOutcome:
    """Integral completion that keeps every cluster connected in the graph.

    Fractional units are assigned whole, one at a time, always to a
    supporting cluster whose grown region is adjacent in the graph (a cluster
    with no integral units yet can only start at its own site).  Among the
    admissible moves the one minimizing the resulting maximum relative
    deviation wins, ties broken by shortest-path distance to the region and
    then by cluster index; region distances are refreshed after every
    assignment.
    """
    if instance.graph is None:
        raise ValueError("connected rounding needs an adjacency graph")
    if model is not None:
        if not all(isinstance(mtr, GraphMetric) for mtr in model.metrics):
            raise ValueError("connected rounding expects graph metrics")
        if not is_affine(model.transform):
            raise ValueError("connected rounding expects an affine transform")
    if len(sites) != fractional.k:
        raise ValueError("one site per cluster required")
    ids = [u.id for u in instance.units]
    idx = {u: j for j, u in enumerate(ids)}
    site_idx = [idx[s] for s in sites]
    adj_ids = instance.graph.neighbors()
    adj: dict[int, list[tuple[int, float]]] = {
        idx[u]: [(idx[v], d) for v, d in nbrs] for u, nbrs in adj_ids.items()
    }
    w = instance.weights()
    cap = instance.capacity_array()
    k, m = fractional.k, fractional.m
    tol_int = tols.integer_entry

    assigned: dict[int, int] = {}  # unit -> cluster, integral part
    supports: dict[int, tuple[int, ...]] = {}
    frac_units: list[int] = []
    for j in range(m):
        col = fractional.assignment_of(j)
        full = [i for i, v in col.items() if v >= 1 - tol_int]
        if full:
            assigned[j] = full[0]
        else:
            frac_units.append(j)
            supports[j] = tuple(sorted(col))

    regions: list[set[int]] = [set() for _ in range(k)]
    for j, i in assigned.items():
        regions[i].add(j)
    for i in range(k):
        if regions[i] and not _connected_subset(regions[i], adj):
            raise ValueError(f"integral part of cluster {i} is not connected")

    loads = np.zeros(k)
    for j, i in assigned.items():
        loads[i] += w[j]

    moved: list[tuple[int, tuple[tuple[int, float], ...], int]] = []
    remaining = set(frac_units)
    while remaining:
        region_dist = [_region_distances(regions[i] or {site_idx[i]}, adj, m) for i in range(k)]
        best = None
        for j in sorted(remaining):
            for i in supports[j]:
                if regions[i]:
                    touches = any(v in regions[i] for v, _ in adj.get(j, ()))
                else:
                    touches = j == site_idx[i]
                if not touches:
                    continue
                trial = loads.copy()
                trial[i] += w[j]
                dev = float(np.max(np.abs(trial - cap) / cap))
                key = (dev, region_dist[i][j], i, j)
                if best is None or key < best[0]:
                    best = (key, j, i)
        if best is None:
            blocked = [(ids[j], supports[j]) for j in sorted(remaining)]
            raise ConnectivityBlockedError(blocked)
        _, j, i = best
        before = tuple(sorted((ci, fractional.value(ci, j)) for ci in supports[j]))
        moved.append((j, before, i))
        assigned[j] = i
        regions[i].add(j)
        loads[i] += w[j]
        remaining.discard(j)

    entries = {(i, j): 1.0 for j, i in assigned.items()}
    result = FractionalClustering(k=k, m=m, entries=entries)
    out_w = cluster_weights(result, instance, allow_empty=True)
    eps_ach = float(np.max(np.abs(out_w - cap) / cap))
    return RoundingOutcome(
        clustering=result,
        epsilon_achieved=eps_ach,
        epsilon_bound=epsilon_bound(instance),
        moved_units=tuple(sorted(moved)),
    )


def _connected_subset(nodes: set[int], adj: dict[int, list[tuple[int, float]]]) -> bool:
    start = next(iter(nodes))
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v, _ in adj.get(u, ()):
            if v in nodes and v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(nodes)


def _region_distances(region: set[int], adj: dict[int, list[tuple[int, float]]], m: int) -> np.ndarray:
    """Multi-source Dijkstra distances from a grown region."""
    import heapq

    dist = np.full(m, np.inf)
    heap: list[tuple[float, int]] = []
    for s in region:
        dist[s] = 0.0
        heapq.heappush(heap, (0.0, s))
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, length in adj.get(u, ()):
            nd = d + length
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist
