"""Balanced transportation solver.

Minimizes sum_{i,j} xi_{i,j} * omega_j * c_{i,j} over fractional clusterings
with prescribed cluster weights, by a primal network simplex on the bipartite
supply/demand formulation (units supply their weight, clusters demand their
capacity).  The spanning-tree basis gives an extremal optimal clustering and
exact dual prices (mu per cluster, eta per unit).

Dual prices are canonicalized before being returned: when the dual optimum is
not unique (which happens exactly when the union of optimal supports leaves
the bipartite graph disconnected), the price vector is centered so that the
smallest slack on non-support arcs is maximized.  This makes the reported mu
a deterministic function of the problem alone, independent of pivot history,
and guarantees that the induced diagram supports every maximal-support
optimal clustering.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import DEFAULT_TOLS, Tolerances
from .distance import DistanceModel
from .model import FractionalClustering


class InfeasibleError(ValueError):
    """The (possibly pin/exclusion-restricted) polytope is empty."""


@dataclass(frozen=True)
class TransportProblem:
    costs: np.ndarray  # (k, m) transformed distances, mu excluded
    weights: np.ndarray  # (m,) positive unit weights
    capacities: np.ndarray  # (k,) positive cluster capacities
    pins: frozenset[tuple[int, int]] = frozenset()
    exclusions: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self) -> None:
        costs = np.asarray(self.costs, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        cap = np.asarray(self.capacities, dtype=float)
        if costs.ndim != 2 or costs.shape != (len(cap), len(w)):
            raise ValueError(f"costs must be k x m, got {costs.shape}")
        if not np.all(w > 0) or not np.all(cap > 0):
            raise ValueError("weights and capacities must be positive")
        for i, j in self.pins | self.exclusions:
            if not (0 <= i < len(cap) and 0 <= j < len(w)):
                raise ValueError(f"constraint ({i},{j}) out of range")
        if self.pins & self.exclusions:
            raise ValueError("pins and exclusions overlap")
        pinned_units = [j for _, j in self.pins]
        if len(set(pinned_units)) != len(pinned_units):
            raise ValueError("at most one pin per unit")
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "capacities", cap)

    @property
    def k(self) -> int:
        return len(self.capacities)

    @property
    def m(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class Duals:
    mu: tuple[float, ...]
    eta: tuple[float, ...]

    def objective(self, weights: Sequence[float], capacities: Sequence[float]) -> float:
        terms = [w * e for w, e in zip(weights, self.eta)]
        terms += [-c * m for c, m in zip(capacities, self.mu)]
        return math.fsum(terms)


@dataclass(frozen=True)
class SolveResult:
    clustering: FractionalClustering
    duals: Duals
    objective: float
    is_vertex: bool
    assignment_forest: tuple[tuple[int, int], ...]


# ---------------------------------------------------------------------------
# simplex machinery (operates on the pin-reduced problem)


def _matrix_minimum(C: np.ndarray, demand: np.ndarray, supply: np.ndarray) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Cost-greedy initial basis: fill cheapest live cells first.

    Each step retires exactly one live row or column (the final step both), so
    the chosen cells are acyclic and number k + m - 1, like the classic
    northwest-corner rule but starting far closer to optimal on geometric
    costs.
    """
    k, m = C.shape
    F = np.zeros((k, m))
    rd = demand.astype(float).copy()
    rs = supply.astype(float).copy()
    row_alive = np.ones(k, dtype=bool)
    col_alive = np.ones(m, dtype=bool)
    n_rows, n_cols = k, m
    basic: list[tuple[int, int]] = []
    order = np.argsort(C.ravel(), kind="stable")
    ptr = 0
    total = len(order)
    while n_rows + n_cols > 1:
        while ptr < total:
            i, j = divmod(int(order[ptr]), m)
            if row_alive[i] and col_alive[j]:
                break
            ptr += 1
        else:
            raise RuntimeError("ran out of live cells before the basis was complete")
        f = min(rd[i], rs[j])
        F[i, j] = f
        basic.append((i, j))
        rd[i] -= f
        rs[j] -= f
        if n_rows + n_cols == 2:
            break
        kill_col = rs[j] <= rd[i]
        # never retire the last line of one side while the other side still
        # has several: that would strand live rows with no live columns
        if kill_col and n_cols == 1:
            kill_col = False
        elif not kill_col and n_rows == 1:
            kill_col = True
        if kill_col:
            col_alive[j] = False
            n_cols -= 1
        else:
            row_alive[i] = False
            n_rows -= 1
    return F, basic


class _Simplex:
    """Primal transportation simplex over a k x m dense cost array.

    Entering arcs are chosen by most-negative reduced cost with lowest linear
    index on ties; a run of degenerate pivots switches to Bland's rule until
    the objective moves again, which rules out cycling.
    """

    def __init__(self, costs: np.ndarray, demand: np.ndarray, supply: np.ndarray, tols: Tolerances):
        self.C = costs
        self.k, self.m = costs.shape
        self.n = self.k + self.m
        self.demand = demand
        self.supply = supply
        self.tols = tols
        self.scale = max(1.0, float(np.abs(costs).max()))
        self.eps_opt = 1e-11 * self.scale
        self.flow_tol = 1e-12 * max(1.0, float(supply.max()))
        self.F, basic = _matrix_minimum(costs, demand, supply)
        self.basis = np.zeros((self.k, self.m), dtype=bool)
        self.adj: list[set[int]] = [set() for _ in range(self.n)]
        for i, j in basic:
            self.basis[i, j] = True
            self.adj[i].add(self.k + j)
            self.adj[self.k + j].add(i)

    # tree helpers ---------------------------------------------------------

    def _tree(self) -> tuple[np.ndarray, np.ndarray, list[int]]:
        """Parents and BFS order of the basis tree rooted at cluster 0.

        Nodes 0..k-1 are clusters, k..k+m-1 are units.
        """
        adj = self.adj
        parent = np.full(self.n, -1, dtype=int)
        seen = np.zeros(self.n, dtype=bool)
        order: list[int] = []
        dq = deque([0])
        seen[0] = True
        while dq:
            v = dq.popleft()
            order.append(v)
            for w in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    parent[w] = v
                    dq.append(w)
        if len(order) != self.n:
            raise RuntimeError("basis is not a spanning tree")
        return parent, seen, order

    def _potentials(self, parent: np.ndarray, order: list[int]) -> np.ndarray:
        pot = np.zeros(self.n)
        for v in order[1:]:
            p = parent[v]
            if v >= self.k:  # unit below a cluster
                pot[v] = self.C[p, v - self.k] - pot[p]
            else:  # cluster below a unit
                pot[v] = self.C[v, parent[v] - self.k] - pot[p]
        return pot

    def _cycle(self, parent: np.ndarray, enter: tuple[int, int]) -> list[tuple[int, int, int]]:
        """Arcs of the pivot cycle as (i, j, sign); sign +1 raises flow."""
        ie, je = enter
        a, b = ie, self.k + je
        depth = {}
        for node in (a, b):
            d = 0
            v = node
            while v != -1:
                d += 1
                v = parent[v]
            depth[node] = d
        pa, pb = a, b
        path_a: list[int] = [pa]
        path_b: list[int] = [pb]
        da, db = depth[a], depth[b]
        while da > db:
            pa = parent[pa]
            path_a.append(pa)
            da -= 1
        while db > da:
            pb = parent[pb]
            path_b.append(pb)
            db -= 1
        while pa != pb:
            pa = parent[pa]
            pb = parent[pb]
            path_a.append(pa)
            path_b.append(pb)
        # walk unit-side path then reversed cluster-side path; signs alternate
        # starting at -1 on the arc incident to the entering unit
        nodes = path_b[:-1] + path_a[::-1]  # from unit node to cluster node
        arcs: list[tuple[int, int, int]] = [(ie, je, +1)]
        sign = -1
        for u, v in zip(nodes, nodes[1:]):
            i, j = (v, u - self.k) if u >= self.k else (u, v - self.k)
            arcs.append((i, j, sign))
            sign = -sign
        return arcs

    # main loop ------------------------------------------------------------

    def run(self, max_pivots: int = 500_000) -> None:
        bland = False
        stagnant = 0
        for _ in range(max_pivots):
            parent, _, order = self._tree()
            pot = self._potentials(parent, order)
            rc = self.C - pot[: self.k][:, None] - pot[self.k :][None, :]
            rc_masked = np.where(self.basis, np.inf, rc)
            if bland:
                cand = np.flatnonzero(rc_masked.ravel() < -self.eps_opt)
                if cand.size == 0:
                    return
                flat = int(cand[0])
            else:
                flat = int(rc_masked.argmin())
                if rc_masked.ravel()[flat] >= -self.eps_opt:
                    return
            enter = (flat // self.m, flat % self.m)
            arcs = self._cycle(parent, enter)
            minus = [(i, j) for i, j, s in arcs if s < 0]
            theta = min(self.F[i, j] for i, j in minus)
            leave = min((i, j) for i, j in minus if self.F[i, j] <= theta + self.flow_tol)
            for i, j, s in arcs:
                self.F[i, j] = max(0.0, self.F[i, j] + s * theta)
            self.F[leave] = 0.0
            self.basis[enter] = True
            self.basis[leave] = False
            self.adj[enter[0]].add(self.k + enter[1])
            self.adj[self.k + enter[1]].add(enter[0])
            self.adj[leave[0]].discard(self.k + leave[1])
            self.adj[self.k + leave[1]].discard(leave[0])
            if theta <= self.flow_tol:
                stagnant += 1
                if stagnant > self.n:
                    bland = True
            else:
                stagnant = 0
                bland = False
        raise RuntimeError("pivot limit exceeded")

    def duals(self) -> tuple[np.ndarray, np.ndarray]:
        parent, _, order = self._tree()
        pot = self._potentials(parent, order)
        return pot[: self.k].copy(), pot[self.k :].copy()  # (v_clusters, u_units)


# ---------------------------------------------------------------------------
# optimal-face exploration and dual canonicalization


def _support_components(k: int, m: int, arcs: Iterable[tuple[int, int]]) -> tuple[np.ndarray, int]:
    """Connected-component labels over clusters (0..k-1) and units (k..k+m-1)."""
    label = np.arange(k + m)

    def find(x: int) -> int:
        while label[x] != x:
            label[x] = label[label[x]]
            x = label[x]
        return x

    for i, j in arcs:
        a, b = find(i), find(k + j)
        if a != b:
            label[max(a, b)] = min(a, b)
    roots = np.array([find(x) for x in range(k + m)])
    uniq = {r: c for c, r in enumerate(sorted(set(roots.tolist())))}
    return np.array([uniq[r] for r in roots]), len(uniq)


def _maximal_face_flows(
    F: np.ndarray, tight: np.ndarray, flow_tol: float
) -> np.ndarray:
    """Grow a face point until its support is the union of all optimal supports.

    Any optimal solution lives on the tight (zero reduced cost) arcs.  An arc
    can carry flow in some optimal solution iff the residual graph over tight
    arcs contains an augmenting cycle through it; pushing half the bottleneck
    keeps previously positive arcs positive, so one fixpoint sweep per
    discovery round suffices.
    """
    k, m = F.shape
    F = F.copy()
    tight_rows: list[np.ndarray] = [np.flatnonzero(tight[i]) for i in range(k)]
    changed = True
    while changed:
        changed = False
        for i in range(k):
            for j in np.flatnonzero(tight[i]).tolist():
                if F[i, j] > flow_tol:
                    continue
                cyc = _residual_path(F, tight, tight_rows, i, j, flow_tol)
                if cyc is None:
                    continue
                theta = 0.5 * min(F[a, b] for a, b, s in cyc if s < 0)
                F[i, j] += theta
                for a, b, s in cyc:
                    F[a, b] = max(0.0, F[a, b] + s * theta)
                changed = True
    return F


def _residual_path(
    F: np.ndarray,
    tight: np.ndarray,
    tight_rows: list[np.ndarray],
    i0: int,
    j0: int,
    flow_tol: float,
) -> Optional[list[tuple[int, int, int]]]:
    """BFS a residual path from unit j0 back to cluster i0 over tight arcs.

    Cluster-to-unit hops may use any tight arc (flow increase); unit-to-cluster
    hops need positive flow (decrease).  Returns the cycle arcs excluding the
    seed arc (i0, j0), with +1 for increases.
    """
    k, m = F.shape
    prev_unit: dict[int, int] = {}
    prev_cluster: dict[int, int] = {}
    dq: deque[tuple[str, int]] = deque([("u", j0)])
    seen_u = {j0}
    seen_c: set[int] = set()
    while dq:
        side, x = dq.popleft()
        if side == "u":
            for i in np.flatnonzero(tight[:, x] & (F[:, x] > flow_tol)).tolist():
                if i in seen_c:
                    continue
                seen_c.add(i)
                prev_cluster[i] = x
                if i == i0:
                    return _rebuild_cycle(prev_unit, prev_cluster, i0, j0)
                dq.append(("c", i))
        else:
            for j in tight_rows[x].tolist():
                if j in seen_u:
                    continue
                seen_u.add(j)
                prev_unit[j] = x
                dq.append(("u", j))
    return None


def _rebuild_cycle(
    prev_unit: dict[int, int], prev_cluster: dict[int, int], i0: int, j0: int
) -> list[tuple[int, int, int]]:
    arcs: list[tuple[int, int, int]] = []
    i = i0
    while True:
        j = prev_cluster[i]
        arcs.append((i, j, -1))  # unit j fed cluster i: decrease
        if j == j0:
            return arcs
        i = prev_unit[j]
        arcs.append((i, j, +1))  # cluster i reached unit j: increase


def _min_mean_cycle(p: int, edges: list[tuple[int, int, float]]) -> Optional[float]:
    """Karp's minimum mean cycle; None if the digraph is acyclic."""
    INF = float("inf")
    D = np.full((p + 1, p), INF)
    D[0, :] = 0.0
    for t in range(1, p + 1):
        for a, b, w in edges:
            if D[t - 1, a] + w < D[t, b]:
                D[t, b] = D[t - 1, a] + w
    best = None
    for v in range(p):
        if not np.isfinite(D[p, v]):
            continue
        worst = max(
            (D[p, v] - D[t, v]) / (p - t) for t in range(p) if np.isfinite(D[t, v])
        )
        best = worst if best is None else min(best, worst)
    return best


def _canonical_duals(
    C: np.ndarray,
    v: np.ndarray,
    u: np.ndarray,
    support_arcs: list[tuple[int, int]],
    allowed: np.ndarray,
    tols: Tolerances,
) -> tuple[np.ndarray, np.ndarray]:
    """Center the dual prices on the dual optimal face.

    Components of the union-of-supports graph may be shifted against each
    other without losing optimality; the shift is chosen to maximize the
    smallest reduced cost over non-support allowed arcs (a minimum-mean-cycle
    computation on the component digraph), which is deterministic and makes
    strict complementarity hold with the largest possible margin.
    """
    k, m = C.shape
    label, p = _support_components(k, m, support_arcs)
    if p == 1:
        return v, u
    rc = np.maximum(0.0, C - v[:, None] - u[None, :])
    in_support = np.zeros((k, m), dtype=bool)
    for i, j in support_arcs:
        in_support[i, j] = True
    w_edges: dict[tuple[int, int], float] = {}
    for i in range(k):
        for j in range(m):
            if in_support[i, j] or not allowed[i, j]:
                continue
            a, b = int(label[i]), int(label[k + j])
            if a == b:
                continue
            key = (a, b)
            w_edges[key] = min(w_edges.get(key, float("inf")), float(rc[i, j]))
    edges = [(a, b, w) for (a, b), w in w_edges.items()]
    if not edges:
        return v, u
    s_star = _min_mean_cycle(p, edges)
    if s_star is None:
        s_star = 1.0  # acyclic constraint graph: any positive margin works
    s_star = max(0.0, s_star)
    # Bellman-Ford potentials from a virtual source (t = 0 everywhere)
    t = np.zeros(p)
    for _ in range(p + 1):
        moved = False
        for a, b, w in edges:
            cand = t[a] + w - s_star
            if cand < t[b] - 1e-15 * max(1.0, abs(t[b])):
                t[b] = cand
                moved = True
        if not moved:
            break
    t -= t[int(label[0])]
    v_new = v - t[label[:k]]
    u_new = u + t[label[k:]]
    return v_new, u_new


# ---------------------------------------------------------------------------
# public entry points


def _prepare(problem: TransportProblem, tols: Tolerances):
    """Normalize capacities, apply pins, and big-M the exclusions."""
    w = problem.weights
    cap = problem.capacities.astype(float).copy()
    total_w = math.fsum(w.tolist())
    total_c = math.fsum(cap.tolist())
    rel = abs(total_c - total_w) / total_w
    if rel > tols.capacity_rescale_rel:
        raise InfeasibleError(f"capacity sum differs from weight sum by {rel:.3e}")
    if total_c != total_w:
        cap *= total_w / total_c
        cap[int(cap.argmax())] += total_w - math.fsum(cap.tolist())

    pinned = {j: i for i, j in problem.pins}
    for j, i in pinned.items():
        cap[i] -= w[j]
        if cap[i] < -1e-9 * max(1.0, w.max()):
            raise InfeasibleError(f"pins exceed capacity of cluster {i}")
        cap[i] = max(cap[i], 0.0)
    active = [j for j in range(problem.m) if j not in pinned]

    scale = max(1.0, float(np.abs(problem.costs).max()))
    big_m = (problem.k + problem.m + 1) * (2.0 * scale + 1.0)
    C = problem.costs[:, active].copy()
    allowed = np.ones_like(C, dtype=bool)
    for i, j in problem.exclusions:
        if j in pinned:
            continue
        jj = active.index(j)
        C[i, jj] = big_m
        allowed[i, jj] = False
    return C, allowed, cap, active, pinned, scale


def _extract_clustering(
    problem: TransportProblem,
    F: np.ndarray,
    active: list[int],
    pinned: dict[int, int],
    flow_tol: float,
) -> FractionalClustering:
    entries: dict[tuple[int, int], float] = {}
    for jj, j in enumerate(active):
        col = F[:, jj]
        pos = np.flatnonzero(col > flow_tol)
        total = float(col[pos].sum())
        if total <= 0:
            raise RuntimeError(f"unit {j} received no flow")
        for i in pos.tolist():
            entries[(int(i), j)] = float(col[i] / total)
    for j, i in pinned.items():
        entries[(i, j)] = 1.0
    return FractionalClustering(k=problem.k, m=problem.m, entries=entries)


def _objective(problem: TransportProblem, clustering: FractionalClustering) -> float:
    return math.fsum(
        v * problem.weights[j] * problem.costs[i, j]
        for (i, j), v in sorted(clustering.entries.items())
    )


def _finish_duals(
    problem: TransportProblem,
    v: np.ndarray,
    u: np.ndarray,
    active: list[int],
    pinned: dict[int, int],
) -> Duals:
    mu = -v
    eta = np.zeros(problem.m)
    for jj, j in enumerate(active):
        eta[j] = u[jj]
    shift = float(mu.min())
    mu -= shift
    eta -= shift
    for j in pinned:
        cands = [
            problem.costs[i, j] + mu[i]
            for i in range(problem.k)
            if (i, j) not in problem.exclusions
        ]
        eta[j] = min(cands) if cands else 0.0
    return Duals(mu=tuple(float(x) for x in mu), eta=tuple(float(x) for x in eta))


def _solve_internal(problem: TransportProblem, tols: Tolerances, want_interior: bool) -> SolveResult:
    C, allowed, cap, active, pinned, scale = _prepare(problem, tols)
    w_active = problem.weights[active]

    if not active:  # everything pinned
        if float(np.abs(cap).max(initial=0.0)) > 1e-9 * max(1.0, problem.weights.max()):
            raise InfeasibleError("pins fix all units but capacities are not met")
        clustering = FractionalClustering(
            k=problem.k, m=problem.m, entries={(i, j): 1.0 for j, i in pinned.items()}
        )
        duals = _finish_duals(problem, np.zeros(problem.k), np.zeros(0), active, pinned)
        return SolveResult(clustering, duals, _objective(problem, clustering), True, clustering.assignment_edges())

    sx = _Simplex(C, cap, w_active, tols)
    sx.run()
    if np.any(~allowed & (sx.F > sx.flow_tol)):
        raise InfeasibleError("exclusions leave no feasible assignment")
    v, u = sx.duals()

    pos_arcs = [(int(i), int(j)) for i, j in zip(*np.nonzero(sx.F > sx.flow_tol))]
    _, ncomp = _support_components(sx.k, sx.m, pos_arcs)
    F_out = sx.F
    support_arcs = pos_arcs
    if ncomp > 1 or want_interior:
        eps_face = tols.duals * max(1.0, scale)
        rc = C - v[:, None] - u[None, :]
        tight = allowed & (rc <= eps_face)
        F_max = _maximal_face_flows(sx.F, tight, sx.flow_tol)
        support_arcs = [(int(i), int(j)) for i, j in zip(*np.nonzero(F_max > sx.flow_tol))]
        v, u = _canonical_duals(C, v, u, support_arcs, allowed, tols)
        if want_interior:
            F_out = F_max

    duals = _finish_duals(problem, v, u, active, pinned)
    clustering = _extract_clustering(problem, F_out, active, pinned, sx.flow_tol)
    forest = clustering.assignment_edges()
    is_vertex = _is_acyclic(problem.k, problem.m, forest)
    return SolveResult(clustering, duals, _objective(problem, clustering), is_vertex, forest)


def _is_acyclic(k: int, m: int, arcs: Sequence[tuple[int, int]]) -> bool:
    label = list(range(k + m))

    def find(x: int) -> int:
        while label[x] != x:
            label[x] = label[label[x]]
            x = label[x]
        return x

    for i, j in arcs:
        a, b = find(i), find(k + j)
        if a == b:
            return False
        label[max(a, b)] = min(a, b)
    return True


def solve(problem: TransportProblem, tols: Tolerances = DEFAULT_TOLS) -> SolveResult:
    """Optimal extremal clustering plus canonical dual prices.

    Complementary slackness holds between the returned clustering and duals;
    with pins or exclusions, optimality and the prices refer to the
    restricted polytope.
    """
    return _solve_internal(problem, tols, want_interior=False)


def relative_interior_solution(problem: TransportProblem, tols: Tolerances = DEFAULT_TOLS) -> SolveResult:
    """A point in the relative interior of the optimal face.

    The support of the returned clustering is the union of supports over all
    optimal solutions, so together with the canonical duals strict
    complementarity holds: every tight arc carries positive fraction.
    """
    return _solve_internal(problem, tols, want_interior=True)


# ---------------------------------------------------------------------------
# perturbations and the exhaustive oracle


def perturb_sites(model: DistanceModel, epsilon: float, seed: int) -> DistanceModel:
    """Move point sites by independent uniform offsets, total length < epsilon.

    Used to force a unique optimum for strictly convex point metrics;
    undefined (and rejected) for graph metrics.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if model.uses_graph():
        raise ValueError("site perturbation is undefined for graph metrics")
    rng = np.random.default_rng(seed)
    budget = epsilon / (2.0 * model.k)
    sites = []
    for s in model.point_sites():
        ang = rng.uniform(0.0, 2.0 * np.pi)
        rad = rng.uniform(0.0, budget)
        sites.append((float(s[0] + rad * np.cos(ang)), float(s[1] + rad * np.sin(ang))))
    return model.with_sites(tuple(sites))


def jitter_edge_lengths(graph, epsilon: float, seed: int):
    """Multiplicative edge-length jitter for graph metrics.

    Heuristic only: unlike site perturbation for strictly convex norms there
    is no uniqueness guarantee; shortest-path ties can survive or reappear.
    """
    from .model import AdjacencyGraph

    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    rng = np.random.default_rng(seed)
    new_lengths = {}
    for (a, b) in sorted(graph.lengths, key=lambda e: (str(e[0]), str(e[1]))):
        new_lengths[(a, b)] = graph.lengths[(a, b)] * (1.0 + float(rng.uniform(0.0, epsilon)))
    return AdjacencyGraph(lengths=new_lengths)


def brute_force_oracle(
    problem: TransportProblem, size_guard: float = 1e7
) -> tuple[float, tuple[tuple[int, ...], ...]]:
    """Exhaustive minimum over integer assignments meeting capacities exactly.

    Requires unit weights and integral capacities, where the LP optimum is
    known to be integral, so this validates the simplex end to end.
    """
    w = problem.weights
    cap = problem.capacities
    if not np.allclose(w, 1.0, atol=1e-12):
        raise ValueError("oracle needs unit weights")
    cap_int = np.rint(cap).astype(int)
    if not np.allclose(cap, cap_int, atol=1e-9):
        raise ValueError("oracle needs integer capacities")
    k, m = problem.k, problem.m
    if k**m > size_guard:
        raise ValueError(f"k^m = {k**m:g} exceeds the oracle size guard")

    best: list[float] = [math.inf]
    argmins: list[tuple[int, ...]] = []
    assign: list[int] = []
    remaining = cap_int.tolist()
    pinned = {j: i for i, j in problem.pins}

    def recurse(j: int) -> None:
        if j == m:
            if any(r != 0 for r in remaining):
                return
            cost = math.fsum(problem.costs[assign[jj], jj] for jj in range(m))
            eps = 1e-12 * max(1.0, abs(cost))
            if cost < best[0] - eps:
                best[0] = cost
                argmins.clear()
                argmins.append(tuple(assign))
            elif cost <= best[0] + eps:
                argmins.append(tuple(assign))
            return
        for i in range(k):
            if remaining[i] == 0 or (i, j) in problem.exclusions:
                continue
            if j in pinned and pinned[j] != i:
                continue
            remaining[i] -= 1
            assign.append(i)
            recurse(j + 1)
            assign.pop()
            remaining[i] += 1

    recurse(0)
    if not argmins:
        raise InfeasibleError("no integer assignment meets the capacities")
    return best[0], tuple(argmins)
