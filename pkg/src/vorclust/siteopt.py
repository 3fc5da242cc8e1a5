"""Structural parameter optimization: sites for the three diagram families.

Balanced k-means alternates a balanced assignment solve with recentering
sites at cluster centroids; the within-cluster squared distance never
increases because each half-step is itself a minimizer.  For shortest-path
models a deviation-driven local search swaps single sites against nearby
units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .config import DEFAULT_TOLS, Tolerances
from .distance import (
    DistanceModel,
    Euclidean,
    GraphMetric,
    Identity,
    Metric,
    Square,
    cluster_centroids,
    cost_matrix,
    shortest_paths,
    uniform_model,
)
from .model import FractionalClustering, Instance, UnitId, cluster_weights
from .rounding import ConnectivityBlockedError, round_connected
from .solver import SolveResult, TransportProblem, relative_interior_solution, solve


@dataclass(frozen=True)
class KMeansIteration:
    sites: tuple[tuple[float, float], ...]
    objective: float  # metric-weighted moment of inertia after recentering
    phi: float


@dataclass(frozen=True)
class KMeansTrace:
    iterations: tuple[KMeansIteration, ...]
    converged: bool
    final_model: DistanceModel
    final_result: SolveResult
    collisions_resolved: int


@dataclass(frozen=True)
class LocalSearchConfig:
    neighborhood: int = 50
    max_iterations: int = 20
    seed: int = 0


def compute_phi(instance: Instance, clustering: FractionalClustering, tols: Tolerances = DEFAULT_TOLS) -> float:
    """Capacity-weighted squared centroid norms, sum_i kappa_i |c(C_i)|^2.

    Defined for strongly balanced clusterings, where together with the
    moment of inertia it splits the fixed total sum_j w_j |x_j|^2.
    """
    cw = cluster_weights(clustering, instance)
    cap = instance.capacity_array()
    if np.any(np.abs(cw - cap) > tols.strong_balance * np.maximum(1.0, np.abs(cap))):
        raise ValueError("phi needs a strongly balanced clustering")
    w = instance.weights()
    pos = instance.positions()
    num = np.zeros((clustering.k, 2))
    for (i, j), v in clustering.entries.items():
        num[i] += v * w[j] * pos[j]
    cents = num / cap[:, None]
    return math.fsum(float(cap[i] * (cents[i] @ cents[i])) for i in range(clustering.k))


def _metric_moi(
    instance: Instance,
    clustering: FractionalClustering,
    metrics: Sequence[Metric],
    sites: np.ndarray,
) -> float:
    """Within-cluster squared metric distance to the given sites."""
    w = instance.weights()
    pos = instance.positions()
    total = 0.0
    terms = []
    for (i, j), v in clustering.entries.items():
        diff = pos[j] - sites[i]
        metric = metrics[i]
        if isinstance(metric, Euclidean):
            d2 = float(diff @ diff)
        else:
            M = metric.as_array()
            d2 = float(diff @ M @ diff)
        terms.append(v * w[j] * d2)
    return math.fsum(terms)


def balanced_kmeans(
    instance: Instance,
    initial_sites: Sequence[tuple[float, float]],
    metrics: Sequence[Metric],
    max_iter: int = 50,
    tol: float = 1e-9,
    tols: Tolerances = DEFAULT_TOLS,
    pins: frozenset = frozenset(),
    exclusions: frozenset = frozenset(),
) -> KMeansTrace:
    """Balanced k-means under the squared transform.

    Alternates a balanced transportation solve at the current sites with
    moving every site to its cluster's centroid, until the largest site
    movement drops below tol * diameter.  A final solve at the settled sites
    makes the returned prices consistent with the returned sites.
    """
    if any(isinstance(mtr, GraphMetric) for mtr in metrics):
        raise ValueError("balanced k-means needs point metrics")
    sites = np.array(initial_sites, dtype=float)
    if len(sites) != len(metrics):
        raise ValueError("one site per metric required")
    if len(np.unique(sites, axis=0)) != len(sites):
        raise ValueError("initial sites must be pairwise distinct")
    w = instance.weights()
    cap = instance.capacity_array()
    diam = max(instance.diameter(), 1e-300)
    collisions = 0
    iterations: list[KMeansIteration] = []
    converged = False
    model = DistanceModel(tuple(metrics), Square(), tuple(map(tuple, sites)), (0.0,) * len(metrics))
    for it in range(max_iter):
        model = model.with_sites(tuple(map(tuple, sites)))
        costs = cost_matrix(instance, model, tols)
        res = solve(TransportProblem(costs=costs, weights=w, capacities=cap, pins=pins, exclusions=exclusions), tols)
        cents = cluster_centroids(instance, res.clustering)
        cents, bumped = _resolve_collisions(cents, diam, it)
        collisions += bumped
        move = float(np.hypot(*(cents - sites).T).max())
        iterations.append(
            KMeansIteration(
                sites=tuple(map(tuple, cents)),
                objective=_metric_moi(instance, res.clustering, metrics, cents),
                phi=compute_phi(instance, res.clustering, tols),
            )
        )
        sites = cents
        if move < tol * diam:
            converged = True
            break
    model = model.with_sites(tuple(map(tuple, sites)))
    costs = cost_matrix(instance, model, tols)
    res = solve(TransportProblem(costs=costs, weights=w, capacities=cap, pins=pins, exclusions=exclusions), tols)
    final_model = model.with_mu(res.duals.mu)
    return KMeansTrace(
        iterations=tuple(iterations),
        converged=converged,
        final_model=final_model,
        final_result=res,
        collisions_resolved=collisions,
    )


def _resolve_collisions(cents: np.ndarray, diam: float, it: int) -> tuple[np.ndarray, int]:
    """Nudge coincident centroids apart; the solve cannot tell sites apart otherwise."""
    out = cents.copy()
    bumped = 0
    for i in range(len(out)):
        for l in range(i):
            if np.allclose(out[i], out[l], atol=1e-12 * diam):
                rng = np.random.default_rng(1_000_003 * (it + 1) + i)
                out[i] = out[i] + rng.uniform(-1e-6, 1e-6, size=2) * diam
                bumped += 1
    return out, bumped


def kmeanspp_sites(instance: Instance, k: int, seed: int) -> tuple[tuple[float, float], ...]:
    """Weighted farthest-point spread of initial sites over the unit positions."""
    rng = np.random.default_rng(seed)
    pos = instance.positions()
    w = instance.weights()
    first = int(rng.choice(len(pos), p=w / w.sum()))
    chosen = [first]
    d2 = ((pos - pos[first]) ** 2).sum(axis=1)
    while len(chosen) < k:
        probs = w * d2
        if probs.sum() <= 0:
            probs = np.ones(len(pos))
            probs[chosen] = 0.0
        nxt = int(rng.choice(len(pos), p=probs / probs.sum()))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((pos - pos[nxt]) ** 2).sum(axis=1))
    return tuple((float(x), float(y)) for x, y in pos[chosen])


def multistart_balanced_kmeans(
    instance: Instance,
    metrics: Sequence[Metric],
    restarts: int = 8,
    seed: int = 0,
    max_iter: int = 50,
    tol: float = 1e-9,
    tols: Tolerances = DEFAULT_TOLS,
    pins: frozenset = frozenset(),
    exclusions: frozenset = frozenset(),
) -> KMeansTrace:
    """Best-of-n seeded restarts, judged by the final metric moment of inertia."""
    best: Optional[KMeansTrace] = None
    best_obj = math.inf
    for r in range(restarts):
        sites = kmeanspp_sites(instance, len(metrics), seed + 7919 * r)
        trace = balanced_kmeans(instance, sites, metrics, max_iter, tol, tols, pins, exclusions)
        obj = trace.iterations[-1].objective if trace.iterations else math.inf
        if obj < best_obj - 1e-15:
            best = trace
            best_obj = obj
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# shortest-path site search


def nearest_units_to_centroids(
    instance: Instance, reference: FractionalClustering
) -> tuple[UnitId, ...]:
    """Starting sites for the graph case: units closest to reference centroids."""
    cents = cluster_centroids(instance, reference)
    pos = instance.positions()
    sites: list[UnitId] = []
    taken: set[int] = set()
    for i in range(reference.k):
        order = np.argsort(((pos - cents[i]) ** 2).sum(axis=1), kind="stable")
        pick = next(int(j) for j in order if int(j) not in taken)
        taken.add(pick)
        sites.append(instance.units[pick].id)
    return tuple(sites)


def _deviation_of_sites(
    instance: Instance,
    site_ids: Sequence[UnitId],
    tols: Tolerances,
    pins: frozenset,
    exclusions: frozenset,
    cost_cache: dict[UnitId, np.ndarray],
) -> float:
    """Max relative deviation after connected rounding at the given sites."""
    model = uniform_model(GraphMetric(), Identity(), tuple(site_ids))
    rows = []
    for s in site_ids:
        if s not in cost_cache:
            sp = shortest_paths(instance.graph, s, [u.id for u in instance.units], tols)
            cost_cache[s] = np.array([sp.distance[u.id] for u in instance.units])
        rows.append(cost_cache[s])
    costs = np.vstack(rows)
    res = relative_interior_solution(
        TransportProblem(costs=costs, weights=instance.weights(), capacities=instance.capacity_array(),
                         pins=pins, exclusions=exclusions),
        tols,
    )
    try:
        outcome = round_connected(instance, res.clustering, tuple(site_ids), None, tols)
    except (ConnectivityBlockedError, ValueError):
        return math.inf
    return outcome.epsilon_achieved


def local_search_sites(
    instance: Instance,
    initial_sites: Sequence[UnitId],
    config: LocalSearchConfig = LocalSearchConfig(),
    tols: Tolerances = DEFAULT_TOLS,
    pins: frozenset = frozenset(),
    exclusions: frozenset = frozenset(),
) -> tuple[tuple[UnitId, ...], float]:
    """First-improvement hill climbing over single-site swaps.

    Candidate replacements for a site are its R nearest units by graph
    distance; a move is kept as soon as it strictly lowers the maximum
    relative deviation of the rounded clustering.  Scan order is seeded, so
    runs are reproducible.
    """
    if instance.graph is None:
        raise ValueError("local site search needs an adjacency graph")
    if config.neighborhood > instance.m:
        raise ValueError("neighborhood size exceeds the number of units")
    rng = np.random.default_rng(config.seed)
    sites = list(initial_sites)
    cost_cache: dict[UnitId, np.ndarray] = {}
    unit_ids = [u.id for u in instance.units]
    best_dev = _deviation_of_sites(instance, sites, tols, pins, exclusions, cost_cache)
    for _ in range(config.max_iterations):
        if best_dev <= tols.strong_balance:
            break  # exact balance cannot be improved
        improved = False
        for si in rng.permutation(len(sites)):
            s = sites[si]
            if s not in cost_cache:
                sp = shortest_paths(instance.graph, s, unit_ids, tols)
                cost_cache[s] = np.array([sp.distance[u] for u in unit_ids])
            order = np.argsort(cost_cache[s], kind="stable")
            candidates = [unit_ids[int(j)] for j in order[: config.neighborhood]]
            for cand in candidates:
                if cand in sites:
                    continue
                trial = sites.copy()
                trial[si] = cand
                dev = _deviation_of_sites(instance, trial, tols, pins, exclusions, cost_cache)
                if dev < best_dev - 1e-12:
                    sites = trial
                    best_dev = dev
                    improved = True
                    break
            if improved:
                break
        if not improved:
            break
    return tuple(sites), best_dev
