"""End-to-end runs: site initialization, structural optimization, solve,
rounding and evaluation for each diagram family."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .config import DEFAULT_TOLS, Tolerances
from .distance import (
    DistanceModel,
    Euclidean,
    GraphMetric,
    Identity,
    cost_matrix,
    estimate_anisotropy,
    uniform_model,
)
from .evaluate import summarize
from .io import InstanceDocument, assignments_payload
from .model import FractionalClustering, Instance, UnitId
from .rounding import reduce_to_vertex, round_connected, round_tree
from .siteopt import (
    LocalSearchConfig,
    balanced_kmeans,
    cluster_centroids,
    kmeanspp_sites,
    local_search_sites,
    multistart_balanced_kmeans,
    nearest_units_to_centroids,
)
from .solver import TransportProblem, relative_interior_solution, solve

APPROACHES = ("power", "anisotropic", "shortest-path", "awvd")


@dataclass(frozen=True)
class PipelineOptions:
    seed: int = 0
    epsilon: Optional[float] = None
    max_iter: int = 40
    restarts: int = 4
    neighborhood: int = 50
    pins: tuple[tuple[int, UnitId], ...] = ()
    excludes: tuple[tuple[int, UnitId], ...] = ()

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "epsilon": self.epsilon,
            "maxIter": self.max_iter,
            "restarts": self.restarts,
            "neighborhood": self.neighborhood,
            "pins": [[i, u] for i, u in sorted(self.pins, key=lambda t: (t[0], str(t[1])))],
            "excludes": [[i, u] for i, u in sorted(self.excludes, key=lambda t: (t[0], str(t[1])))],
        }


def _constraint_sets(instance: Instance, options: PipelineOptions) -> tuple[frozenset, frozenset]:
    pins = frozenset((i, instance.index_of(u)) for i, u in options.pins)
    excl = frozenset((i, instance.index_of(u)) for i, u in options.excludes)
    for i, j in pins | excl:
        if not 0 <= i < instance.k:
            raise ValueError(f"constraint cluster index {i} out of range")
    if pins & excl:
        raise ValueError("pin and exclusion on the same (cluster, unit)")
    pinned_units = [j for _, j in pins]
    if len(set(pinned_units)) != len(pinned_units):
        raise ValueError("at most one pin per unit")
    return pins, excl


def run_pipeline(
    document: InstanceDocument,
    approach: str,
    options: PipelineOptions = PipelineOptions(),
    tols: Tolerances = DEFAULT_TOLS,
) -> dict:
    """Produce a result document for one approach; deterministic under seed.

    Structural parameters (metrics and sites) are determined without operator
    constraints, so cluster labels stay put across constraint changes; pins
    and exclusions then restrict the final assignment solve and rounding.
    Without pins or exclusions the final phase reproduces the unconstrained
    optimization's own assignment.
    """
    if approach not in APPROACHES:
        raise ValueError(f"unknown approach {approach!r}; pick one of {APPROACHES}")
    instance = document.instance
    pins, excl = _constraint_sets(instance, options)
    model = structural_model(document, approach, options, tols)
    res, outcome = constrained_assignment(instance, approach, model, pins, excl, tols)
    model = model.with_mu(res.duals.mu)
    summary = summarize(instance, model, outcome.clustering, document.reference, tols)
    if model.uses_graph():
        sites_payload = list(model.sites)
    else:
        sites_payload = [list(s) for s in model.sites]
    return {
        "assignments": assignments_payload(instance, outcome.clustering),
        "mu": list(res.duals.mu),
        "sites": sites_payload,
        "summary": summary.as_dict(),
        "parameters": {"approach": approach, **options.as_dict()},
    }


def structural_model(
    document: InstanceDocument,
    approach: str,
    options: PipelineOptions,
    tols: Tolerances = DEFAULT_TOLS,
) -> DistanceModel:
    """Metrics and optimized sites for one approach (mu left at zero)."""
    instance = document.instance
    k = instance.k
    if approach == "power":
        trace = multistart_balanced_kmeans(
            instance, (Euclidean(),) * k, restarts=options.restarts, seed=options.seed,
            max_iter=options.max_iter, tols=tols,
        )
        return trace.final_model.with_mu((0.0,) * k)
    if approach == "anisotropic":
        if document.reference is None:
            raise ValueError("the anisotropic approach needs a reference clustering")
        est = estimate_anisotropy(instance, document.reference, tols)
        start = cluster_centroids(instance, document.reference)
        trace = balanced_kmeans(
            instance, tuple(map(tuple, start)), est.matrices, max_iter=options.max_iter, tols=tols,
        )
        return trace.final_model.with_mu((0.0,) * k)
    if approach == "shortest-path":
        if instance.graph is None:
            raise ValueError("the shortest-path approach needs an adjacency graph")
        if document.reference is not None:
            start_sites = nearest_units_to_centroids(instance, document.reference)
        else:
            start_sites = _units_at(instance, kmeanspp_sites(instance, k, options.seed))
        config = LocalSearchConfig(
            neighborhood=min(options.neighborhood, instance.m),
            max_iterations=options.max_iter,
            seed=options.seed,
        )
        best_sites, _ = local_search_sites(instance, start_sites, config, tols)
        return uniform_model(GraphMetric(), Identity(), best_sites)
    # awvd: additively weighted diagrams take the spread sites as given
    return uniform_model(Euclidean(), Identity(), kmeanspp_sites(instance, k, options.seed))


def constrained_assignment(
    instance: Instance,
    approach: str,
    model: DistanceModel,
    pins: frozenset,
    excl: frozenset,
    tols: Tolerances = DEFAULT_TOLS,
):
    """Solve the assignment program at fixed structural parameters, then round."""
    costs = cost_matrix(instance, model, tols)
    problem = TransportProblem(
        costs=costs, weights=instance.weights(), capacities=instance.capacity_array(),
        pins=pins, exclusions=excl,
    )
    if approach == "shortest-path":
        res = relative_interior_solution(problem, tols)
        outcome = round_connected(instance, res.clustering, model.sites, model.with_mu(res.duals.mu), tols)
    else:
        res = solve(problem, tols)
        outcome = round_tree(instance, _vertexify(instance, res.clustering), tols)
    return res, outcome


def _vertexify(instance: Instance, clustering: FractionalClustering) -> FractionalClustering:
    """Tree rounding needs an extremal input; cancel cycles if any survived."""
    try:
        from .rounding import _forest

        _forest(clustering)
        return clustering
    except Exception:
        return reduce_to_vertex(instance, clustering)


def _units_at(instance: Instance, points: Sequence[tuple[float, float]]) -> tuple[UnitId, ...]:
    pos = instance.positions()
    out: list[UnitId] = []
    taken: set[int] = set()
    for p in points:
        order = np.argsort(((pos - np.asarray(p)) ** 2).sum(axis=1), kind="stable")
        pick = next(int(j) for j in order if int(j) not in taken)
        taken.add(pick)
        out.append(instance.units[pick].id)
    return tuple(out)
