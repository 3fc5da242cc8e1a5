"""Evaluation metrics for clusterings: balance, compactness, plan similarity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import DEFAULT_TOLS, Tolerances
from .distance import DistanceModel, GraphMetric, cluster_centroids
from .diagram import check_star_shaped, cluster_connectivity
from .model import FractionalClustering, Instance, cluster_weights


@dataclass(frozen=True)
class EvaluationSummary:
    avg_deviation: float
    max_deviation: float
    moment_of_inertia: float
    changed_pairs_ratio: Optional[float]
    connectivity: Optional[tuple[bool, ...]]
    star_shaped: Optional[bool]

    def as_dict(self) -> dict:
        return {
            "avgDeviation": self.avg_deviation,
            "maxDeviation": self.max_deviation,
            "momentOfInertia": self.moment_of_inertia,
            "changedPairsRatio": self.changed_pairs_ratio,
            "connectivity": None if self.connectivity is None else list(self.connectivity),
            "starShaped": self.star_shaped,
        }


def moment_of_inertia(instance: Instance, clustering: FractionalClustering) -> float:
    """Weighted within-cluster squared Euclidean distance to the centroids."""
    cents = cluster_centroids(instance, clustering)  # rejects empty clusters
    w = instance.weights()
    pos = instance.positions()
    terms = []
    for (i, j), v in sorted(clustering.entries.items()):
        diff = pos[j] - cents[i]
        terms.append(v * w[j] * float(diff @ diff))
    return math.fsum(terms)


def changed_pairs(
    instance: Instance,
    reference: FractionalClustering,
    candidate: FractionalClustering,
    tols: Tolerances = DEFAULT_TOLS,
) -> float:
    """Weighted share of unit pairs that a candidate plan separates.

    Counts pairs sharing a reference cluster but landing in different
    candidate clusters, weighted by the product of unit weights, against the
    reference total of w(w-1)/2 per cluster.  Both clusterings must be
    integer.
    """
    for name, c in (("reference", reference), ("candidate", candidate)):
        if not c.is_integer(tols.integer_entry):
            raise ValueError(f"{name} clustering must be integer")
    w = instance.weights()
    ref_of = {j: i for (i, j) in reference.entries}
    cand_of = {j: i for (i, j) in candidate.entries}
    # pairs separated, per reference cluster: (W^2 - sum_g W_g^2)/2 with W_g
    # the weight landing in candidate group g
    sep_terms = []
    denom_terms = []
    for i in range(reference.k):
        members = reference.support(i)
        W = math.fsum(w[j] for j in members)
        groups: dict[int, float] = {}
        for j in members:
            groups[cand_of[j]] = groups.get(cand_of[j], 0.0) + w[j]
        sep_terms.append((W * W - math.fsum(g * g for g in groups.values())) / 2.0)
        denom_terms.append(W * (W - 1.0) / 2.0)
    denom = math.fsum(denom_terms)
    if denom <= 0:
        raise ValueError("reference clusters are too light for a pair count")
    return math.fsum(sep_terms) / denom


def summarize(
    instance: Instance,
    model: Optional[DistanceModel],
    clustering: FractionalClustering,
    reference: Optional[FractionalClustering] = None,
    tols: Tolerances = DEFAULT_TOLS,
) -> EvaluationSummary:
    """All headline metrics in one record.

    Deviations are measured against each cluster's own capacity, which
    coincides with deviation from the common average when capacities are
    uniform.
    """
    cw = cluster_weights(clustering, instance, allow_empty=True)
    cap = instance.capacity_array()
    rel = np.abs(cw - cap) / cap
    cpr = None
    if reference is not None and reference.is_integer(tols.integer_entry) and clustering.is_integer(tols.integer_entry):
        cpr = changed_pairs(instance, reference, clustering, tols)
    connectivity = None
    if instance.graph is not None:
        connectivity = cluster_connectivity(instance, clustering)
    star = None
    if (
        model is not None
        and all(isinstance(mtr, GraphMetric) for mtr in model.metrics)
        and all(not isinstance(s, tuple) for s in model.sites)
    ):
        star = check_star_shaped(instance, clustering, model.sites, tols).star_shaped
    try:
        moi = moment_of_inertia(instance, clustering)
    except ValueError:
        moi = float("nan")  # empty cluster: no centroid to measure against
    return EvaluationSummary(
        avg_deviation=float(rel.mean()),
        max_deviation=float(rel.max()),
        moment_of_inertia=moi,
        changed_pairs_ratio=cpr,
        connectivity=connectivity,
        star_shaped=star,
    )
