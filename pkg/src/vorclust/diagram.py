"""Generalized Voronoi cells and clustering/diagram verification.

A diagram is feasible for a clustering when every (fractionally) assigned
unit lies in its cluster's cell, and supports it when cell membership and
support coincide exactly.  Both verdicts reduce to (strict) complementary
slackness between the clustering and the price vector behind the diagram.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .config import DEFAULT_TOLS, Tolerances
from .distance import (
    DistanceModel,
    Euclidean,
    GraphMetric,
    Square,
    cluster_centroids,
    cost_matrix,
    shortest_path_dag,
    shortest_paths,
)
from .model import (
    FractionalClustering,
    Instance,
    UnitId,
    connected_components,
)


@dataclass(frozen=True)
class Cells:
    membership: tuple[tuple[int, ...], ...]  # cluster indices per unit
    eta: tuple[float, ...]  # minimal f-value per unit
    tolerance: float

    def units_of(self, i: int) -> tuple[int, ...]:
        return tuple(j for j, members in enumerate(self.membership) if i in members)


@dataclass(frozen=True)
class StarShapedness:
    star_shaped: bool
    witnesses: tuple[tuple[int, UnitId, UnitId], ...]  # (cluster, unit, intermediate)


@dataclass(frozen=True)
class DiagramReport:
    feasible: bool
    supports: bool
    star_shaped: Optional[bool]
    connected: Optional[tuple[bool, ...]]
    violations: tuple[tuple[int, int, str], ...]
    witnesses: tuple[tuple[int, UnitId, UnitId], ...]
    tolerance: float


def compute_cells(instance: Instance, model: DistanceModel, tols: Tolerances = DEFAULT_TOLS) -> Cells:
    """Per-unit cell membership under f_i = h(d_i) + mu_i, ties within a band."""
    f = cost_matrix(instance, model, tols) + np.asarray(model.mu)[:, None]
    eta = f.min(axis=0)
    members = tuple(
        tuple(int(i) for i in np.flatnonzero(f[:, j] <= eta[j] + tols.cell_tie))
        for j in range(instance.m)
    )
    return Cells(membership=members, eta=tuple(float(x) for x in eta), tolerance=tols.cell_tie)


def check_star_shaped(
    instance: Instance,
    clustering: FractionalClustering,
    sites: Sequence[UnitId],
    tols: Tolerances = DEFAULT_TOLS,
) -> StarShapedness:
    """Is every cluster support closed under shortest paths to its site?

    Checks the full predecessor DAG: every vertex on every shortest path from
    the site to a supported unit must itself be supported.  Failures come
    back as (cluster, unit, intermediate) witnesses.
    """
    if instance.graph is None:
        raise ValueError("star-shapedness needs an adjacency graph")
    if len(sites) != clustering.k:
        raise ValueError("one site per cluster required")
    ids = [u.id for u in instance.units]
    id_set = set(ids)
    witnesses: list[tuple[int, UnitId, UnitId]] = []
    for i, site in enumerate(sites):
        if site not in id_set:
            raise ValueError(f"site {site!r} is not a unit")
        supp = {ids[j] for j in clustering.support(i)}
        sp = shortest_paths(instance.graph, site, ids, tols)
        dag = shortest_path_dag(instance.graph, site, ids, tols)
        # clean(v): v supported and every shortest-path ancestor supported;
        # predecessors are strictly closer, so distance order is topological
        by_distance = sorted(ids, key=lambda v: (sp.distance[v], str(v)))
        clean: dict[UnitId, bool] = {}
        for v in by_distance:
            clean[v] = v in supp and all(clean[p] for p in dag[v])
        for x in sorted(supp, key=str):
            if clean[x]:
                continue
            # walk down the DAG to an unsupported intermediate vertex
            v = x
            witness = None
            while witness is None:
                nxt = None
                for p in dag[v]:
                    if p not in supp:
                        witness = p
                        break
                    if not clean[p]:
                        nxt = p
                        break
                if witness is None:
                    v = nxt  # type: ignore[assignment]
            witnesses.append((i, x, witness))
    return StarShapedness(star_shaped=not witnesses, witnesses=tuple(witnesses))


def cluster_connectivity(instance: Instance, clustering: FractionalClustering) -> tuple[bool, ...]:
    """Per cluster: is the subgraph induced by the support connected?"""
    if instance.graph is None:
        raise ValueError("connectivity needs an adjacency graph")
    ids = [u.id for u in instance.units]
    out = []
    for i in range(clustering.k):
        supp = [ids[j] for j in clustering.support(i)]
        if not supp:
            out.append(False)
            continue
        comps = connected_components(supp, instance.graph)
        out.append(len(comps) == 1)
    return tuple(out)


def verify(
    instance: Instance,
    model: DistanceModel,
    clustering: FractionalClustering,
    tols: Tolerances = DEFAULT_TOLS,
) -> DiagramReport:
    """Full feasibility/support report for a (model, clustering) pair.

    feasible: support of each cluster inside its cell; supports: additionally
    no unit sits in a cell without carrying a fraction of that cluster.  For
    graph metrics the report also carries star-shapedness (with witnesses)
    and per-cluster connectivity of the induced subgraphs.
    """
    if clustering.k != model.k or clustering.m != instance.m:
        raise ValueError("dimension mismatch between clustering, model and instance")
    cells = compute_cells(instance, model, tols)
    member_sets = [set(ms) for ms in cells.membership]
    violations: list[tuple[int, int, str]] = []
    for (i, j), v in sorted(clustering.entries.items()):
        if i not in member_sets[j]:
            violations.append((i, j, f"assigned fraction {v:.6g} outside cell"))
    feasible = not violations
    supports = feasible
    for j, members in enumerate(member_sets):
        for i in sorted(members):
            if clustering.value(i, j) <= 0:
                supports = False
                violations.append((i, j, "cell member without assigned fraction"))
    star: Optional[StarShapedness] = None
    connected: Optional[tuple[bool, ...]] = None
    if instance.graph is not None:
        connected = cluster_connectivity(instance, clustering)
    if all(isinstance(mtr, GraphMetric) for mtr in model.metrics):
        star = check_star_shaped(instance, clustering, model.sites, tols)
    return DiagramReport(
        feasible=feasible,
        supports=supports,
        star_shaped=None if star is None else star.star_shaped,
        connected=connected,
        violations=tuple(violations),
        witnesses=() if star is None else star.witnesses,
        tolerance=tols.cell_tie,
    )


@dataclass(frozen=True)
class CentroidalReport:
    centroidal: bool
    gaps: tuple[float, ...]


def check_centroidal(
    instance: Instance,
    model: DistanceModel,
    clustering: FractionalClustering,
    tols: Tolerances = DEFAULT_TOLS,
) -> CentroidalReport:
    """Do the sites coincide with the cluster centroids (within a diameter-relative gap)?"""
    if model.uses_graph():
        raise ValueError("centroidality is defined for point metrics only")
    cents = cluster_centroids(instance, clustering)
    sites = model.point_sites()
    gaps = np.hypot(*(sites - cents).T)
    bound = tols.centroidal_rel * max(instance.diameter(), 1e-300)
    return CentroidalReport(centroidal=bool(np.all(gaps <= bound)), gaps=tuple(float(g) for g in gaps))


# ---------------------------------------------------------------------------
# power-cell polygons (Euclidean squared metric only)


@dataclass(frozen=True)
class PowerCellPolygons:
    polygons: tuple[tuple[tuple[float, float], ...], ...]
    bounding_box: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax


def _clip_halfplane(
    poly: list[tuple[float, float]], a: tuple[float, float], b: float
) -> list[tuple[float, float]]:
    """Keep the part of a convex polygon with a.x * x + a.y * y <= b."""
    if not poly:
        return []
    out: list[tuple[float, float]] = []
    n = len(poly)
    for idx in range(n):
        p, q = poly[idx], poly[(idx + 1) % n]
        fp = a[0] * p[0] + a[1] * p[1] - b
        fq = a[0] * q[0] + a[1] * q[1] - b
        if fp <= 1e-12:
            out.append(p)
        if (fp < -1e-12 and fq > 1e-12) or (fp > 1e-12 and fq < -1e-12):
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def power_cells_2d(
    model: DistanceModel,
    bounding_box: tuple[float, float, float, float],
) -> PowerCellPolygons:
    """Convex cell polygons of a power diagram clipped to a box.

    Cell i is the intersection of the halfplanes where site i power-dominates
    each other site; the separating constraint between two sites is linear.
    Coincident sites: the smaller additive weight wins the shared location,
    and the loser's cell is empty.
    """
    if not all(isinstance(mtr, Euclidean) for mtr in model.metrics) or not isinstance(model.transform, Square):
        raise ValueError("power cells need Euclidean metrics with the squared transform")
    xmin, ymin, xmax, ymax = bounding_box
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("degenerate bounding box")
    sites = model.point_sites()
    mu = np.asarray(model.mu)
    box = [(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)]
    polys = []
    for i in range(model.k):
        poly = list(box)
        for l in range(model.k):
            if l == i or not poly:
                continue
            d = sites[l] - sites[i]
            if float(np.hypot(*d)) == 0.0:
                if mu[i] > mu[l]:
                    poly = []
                continue
            # |x-s_i|^2 + mu_i <= |x-s_l|^2 + mu_l
            a = (2.0 * float(d[0]), 2.0 * float(d[1]))
            b = float(sites[l] @ sites[l] - sites[i] @ sites[i] + mu[l] - mu[i])
            poly = _clip_halfplane(poly, a, b)
        polys.append(tuple((float(x), float(y)) for x, y in poly))
    return PowerCellPolygons(polygons=tuple(polys), bounding_box=tuple(float(v) for v in bounding_box))
