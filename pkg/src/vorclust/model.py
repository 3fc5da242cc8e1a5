"""Core domain records: weighted point instances and fractional clusterings.

An instance is a finite set of weighted planar units, optionally carrying an
edge-weighted adjacency graph, together with a number of clusters and one
capacity per cluster.  A fractional clustering assigns each unit to clusters
with positive fractions summing to one; it is the central solution object
passed between the solver, the rounding procedures and the evaluators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .config import DEFAULT_TOLS, Tolerances

UnitId = Union[str, int]


@dataclass(frozen=True)
class Unit:
    id: UnitId
    position: tuple[float, float]
    weight: float

    def __post_init__(self) -> None:
        if not self.weight > 0:
            raise ValueError(f"unit {self.id!r}: weight must be positive, got {self.weight}")


def _canon_edge(a: UnitId, b: UnitId) -> tuple[UnitId, UnitId]:
    return (a, b) if str(a) <= str(b) else (b, a)


@dataclass(frozen=True)
class AdjacencyGraph:
    """Undirected graph over unit ids with positive edge lengths."""

    lengths: Mapping[tuple[UnitId, UnitId], float]

    def __post_init__(self) -> None:
        canon: dict[tuple[UnitId, UnitId], float] = {}
        for (a, b), d in dict(self.lengths).items():
            if a == b:
                raise ValueError(f"self-loop on unit {a!r}")
            if not d > 0:
                raise ValueError(f"edge ({a!r},{b!r}): length must be positive, got {d}")
            canon[_canon_edge(a, b)] = float(d)
        object.__setattr__(self, "lengths", canon)

    @property
    def edges(self) -> tuple[tuple[UnitId, UnitId], ...]:
        return tuple(sorted(self.lengths, key=lambda e: (str(e[0]), str(e[1]))))

    def neighbors(self) -> dict[UnitId, list[tuple[UnitId, float]]]:
        adj: dict[UnitId, list[tuple[UnitId, float]]] = {}
        for (a, b), d in self.lengths.items():
            adj.setdefault(a, []).append((b, d))
            adj.setdefault(b, []).append((a, d))
        for lst in adj.values():
            lst.sort(key=lambda t: str(t[0]))
        return adj


@dataclass(frozen=True)
class Instance:
    units: tuple[Unit, ...]
    k: int
    capacities: tuple[float, ...]
    graph: Optional[AdjacencyGraph] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "capacities", tuple(float(c) for c in self.capacities))
        ids = [u.id for u in self.units]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate unit ids")
        # m >= k is enforced by build_instance for loaded data; the raw
        # constructor stays permissive so degenerate worst-case examples
        # (one heavy unit split across k clusters) remain constructible
        if not (self.m >= 1 and self.k >= 1):
            raise ValueError(f"need m >= 1 and k >= 1, got m={self.m}, k={self.k}")
        if len(self.capacities) != self.k:
            raise ValueError("capacities length must equal k")

    @property
    def m(self) -> int:
        return len(self.units)

    def index_of(self, unit_id: UnitId) -> int:
        try:
            return self._index()[unit_id]
        except KeyError:
            raise KeyError(f"unknown unit id {unit_id!r}") from None

    def _index(self) -> dict[UnitId, int]:
        # cached on first use; the dataclass itself stays frozen
        cache = self.__dict__.get("_id_index")
        if cache is None:
            cache = {u.id: j for j, u in enumerate(self.units)}
            self.__dict__["_id_index"] = cache
        return cache

    def positions(self) -> np.ndarray:
        return np.array([u.position for u in self.units], dtype=float)

    def weights(self) -> np.ndarray:
        return np.array([u.weight for u in self.units], dtype=float)

    def capacity_array(self) -> np.ndarray:
        return np.array(self.capacities, dtype=float)

    def diameter(self) -> float:
        # bounding-box diagonal: within sqrt(2) of the true diameter, which
        # is all the tolerance scaling that uses it needs
        pos = self.positions()
        lo, hi = pos.min(axis=0), pos.max(axis=0)
        return float(np.hypot(*(hi - lo)))


def build_instance(
    units: Sequence[Unit],
    k: int,
    capacities: Optional[Sequence[float]] = None,
    graph: Optional[AdjacencyGraph] = None,
    tols: Tolerances = DEFAULT_TOLS,
) -> Instance:
    """Construct an instance, rescaling capacities onto the exact weight total.

    Missing capacities default to the uniform split.  A relative mismatch of
    at most ``tols.capacity_rescale_rel`` between the capacity sum and the
    weight sum is treated as input rounding noise and removed by proportional
    rescaling; anything larger is rejected.
    """
    if len(units) < k:
        raise ValueError(f"need at least as many units as clusters, got m={len(units)}, k={k}")
    total = float(sum(u.weight for u in units))
    if capacities is None:
        capacities = [total / k] * k
    cap = [float(c) for c in capacities]
    if any(not c > 0 for c in cap):
        raise ValueError("capacities must be positive")
    cap_sum = sum(cap)
    rel = abs(cap_sum - total) / total
    if rel > tols.capacity_rescale_rel:
        raise ValueError(
            f"capacity sum {cap_sum} deviates from weight sum {total} by {rel:.3e} (> {tols.capacity_rescale_rel})"
        )
    if cap_sum != total:
        cap = [c * total / cap_sum for c in cap]
    return Instance(units=tuple(units), k=k, capacities=tuple(cap), graph=graph)


@dataclass(frozen=True)
class FractionalClustering:
    """Sparse k-by-m assignment with unit column sums and positive entries."""

    k: int
    m: int
    entries: Mapping[tuple[int, int], float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", dict(self.entries))
        sums = [0.0] * self.m
        for (i, j), v in self.entries.items():
            if not (0 <= i < self.k and 0 <= j < self.m):
                raise ValueError(f"entry ({i},{j}) out of range")
            if not v > 0:
                raise ValueError(f"entry ({i},{j}) must be strictly positive, got {v}")
            sums[j] += v
        bad = [j for j, s in enumerate(sums) if abs(s - 1.0) > DEFAULT_TOLS.column_sum]
        if bad:
            raise ValueError(f"columns {bad[:5]} do not sum to 1")

    @staticmethod
    def from_dense(matrix: np.ndarray, drop_below: float = 0.0) -> "FractionalClustering":
        matrix = np.asarray(matrix, dtype=float)
        k, m = matrix.shape
        entries = {
            (int(i), int(j)): float(matrix[i, j])
            for i, j in zip(*np.nonzero(matrix > drop_below))
        }
        return FractionalClustering(k=k, m=m, entries=entries)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.k, self.m))
        for (i, j), v in self.entries.items():
            out[i, j] = v
        return out

    def value(self, i: int, j: int) -> float:
        return self.entries.get((i, j), 0.0)

    def support(self, i: int) -> tuple[int, ...]:
        return tuple(sorted(j for (ci, j) in self.entries if ci == i))

    def assignment_edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.entries))

    def fractional_units(self, tol: float = DEFAULT_TOLS.integer_entry) -> tuple[int, ...]:
        frac = {j for (i, j), v in self.entries.items() if v < 1.0 - tol}
        return tuple(sorted(frac))

    def is_integer(self, tol: float = DEFAULT_TOLS.integer_entry) -> bool:
        return all(v >= 1.0 - tol for v in self.entries.values())

    def assignment_of(self, j: int) -> dict[int, float]:
        return {i: v for (i, jj), v in self.entries.items() if jj == j}


def integer_clustering(k: int, m: int, assignment: Sequence[int]) -> FractionalClustering:
    """Build the 0/1 clustering that sends unit j to cluster assignment[j]."""
    if len(assignment) != m:
        raise ValueError("assignment length must equal m")
    return FractionalClustering(k=k, m=m, entries={(int(i), j): 1.0 for j, i in enumerate(assignment)})


@dataclass(frozen=True)
class BalanceReport:
    cluster_weights: tuple[float, ...]
    max_rel_deviation: float
    avg_rel_deviation: float
    strong: bool
    epsilon_balanced: bool
    integer: bool
    epsilon: float


def cluster_weights(
    clustering: FractionalClustering, instance: Instance, allow_empty: bool = False
) -> np.ndarray:
    """Total weight assigned to each cluster; empty clusters are rejected unless allowed."""
    if clustering.k != instance.k or clustering.m != instance.m:
        raise ValueError(
            f"dimension mismatch: clustering is {clustering.k}x{clustering.m}, instance is {instance.k}x{instance.m}"
        )
    w = instance.weights()
    out = np.zeros(instance.k)
    touched = [False] * instance.k
    for (i, j), v in clustering.entries.items():
        out[i] += v * w[j]
        touched[i] = True
    if not all(touched) and not allow_empty:
        empty = [i for i, t in enumerate(touched) if not t]
        raise ValueError(f"empty cluster(s) {empty}: every cluster needs support")
    return out


def check_balance(
    clustering: FractionalClustering,
    instance: Instance,
    epsilon: float = 0.0,
    tols: Tolerances = DEFAULT_TOLS,
    allow_empty: bool = False,
) -> BalanceReport:
    """Judge a clustering against its capacities.

    strong: weights match capacities within a hybrid absolute/relative band;
    epsilon_balanced: every weight lies in [(1-eps) kappa, (1+eps) kappa];
    integer: all stored fractions are 0/1 up to ``tols.integer_entry``.
    Rounded clusterings may leave a small-capacity cluster empty; pass
    allow_empty to judge those instead of erroring.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    cw = cluster_weights(clustering, instance, allow_empty=allow_empty)
    cap = instance.capacity_array()
    rel = np.abs(cw - cap) / cap
    strong = bool(np.all(np.abs(cw - cap) <= tols.strong_balance * np.maximum(1.0, np.abs(cap))))
    eps_ok = bool(np.all(((1 - epsilon) * cap <= cw + 1e-15) & (cw <= (1 + epsilon) * cap + 1e-15)))
    return BalanceReport(
        cluster_weights=tuple(float(x) for x in cw),
        max_rel_deviation=float(rel.max()),
        avg_rel_deviation=float(rel.mean()),
        strong=strong,
        epsilon_balanced=eps_ok,
        integer=clustering.is_integer(tols.integer_entry),
        epsilon=float(epsilon),
    )


def connected_components(node_ids: Iterable[UnitId], graph: AdjacencyGraph) -> list[set[UnitId]]:
    """Components of the subgraph induced by ``node_ids``."""
    nodes = set(node_ids)
    adj = graph.neighbors()
    seen: set[UnitId] = set()
    comps: list[set[UnitId]] = []
    for start in sorted(nodes, key=str):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        seen.add(start)
        while stack:
            u = stack.pop()
            for v, _ in adj.get(u, ()):
                if v in nodes and v not in seen:
                    seen.add(v)
                    comp.add(v)
                    stack.append(v)
        comps.append(comp)
    return comps


def validate_instance(instance: Instance, tols: Tolerances = DEFAULT_TOLS) -> list[str]:
    """Collect human-readable diagnostics; an empty list means the instance is ok.

    Never raises: this is the pre-normalization report used by file loading
    and the service, so it must describe all problems instead of aborting on
    the first.
    """
    diags: list[str] = []
    if instance.m < instance.k:
        diags.append(f"fewer units ({instance.m}) than clusters ({instance.k})")
    for u in instance.units:
        if not u.weight > 0:  # Unit already rejects this; guard for hand-built objects
            diags.append(f"unit {u.id!r}: nonpositive weight {u.weight}")
        if len(u.position) != 2 or not all(math.isfinite(c) for c in u.position):
            diags.append(f"unit {u.id!r}: position must be two finite coordinates")
    total = sum(u.weight for u in instance.units)
    cap_sum = sum(instance.capacities)
    if any(not c > 0 for c in instance.capacities):
        diags.append("capacities must all be positive")
    elif total > 0 and abs(cap_sum - total) / total > tols.capacity_rescale_rel:
        diags.append(
            f"capacity sum {cap_sum:g} does not match weight sum {total:g} "
            f"(relative gap {abs(cap_sum - total) / total:.3e})"
        )
    if instance.graph is not None:
        ids = {u.id for u in instance.units}
        foreign = sorted({a for e in instance.graph.lengths for a in e if a not in ids}, key=str)
        if foreign:
            diags.append(f"graph references unknown unit ids {foreign[:5]}")
        else:
            comps = connected_components(ids, instance.graph)
            if len(comps) > 1:
                sizes = sorted((len(c) for c in comps), reverse=True)
                diags.append(f"adjacency graph is disconnected ({len(comps)} components, sizes {sizes[:5]})")
    return diags
