"""Centralized numeric tolerances.

Every module takes its tolerances from a single record so that tests can
tighten or relax them in one place instead of chasing magic numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # column sums of a fractional clustering must equal 1 within this
    column_sum: float = 1e-9
    # |cluster weight - capacity| <= strong_balance * max(1, capacity)
    strong_balance: float = 1e-9
    # entries within this of {0,1} count as integral
    integer_entry: float = 1e-12
    # relative capacity/weight sum mismatch that is silently rescaled
    capacity_rescale_rel: float = 1e-6
    # absolute tie band on f-values for cell membership
    cell_tie: float = 1e-9
    # dual feasibility / complementary slackness band (relative to cost scale)
    duals: float = 1e-9
    # relative primal/dual objective agreement
    objective_rel: float = 1e-9
    # symmetry defect allowed in an ellipsoidal norm matrix
    spd_symmetry: float = 1e-12
    # eigenvalue clamp: floor = max(eig_floor_rel * lambda_max, eig_floor_abs)
    eig_floor_rel: float = 1e-10
    eig_floor_abs: float = 1e-10
    # site-to-centroid gap (relative to instance diameter) for centroidal checks
    centroidal_rel: float = 1e-6
    # shortest-path distance ties (relative to path length scale)
    path_tie: float = 1e-12

    def tightened(self, **kwargs: float) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT_TOLS = Tolerances()
