#!/usr/bin/env python3
"""Walk the 4-node graph example end to end and print every quantity.

Shows how the transform choice flips the supported clustering: under the
identity transform the split assignment is supported and star-shaped, under
squaring the unique optimum separates a unit from its cluster.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from vorclust.diagram import check_star_shaped, compute_cells, verify
from vorclust.distance import GraphMetric, Identity, Square, cost_matrix, uniform_model
from vorclust.io import load_instance
from vorclust.solver import TransportProblem, relative_interior_solution, solve

FIXTURE = Path(__file__).resolve().parent.parent / "fixtures" / "golden_4node.json"


def report(instance, transform, label):
    model = uniform_model(GraphMetric(), transform, ("x1", "x4"))
    costs = cost_matrix(instance, model)
    print(f"\n=== {label} ===")
    print("cost matrix:")
    print(costs)
    problem = TransportProblem(costs=costs, weights=instance.weights(), capacities=instance.capacity_array())
    res = solve(problem)
    print(f"objective {res.objective}, mu {res.duals.mu}, eta {res.duals.eta}")
    relint = relative_interior_solution(problem)
    print("relative-interior assignment:")
    print(np.round(relint.clustering.to_dense(), 3))
    model = model.with_mu(res.duals.mu)
    cells = compute_cells(instance, model)
    names = [u.id for u in instance.units]
    for i in range(2):
        print(f"cell {i}: {[names[j] for j in cells.units_of(i)]}")
    rep = verify(instance, model, relint.clustering)
    print(f"relint: feasible={rep.feasible} supports={rep.supports} star={rep.star_shaped}")
    star = check_star_shaped(instance, res.clustering, ("x1", "x4"))
    print(f"vertex solution star-shaped: {star.star_shaped} witnesses: {star.witnesses}")


def main() -> int:
    instance = load_instance(FIXTURE)
    report(instance, Identity(), "identity transform (shortest-path diagram)")
    report(instance, Square(), "squared transform")
    return 0


if __name__ == "__main__":
    sys.exit(main())
