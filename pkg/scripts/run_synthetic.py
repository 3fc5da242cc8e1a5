#!/usr/bin/env python3
"""Compare all four diagram approaches on a synthetic blob instance.

Generates Gaussian blobs with a geometric adjacency graph, runs each
pipeline, and prints deviation / moment-of-inertia / connectivity columns,
optionally writing result JSON files alongside.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from vorclust.io import parse_instance_document
from vorclust.pipeline import APPROACHES, PipelineOptions, run_pipeline


def geometric_graph(rng, pts):
    m = len(pts)
    lengths = {}
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    for a, b in zip(order, order[1:]):
        a, b = int(a), int(b)
        lengths[(f"u{a}", f"u{b}")] = float(np.hypot(*(pts[a] - pts[b])) + 1e-6)
    target = 3 * m
    tries = 0
    while len(lengths) < target and tries < 30 * m:
        tries += 1
        a, b = rng.integers(0, m, 2)
        if a == b:
            continue
        key = (f"u{min(a, b)}", f"u{max(a, b)}")
        if key not in lengths:
            lengths[key] = float(np.hypot(*(pts[a] - pts[b])) + 1e-6)
    return [{"a": a, "b": b, "length": l} for (a, b), l in sorted(lengths.items())]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--blobs", type=int, default=3)
    parser.add_argument("--points-per-blob", type=int, default=120)
    parser.add_argument("--k", type=int, default=6)
    parser.add_argument("--sigma", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=11)
    parser.add_argument("--out-dir", default=None)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    centers = [(12 * np.cos(t), 12 * np.sin(t)) for t in np.linspace(0, 2 * np.pi, args.blobs, endpoint=False)]
    pts = np.vstack([rng.normal(c, args.sigma, (args.points_per_blob, 2)) for c in centers])
    doc_dict = {
        "units": [
            {"id": f"u{i}", "x": float(x), "y": float(y), "weight": 1.0}
            for i, (x, y) in enumerate(pts)
        ],
        "edges": geometric_graph(rng, pts),
        "k": args.k,
    }
    doc = parse_instance_document(doc_dict)
    print(f"instance: {doc.instance.m} units, k={args.k}, uniform capacities")
    print(f"{'approach':>14} {'max dev':>9} {'avg dev':>9} {'MoI':>12} {'connected':>10}")

    results = {}
    for approach in APPROACHES:
        if approach == "anisotropic":
            if "power" not in results:
                continue
            doc_dict["reference"] = [
                {"unit": a["unit"], "cluster": a["cluster"]}
                for a in results["power"]["assignments"]
            ]
            run_doc = parse_instance_document(doc_dict)
        else:
            run_doc = doc
        result = run_pipeline(run_doc, approach, PipelineOptions(seed=args.seed, restarts=4, neighborhood=30, max_iter=20))
        results[approach] = result
        s = result["summary"]
        conn = "-" if s["connectivity"] is None else str(all(s["connectivity"]))
        print(f"{approach:>14} {s['maxDeviation']:>9.4f} {s['avgDeviation']:>9.4f} {s['momentOfInertia']:>12.2f} {conn:>10}")
        if args.out_dir:
            out = Path(args.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"{approach}.json").write_text(json.dumps(result, sort_keys=True, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
