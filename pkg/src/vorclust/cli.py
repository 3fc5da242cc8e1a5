"""Command-line interface: validate, solve, round, evaluate, pipeline, serve.

Exit codes: 0 ok, 1 validation problem, 2 infeasible constraints, 3 internal.
"""

from __future__ import annotations

import argparse
import json
import sys

from .distance import GraphMetric, Identity, cost_matrix, uniform_model
from .evaluate import summarize
from .io import (
    InstanceFormatError,
    assignments_payload,
    clustering_from_assignments,
    dumps_result,
    export_result,
    load_instance_document,
    load_result,
)
from .model import validate_instance
from .pipeline import APPROACHES, PipelineOptions, run_pipeline
from .rounding import ConnectivityBlockedError, NotExtremalError, reduce_to_vertex, round_connected, round_tree
from .solver import InfeasibleError

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 1, 2, 3


def _parse_constraint(text: str) -> tuple[int, str]:
    try:
        i, unit = text.split(":", 1)
        return int(i), unit
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected CLUSTER:UNIT, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--approach", choices=APPROACHES, default="power")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=40)
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--neighborhood", type=int, default=50, metavar="R")
    p.add_argument("--pin", type=_parse_constraint, action="append", default=[], metavar="I:UNIT")
    p.add_argument("--exclude", type=_parse_constraint, action="append", default=[], metavar="I:UNIT")
    p.add_argument("--out", default=None)


def _options(args: argparse.Namespace) -> PipelineOptions:
    return PipelineOptions(
        seed=args.seed,
        epsilon=args.epsilon,
        max_iter=args.max_iter,
        restarts=args.restarts,
        neighborhood=args.neighborhood,
        pins=tuple((i, u) for i, u in args.pin),
        excludes=tuple((i, u) for i, u in args.exclude),
    )


def _emit(args: argparse.Namespace, result: dict) -> None:
    text = dumps_result(result)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="vorclust", description="balanced diagram clustering")
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="check an instance file")
    p_val.add_argument("instance")

    p_solve = sub.add_parser("solve", help="fractional solve at initialized sites")
    p_solve.add_argument("instance")
    _add_common(p_solve)

    p_round = sub.add_parser("round", help="round a fractional result to integer")
    p_round.add_argument("instance")
    p_round.add_argument("--result", required=True)
    _add_common(p_round)

    p_eval = sub.add_parser("evaluate", help="metrics for a result file")
    p_eval.add_argument("instance")
    p_eval.add_argument("--result", required=True)
    p_eval.add_argument("--format", choices=("json", "csv", "geojson"), default="json")
    p_eval.add_argument("--out", default=None)

    p_pipe = sub.add_parser("pipeline", help="site init, optimize, solve, round, evaluate")
    p_pipe.add_argument("instance")
    _add_common(p_pipe)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--port", type=int, default=8749)
    p_serve.add_argument("--snapshot", default=None)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except InstanceFormatError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InfeasibleError, ConnectivityBlockedError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "validate":
        try:
            doc = load_instance_document(args.instance)
        except InstanceFormatError as exc:
            print(f"invalid: {exc}")
            return EXIT_VALIDATION
        diags = validate_instance(doc.instance)
        if diags:
            for d in diags:
                print(f"invalid: {d}")
            return EXIT_VALIDATION
        print(f"ok: {doc.instance.m} units, k={doc.instance.k}")
        return EXIT_OK

    if args.command == "serve":
        from .service import serve_forever

        serve_forever(args.port, args.snapshot)
        return EXIT_OK

    doc = load_instance_document(args.instance)
    instance = doc.instance

    if args.command == "pipeline":
        result = run_pipeline(doc, args.approach, _options(args))
        _emit(args, result)
        return EXIT_OK

    if args.command == "solve":
        result = _fractional_solve(doc, args)
        _emit(args, result)
        return EXIT_OK

    if args.command == "round":
        prior = load_result(args.result)
        clustering = clustering_from_assignments(instance, prior["assignments"])
        if args.approach == "shortest-path":
            sites = tuple(prior["sites"])
            outcome = round_connected(instance, clustering, sites)
        else:
            try:
                outcome = round_tree(instance, clustering)
            except NotExtremalError:
                outcome = round_tree(instance, reduce_to_vertex(instance, clustering))
        result = dict(prior)
        result["assignments"] = assignments_payload(instance, outcome.clustering)
        result["summary"] = summarize(instance, None, outcome.clustering, doc.reference).as_dict()
        _emit(args, result)
        return EXIT_OK

    if args.command == "evaluate":
        prior = load_result(args.result)
        clustering = clustering_from_assignments(instance, prior["assignments"])
        result = dict(prior)
        result["summary"] = summarize(instance, None, clustering, doc.reference).as_dict()
        text = export_result(instance, result, args.format, args.out)
        if not args.out:
            sys.stdout.write(text)
        return EXIT_OK

    raise ValueError(f"unhandled command {args.command}")


def _fractional_solve(doc, args) -> dict:
    """Solve at initialized sites without structural optimization or rounding."""
    from .distance import Euclidean, Square
    from .pipeline import _constraint_sets, _units_at
    from .siteopt import kmeanspp_sites
    from .solver import TransportProblem, relative_interior_solution, solve

    instance = doc.instance
    options = _options(args)
    pins, excl = _constraint_sets(instance, options)
    if args.approach == "shortest-path":
        if instance.graph is None:
            raise ValueError("the shortest-path approach needs an adjacency graph")
        sites = _units_at(instance, kmeanspp_sites(instance, instance.k, options.seed))
        model = uniform_model(GraphMetric(), Identity(), sites)
        sites_payload = list(sites)
    elif args.approach == "anisotropic":
        from .distance import DistanceModel, cluster_centroids, estimate_anisotropy

        if doc.reference is None:
            raise ValueError("the anisotropic approach needs a reference clustering")
        est = estimate_anisotropy(instance, doc.reference)
        points = tuple(map(tuple, cluster_centroids(instance, doc.reference)))
        model = DistanceModel(est.matrices, Square(), points, (0.0,) * instance.k)
        sites_payload = [list(s) for s in points]
    else:
        transform = Square() if args.approach == "power" else Identity()
        points = kmeanspp_sites(instance, instance.k, options.seed)
        model = uniform_model(Euclidean(), transform, points)
        sites_payload = [list(s) for s in points]
    costs = cost_matrix(instance, model)
    problem = TransportProblem(
        costs=costs, weights=instance.weights(), capacities=instance.capacity_array(),
        pins=pins, exclusions=excl,
    )
    res = relative_interior_solution(problem) if args.approach == "shortest-path" else solve(problem)
    summary = summarize(instance, model.with_mu(res.duals.mu), res.clustering, doc.reference)
    return {
        "assignments": assignments_payload(instance, res.clustering),
        "mu": list(res.duals.mu),
        "sites": sites_payload,
        "summary": summary.as_dict(),
        "parameters": {"approach": args.approach, **options.as_dict()},
    }


if __name__ == "__main__":
    sys.exit(main())
