"""File formats: instance ingestion and result export.

Instances and results travel as JSON; CSV and GeoJSON are one-way exports.
Serialization is deterministic (sorted keys, no timestamps) so byte-equality
of result files is meaningful in tests and across the CLI/service boundary.
"""

from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .config import DEFAULT_TOLS, Tolerances
from .model import (
    AdjacencyGraph,
    FractionalClustering,
    Instance,
    Unit,
    build_instance,
    validate_instance,
)


class InstanceFormatError(ValueError):
    """Malformed instance document; message carries field context."""


@dataclass(frozen=True)
class InstanceDocument:
    instance: Instance
    epsilon_target: Optional[float]
    reference: Optional[FractionalClustering]


def parse_instance_document(doc: dict, tols: Tolerances = DEFAULT_TOLS) -> InstanceDocument:
    if not isinstance(doc, dict):
        raise InstanceFormatError("top level must be a JSON object")
    try:
        raw_units = doc["units"]
        k = int(doc["k"])
    except KeyError as exc:
        raise InstanceFormatError(f"missing required field {exc}") from None
    units = []
    for n, ru in enumerate(raw_units):
        try:
            unit = Unit(id=ru["id"], position=(float(ru["x"]), float(ru["y"])), weight=float(ru["weight"]))
        except KeyError as exc:
            raise InstanceFormatError(f"units[{n}]: missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            raise InstanceFormatError(f"units[{n}]: {exc}") from None
        units.append(unit)
    graph = None
    if doc.get("edges"):
        lengths = {}
        for n, re_ in enumerate(doc["edges"]):
            try:
                lengths[(re_["a"], re_["b"])] = float(re_["length"])
            except KeyError as exc:
                raise InstanceFormatError(f"edges[{n}]: missing field {exc}") from None
        try:
            graph = AdjacencyGraph(lengths=lengths)
        except ValueError as exc:
            raise InstanceFormatError(str(exc)) from None
    capacities = doc.get("capacities")
    eps_target = doc.get("epsilon-target")
    try:
        instance = build_instance(units, k, capacities, graph, tols)
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from None
    diags = validate_instance(instance, tols)
    if diags:
        raise InstanceFormatError("; ".join(diags))
    reference = None
    if doc.get("reference"):
        entries = {}
        for n, ra in enumerate(doc["reference"]):
            try:
                entries[(int(ra["cluster"]), instance.index_of(ra["unit"]))] = 1.0
            except KeyError as exc:
                raise InstanceFormatError(f"reference[{n}]: missing field {exc}") from None
        reference = FractionalClustering(k=k, m=instance.m, entries=entries)
    return InstanceDocument(
        instance=instance,
        epsilon_target=None if eps_target is None else float(eps_target),
        reference=reference,
    )


def load_instance_document(path: Union[str, Path], tols: Tolerances = DEFAULT_TOLS) -> InstanceDocument:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from None
    return parse_instance_document(doc, tols)


def load_instance(path: Union[str, Path], tols: Tolerances = DEFAULT_TOLS) -> Instance:
    return load_instance_document(path, tols).instance


def instance_to_document(instance: Instance) -> dict:
    """Inverse of parsing: a JSON-ready document that reloads bit-exactly."""
    doc: dict = {
        "units": [
            {"id": u.id, "x": u.position[0], "y": u.position[1], "weight": u.weight}
            for u in instance.units
        ],
        "k": instance.k,
        "capacities": list(instance.capacities),
    }
    if instance.graph is not None:
        doc["edges"] = [
            {"a": a, "b": b, "length": instance.graph.lengths[(a, b)]}
            for a, b in instance.graph.edges
        ]
    return doc


def dumps_result(result: dict) -> str:
    return json.dumps(result, sort_keys=True, indent=2) + "\n"


def save_result(result: dict, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_result(result))


def load_result(path: Union[str, Path]) -> dict:
    with open(path) as fh:
        return json.load(fh)


def clustering_from_assignments(instance: Instance, assignments: list[dict]) -> FractionalClustering:
    entries = {}
    for a in assignments:
        entries[(int(a["cluster"]), instance.index_of(a["unit"]))] = float(a["fraction"])
    return FractionalClustering(k=instance.k, m=instance.m, entries=entries)


def assignments_payload(instance: Instance, clustering: FractionalClustering) -> list[dict]:
    out = []
    for (i, j), v in sorted(clustering.entries.items(), key=lambda e: (e[0][1], e[0][0])):
        out.append({"unit": instance.units[j].id, "cluster": i, "fraction": v})
    return out


def export_result(
    instance: Instance,
    result: dict,
    fmt: str,
    path: Optional[Union[str, Path]] = None,
) -> str:
    """Render a result as json, csv (one row per assignment) or geojson."""
    if fmt == "json":
        text = dumps_result(result)
    elif fmt == "csv":
        buf = _io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["unit", "cluster", "fraction"])
        for a in result["assignments"]:
            writer.writerow([a["unit"], a["cluster"], a["fraction"]])
        text = buf.getvalue()
    elif fmt == "geojson":
        text = json.dumps(_geojson(instance, result), sort_keys=True, indent=2) + "\n"
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def _geojson(instance: Instance, result: dict) -> dict:
    sites = result.get("sites") or []
    point_sites = sites and isinstance(sites[0], (list, tuple))
    features = []
    by_unit: dict = {}
    for a in result["assignments"]:
        by_unit.setdefault(a["unit"], []).append(a)
    for u in instance.units:
        assigned = by_unit.get(u.id, [])
        best = max(assigned, key=lambda a: a["fraction"]) if assigned else None
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [u.position[0], u.position[1]]},
                "properties": {
                    "unit": u.id,
                    "weight": u.weight,
                    "cluster": None if best is None else best["cluster"],
                    "fractions": {str(a["cluster"]): a["fraction"] for a in assigned},
                },
            }
        )
    if point_sites and result.get("parameters", {}).get("approach") == "power":
        from .diagram import power_cells_2d
        from .distance import Euclidean, Square, uniform_model

        pos = instance.positions()
        pad = 0.05 * max(instance.diameter(), 1.0)
        box = (
            float(pos[:, 0].min() - pad),
            float(pos[:, 1].min() - pad),
            float(pos[:, 0].max() + pad),
            float(pos[:, 1].max() + pad),
        )
        model = uniform_model(Euclidean(), Square(), tuple(tuple(s) for s in sites), result["mu"])
        cells = power_cells_2d(model, box)
        for i, poly in enumerate(cells.polygons):
            if not poly:
                continue
            ring = [list(p) for p in poly] + [list(poly[0])]
            features.append(
                {
                    "type": "Feature",
                    "geometry": {"type": "Polygon", "coordinates": [ring]},
                    "properties": {"cluster": i, "role": "power-cell"},
                }
            )
    elif not point_sites and result.get("parameters", {}).get("approach") == "power":
        raise ValueError("geojson polygons need 2D point sites")
    return {"type": "FeatureCollection", "features": features}
