"""HTTP service for the interactive pin-and-resolve workflow.

Sessions wrap one instance plus accumulated operator constraints; every
constraint change re-runs the full pipeline from scratch, so a session's
current result is a pure function of (instance, approach, options, constraint
set).  Standard-library HTTP only: one operator, a handful of sessions, no
framework needed.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlparse

from .diagram import power_cells_2d, verify
from .distance import Euclidean, GraphMetric, Identity, Square, uniform_model
from .io import InstanceDocument, clustering_from_assignments, parse_instance_document
from .pipeline import APPROACHES, PipelineOptions, run_pipeline
from .rounding import ConnectivityBlockedError
from .solver import InfeasibleError


class ApiError(Exception):
    def __init__(self, status: int, message: str, details=None):
        super().__init__(message)
        self.status = status
        self.message = message
        self.details = details or []


@dataclass
class Session:
    id: str
    document: InstanceDocument
    raw_document: dict
    approach: str
    options: PipelineOptions
    pins: set[tuple[int, object]] = field(default_factory=set)
    excludes: set[tuple[int, object]] = field(default_factory=set)
    history: list[dict] = field(default_factory=list)
    result: Optional[dict] = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def effective_options(self) -> PipelineOptions:
        base = self.options.as_dict()
        return PipelineOptions(
            seed=base["seed"],
            epsilon=base["epsilon"],
            max_iter=base["maxIter"],
            restarts=base["restarts"],
            neighborhood=base["neighborhood"],
            pins=tuple(sorted(self.pins, key=lambda t: (t[0], str(t[1])))),
            excludes=tuple(sorted(self.excludes, key=lambda t: (t[0], str(t[1])))),
        )


class SessionStore:
    def __init__(self, snapshot_path: Optional[str] = None):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._snapshot_path = snapshot_path
        if snapshot_path and Path(snapshot_path).exists():
            self._load_snapshot()

    def create(self, payload: dict) -> Session:
        raw = payload.get("instance") or payload.get("instanceFile")
        if not isinstance(raw, dict):
            raise ApiError(400, "missing instance document under 'instance' or 'instanceFile'")
        approach = payload.get("approach", "power")
        if approach not in APPROACHES:
            raise ApiError(400, f"unknown approach {approach!r}")
        opts = payload.get("options") or {}
        options = PipelineOptions(
            seed=int(opts.get("seed", 0)),
            epsilon=opts.get("epsilon"),
            max_iter=int(opts.get("maxIter", 40)),
            restarts=int(opts.get("restarts", 4)),
            neighborhood=int(opts.get("neighborhood", 50)),
        )
        try:
            document = parse_instance_document(raw)
        except ValueError as exc:
            raise ApiError(400, "invalid instance", [str(exc)]) from None
        session = Session(
            id=uuid.uuid4().hex[:12],
            document=document,
            raw_document=raw,
            approach=approach,
            options=options,
        )
        _run_session(session)
        with self._lock:
            self._sessions[session.id] = session
        self._snapshot()
        return session

    def get(self, sid: str) -> Session:
        with self._lock:
            if sid not in self._sessions:
                raise ApiError(404, f"no session {sid!r}")
            return self._sessions[sid]

    def _snapshot(self) -> None:
        if not self._snapshot_path:
            return
        with self._lock:
            blob = {
                sid: {
                    "instance": s.raw_document,
                    "approach": s.approach,
                    "options": s.options.as_dict(),
                    "pins": sorted([list(p) for p in s.pins]),
                    "excludes": sorted([list(p) for p in s.excludes]),
                    "history": s.history,
                }
                for sid, s in self._sessions.items()
            }
        Path(self._snapshot_path).write_text(json.dumps(blob, sort_keys=True, indent=2))

    def _load_snapshot(self) -> None:
        blob = json.loads(Path(self._snapshot_path).read_text())
        for sid, s in blob.items():
            document = parse_instance_document(s["instance"])
            opts = s["options"]
            session = Session(
                id=sid,
                document=document,
                raw_document=s["instance"],
                approach=s["approach"],
                options=PipelineOptions(
                    seed=opts["seed"], epsilon=opts["epsilon"], max_iter=opts["maxIter"],
                    restarts=opts["restarts"], neighborhood=opts["neighborhood"],
                ),
                pins={(int(i), u) for i, u in s.get("pins", [])},
                excludes={(int(i), u) for i, u in s.get("excludes", [])},
                history=list(s.get("history", [])),
            )
            _run_session(session)
            self._sessions[sid] = session


def _run_session(session: Session) -> None:
    options = session.effective_options()
    try:
        result = run_pipeline(session.document, session.approach, options)
    except InfeasibleError as exc:
        raise ApiError(422, "infeasible under the current constraints", [str(exc)]) from None
    except ConnectivityBlockedError as exc:
        raise ApiError(422, "connected rounding blocked", [str(exc)]) from None
    except ValueError as exc:
        raise ApiError(422, "pipeline rejected the request", [str(exc)]) from None
    session.result = result
    session.history.append(
        {
            "pins": sorted([list(map(_plain, p)) for p in session.pins]),
            "excludes": sorted([list(map(_plain, p)) for p in session.excludes]),
            "summary": result["summary"],
        }
    )


def _plain(x):
    return x if isinstance(x, (int, float, str, bool)) or x is None else str(x)


def apply_constraints(session: Session, payload: dict) -> None:
    pins = set(session.pins)
    excludes = set(session.excludes)
    clear = payload.get("clear")
    if clear == "all":
        pins.clear()
        excludes.clear()
    elif isinstance(clear, list):
        for c in clear:
            key = (int(c["cluster"]), c["unit"])
            pins.discard(key)
            excludes.discard(key)
    instance = session.document.instance
    for kind, target in (("pin", pins), ("exclude", excludes)):
        for c in payload.get(kind) or []:
            try:
                key = (int(c["cluster"]), c["unit"])
                instance.index_of(c["unit"])
            except KeyError as exc:
                raise ApiError(400, f"{kind} refers to unknown field or unit: {exc}") from None
            if not 0 <= key[0] < instance.k:
                raise ApiError(400, f"{kind} cluster index {key[0]} out of range")
            target.add(key)
    conflicts = pins & excludes
    if conflicts:
        raise ApiError(409, "pin and exclusion on the same (cluster, unit)", sorted(map(str, conflicts)))
    pinned_units = [u for _, u in pins]
    if len(set(pinned_units)) != len(pinned_units):
        raise ApiError(409, "more than one pin for the same unit")
    old_pins, old_excludes = set(session.pins), set(session.excludes)
    session.pins, session.excludes = pins, excludes
    try:
        _run_session(session)
    except ApiError:
        session.pins, session.excludes = old_pins, old_excludes
        raise


def result_fragments(session: Session, include: Optional[str]) -> dict:
    assert session.result is not None
    if not include:
        return session.result
    out: dict = {}
    wanted = {part.strip() for part in include.split(",") if part.strip()}
    unknown = wanted - {"cells", "summary", "assignments"}
    if unknown:
        raise ApiError(400, f"unknown include fragment(s) {sorted(unknown)}")
    if "summary" in wanted:
        out["summary"] = session.result["summary"]
    if "assignments" in wanted:
        out["assignments"] = session.result["assignments"]
    if "cells" in wanted:
        out["cells"] = _cells_payload(session)
    return out


def _cells_payload(session: Session) -> dict:
    assert session.result is not None
    instance = session.document.instance
    result = session.result
    model = _model_from_result(session)
    from .diagram import compute_cells

    cells = compute_cells(instance, model)
    payload: dict = {
        "membership": [
            {"unit": u.id, "clusters": list(cells.membership[j])}
            for j, u in enumerate(instance.units)
        ],
        "eta": list(cells.eta),
    }
    if session.approach == "power":
        pos = instance.positions()
        pad = 0.05 * max(instance.diameter(), 1.0)
        box = (
            float(pos[:, 0].min() - pad),
            float(pos[:, 1].min() - pad),
            float(pos[:, 0].max() + pad),
            float(pos[:, 1].max() + pad),
        )
        polys = power_cells_2d(model, box)
        payload["polygons"] = [[list(p) for p in poly] for poly in polys.polygons]
        payload["boundingBox"] = list(polys.bounding_box)
    return payload


def _model_from_result(session: Session):
    assert session.result is not None
    result = session.result
    sites = result["sites"]
    mu = result["mu"]
    if session.approach in ("power", "anisotropic"):
        transform = Square()
    else:
        transform = Identity()
    if session.approach == "shortest-path":
        return uniform_model(GraphMetric(), transform, tuple(sites), mu)
    if session.approach == "anisotropic":
        est = None
        from .distance import estimate_anisotropy

        assert session.document.reference is not None
        est = estimate_anisotropy(session.document.instance, session.document.reference)
        from .distance import DistanceModel

        return DistanceModel(est.matrices, transform, tuple(tuple(s) for s in sites), tuple(mu))
    return uniform_model(Euclidean(), transform, tuple(tuple(s) for s in sites), mu)


def diagnostics_payload(session: Session) -> dict:
    assert session.result is not None
    instance = session.document.instance
    clustering = clustering_from_assignments(instance, session.result["assignments"])
    model = _model_from_result(session)
    report = verify(instance, model, clustering)
    return {
        "feasible": report.feasible,
        "supports": report.supports,
        "starShaped": report.star_shaped,
        "connected": None if report.connected is None else list(report.connected),
        "violations": [[i, instance.units[j].id, reason] for i, j, reason in report.violations],
        "witnesses": [[i, x, v] for i, x, v in report.witnesses],
        "tolerance": report.tolerance,
    }


# ---------------------------------------------------------------------------
# HTTP plumbing


def make_handler(store: SessionStore):
    class Handler(BaseHTTPRequestHandler):
        server_version = "vorclust"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send(self, status: int, payload: dict) -> None:
            blob = json.dumps(payload, sort_keys=True).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(blob)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.end_headers()
            self.wfile.write(blob)

        def _body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b"{}"
            try:
                return json.loads(raw or b"{}")
            except json.JSONDecodeError as exc:
                raise ApiError(400, f"invalid JSON body: {exc}") from None

        def do_OPTIONS(self):  # CORS preflight
            self._send(204, {})

        def do_POST(self):
            try:
                parts = [p for p in urlparse(self.path).path.split("/") if p]
                if parts == ["sessions"]:
                    session = store.create(self._body())
                    self._send(200, {"sessionId": session.id, "result": session.result})
                elif len(parts) == 3 and parts[0] == "sessions" and parts[2] == "constraints":
                    session = store.get(parts[1])
                    with session.lock:
                        apply_constraints(session, self._body())
                        store._snapshot()
                        self._send(200, {"sessionId": session.id, "result": session.result})
                else:
                    raise ApiError(404, f"no route for POST {self.path}")
            except ApiError as exc:
                self._send(exc.status, {"error": exc.message, "details": exc.details})
            except Exception as exc:  # internal
                self._send(500, {"error": f"internal error: {exc}"})

        def do_GET(self):
            try:
                url = urlparse(self.path)
                parts = [p for p in url.path.split("/") if p]
                if len(parts) == 3 and parts[0] == "sessions" and parts[2] == "result":
                    session = store.get(parts[1])
                    include = (parse_qs(url.query).get("include") or [None])[0]
                    self._send(200, result_fragments(session, include))
                elif len(parts) == 3 and parts[0] == "sessions" and parts[2] == "diagnostics":
                    session = store.get(parts[1])
                    self._send(200, diagnostics_payload(session))
                elif len(parts) == 3 and parts[0] == "sessions" and parts[2] == "history":
                    session = store.get(parts[1])
                    self._send(200, {"history": session.history})
                else:
                    raise ApiError(404, f"no route for GET {self.path}")
            except ApiError as exc:
                self._send(exc.status, {"error": exc.message, "details": exc.details})
            except Exception as exc:
                self._send(500, {"error": f"internal error: {exc}"})

    return Handler


def create_server(port: int = 0, snapshot: Optional[str] = None) -> ThreadingHTTPServer:
    store = SessionStore(snapshot_path=snapshot)
    return ThreadingHTTPServer(("127.0.0.1", port), make_handler(store))


def serve_forever(port: int, snapshot: Optional[str] = None) -> None:
    server = create_server(port, snapshot)
    host, actual_port = server.server_address[:2]
    print(f"serving on http://{host}:{actual_port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
