import json
import threading
import urllib.error
import urllib.request
from pathlib import Path

import pytest

from vorclust.io import dumps_result
from vorclust.pipeline import PipelineOptions, run_pipeline
from vorclust.service import create_server

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="module")
def server():
    srv = create_server(port=0)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{srv.server_address[1]}"
    yield base
    srv.shutdown()


def _req(base, method, path, payload=None):
    data = None if payload is None else json.dumps(payload).encode()
    req = urllib.request.Request(
        base + path, data=data, method=method, headers={"Content-Type": "application/json"}
    )
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read())


def _golden_doc(weighted=False):
    name = "golden_4node_weighted.json" if weighted else "golden_4node.json"
    return json.loads((FIXTURES / name).read_text())


def test_create_session_weighted_golden(server):
    status, body = _req(server, "POST", "/sessions", {
        "instance": _golden_doc(weighted=True),
        "approach": "shortest-path",
        "options": {"seed": 0, "neighborhood": 4},
    })
    assert status == 200
    assert body["result"]["summary"]["maxDeviation"] == 0.0
    assert all(body["result"]["summary"]["connectivity"])


def test_create_session_rejects_bad_instance(server):
    bad = {"units": [{"id": "a", "x": 0, "y": 0, "weight": 1.0}], "k": 1, "capacities": [5.0]}
    status, body = _req(server, "POST", "/sessions", {"instance": bad, "approach": "power"})
    assert status == 400
    assert body["details"]


def test_create_session_anisotropic_without_reference(server):
    status, body = _req(server, "POST", "/sessions", {
        "instance": _golden_doc(), "approach": "anisotropic",
    })
    assert status == 422
    assert "reference" in " ".join(body["details"])


def test_unknown_session_404(server):
    status, _ = _req(server, "GET", "/sessions/nope/result")
    assert status == 404
    status, _ = _req(server, "GET", "/sessions/nope/diagnostics")
    assert status == 404


def test_result_fragments_and_diagnostics(server):
    status, body = _req(server, "POST", "/sessions", {
        "instance": _golden_doc(), "approach": "power", "options": {"seed": 0, "restarts": 2},
    })
    assert status == 200
    sid = body["sessionId"]
    status, frag = _req(server, "GET", f"/sessions/{sid}/result?include=summary")
    assert status == 200 and set(frag) == {"summary"}
    status, frag = _req(server, "GET", f"/sessions/{sid}/result?include=cells,assignments")
    assert status == 200 and set(frag) == {"cells", "assignments"}
    assert len(frag["cells"]["polygons"]) == 2  # power session exposes k polygons
    assert len(frag["cells"]["membership"]) == 4
    status, diag = _req(server, "GET", f"/sessions/{sid}/diagnostics")
    assert status == 200
    assert diag["feasible"] is True
    status, _ = _req(server, "GET", f"/sessions/{sid}/result?include=bogus")
    assert status == 400


def test_constraint_conflict_409(server):
    status, body = _req(server, "POST", "/sessions", {
        "instance": _golden_doc(), "approach": "power", "options": {"seed": 0, "restarts": 2},
    })
    sid = body["sessionId"]
    status, body = _req(server, "POST", f"/sessions/{sid}/constraints", {
        "pin": [{"unit": "x1", "cluster": 0}], "exclude": [{"unit": "x1", "cluster": 0}],
    })
    assert status == 409


def test_infeasible_after_pinning_422(server):
    status, body = _req(server, "POST", "/sessions", {
        "instance": _golden_doc(), "approach": "power", "options": {"seed": 0, "restarts": 2},
    })
    sid = body["sessionId"]
    status, body = _req(server, "POST", f"/sessions/{sid}/constraints", {
        "pin": [
            {"unit": "x1", "cluster": 0},
            {"unit": "x2", "cluster": 0},
            {"unit": "x3", "cluster": 0},
        ]
    })
    assert status == 422
    # the failed mutation must not corrupt the session
    status, frag = _req(server, "GET", f"/sessions/{sid}/result?include=summary")
    assert status == 200


def test_two_lobe_exclusion_repairs_connectivity(server):
    fixture = json.loads((FIXTURES / "two_lobe.json").read_text())
    status, body = _req(server, "POST", "/sessions", {
        "instance": fixture, "approach": "power", "options": {"seed": 0, "restarts": 4},
    })
    assert status == 200
    sid = body["sessionId"]
    status, diag = _req(server, "GET", f"/sessions/{sid}/diagnostics")
    assert status == 200 and not all(diag["connected"])
    stranded_cluster = next(
        a["cluster"] for a in body["result"]["assignments"] if a["unit"] == "u4"
    )
    status, body2 = _req(server, "POST", f"/sessions/{sid}/constraints", {
        "exclude": [{"unit": "u4", "cluster": stranded_cluster}]
    })
    assert status == 200
    status, diag2 = _req(server, "GET", f"/sessions/{sid}/diagnostics")
    assert all(diag2["connected"])
    assert body2["result"]["summary"]["maxDeviation"] <= 0.25 + 1e-9  # rounding bound

    # clearing returns to the unconstrained result
    status, body3 = _req(server, "POST", f"/sessions/{sid}/constraints", {"clear": "all"})
    assert status == 200
    assert dumps_result(body3["result"]) == dumps_result(body["result"])
    status, hist = _req(server, "GET", f"/sessions/{sid}/history")
    assert status == 200 and len(hist["history"]) == 3


def test_clear_all_restores_baseline(server):
    status, body = _req(server, "POST", "/sessions", {
        "instance": _golden_doc(), "approach": "power", "options": {"seed": 3, "restarts": 2},
    })
    sid = body["sessionId"]
    baseline = body["result"]
    status, _ = _req(server, "POST", f"/sessions/{sid}/constraints", {
        "exclude": [{"unit": "x3", "cluster": 0}]
    })
    assert status == 200
    status, body2 = _req(server, "POST", f"/sessions/{sid}/constraints", {"clear": "all"})
    assert status == 200
    assert dumps_result(body2["result"]) == dumps_result(baseline)


def test_service_matches_cli_byte_identical(server):
    doc = _golden_doc()
    status, body = _req(server, "POST", "/sessions", {
        "instance": doc, "approach": "power", "options": {"seed": 5, "restarts": 3},
    })
    assert status == 200
    from vorclust.io import parse_instance_document

    cli_result = run_pipeline(
        parse_instance_document(doc), "power", PipelineOptions(seed=5, restarts=3)
    )
    assert dumps_result(body["result"]) == dumps_result(cli_result)


def test_snapshot_roundtrip(tmp_path):
    snap = tmp_path / "sessions.json"
    srv = create_server(port=0, snapshot=str(snap))
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{srv.server_address[1]}"
    status, body = _req(base, "POST", "/sessions", {
        "instance": _golden_doc(), "approach": "power", "options": {"seed": 0, "restarts": 2},
    })
    sid = body["sessionId"]
    srv.shutdown()
    assert snap.exists()

    srv2 = create_server(port=0, snapshot=str(snap))
    thread2 = threading.Thread(target=srv2.serve_forever, daemon=True)
    thread2.start()
    base2 = f"http://127.0.0.1:{srv2.server_address[1]}"
    status, frag = _req(base2, "GET", f"/sessions/{sid}/result?include=summary")
    assert status == 200
    srv2.shutdown()


def test_concurrent_constraint_posts_serialize(server):
    import concurrent.futures

    status, body = _req(server, "POST", "/sessions", {
        "instance": _golden_doc(), "approach": "power", "options": {"seed": 2, "restarts": 2},
    })
    sid = body["sessionId"]

    def post_exclude(i):
        unit = ["x1", "x2", "x3", "x4"][i % 4]
        return _req(server, "POST", f"/sessions/{sid}/constraints", {
            "exclude": [{"unit": unit, "cluster": i % 2}]
        })

    with concurrent.futures.ThreadPoolExecutor(max_workers=6) as pool:
        outcomes = list(pool.map(post_exclude, range(6)))
    # every accepted mutation re-solved under the lock; some may be rejected
    # as infeasible, none may corrupt the session
    assert all(code in (200, 409, 422) for code, _ in outcomes)
    status, hist = _req(server, "GET", f"/sessions/{sid}/history")
    accepted = sum(1 for code, _ in outcomes if code == 200)
    assert len(hist["history"]) == 1 + accepted
    status, frag = _req(server, "GET", f"/sessions/{sid}/result?include=summary")
    assert status == 200
