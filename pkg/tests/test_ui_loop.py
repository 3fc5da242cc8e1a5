"""End-to-end operator loop: the compiled frontend client against the live
service, on the two-lobe disconnection fixture."""

import json
import shutil
import subprocess
import threading
import time
from pathlib import Path

import pytest

from vorclust.service import create_server

ROOT = Path(__file__).resolve().parent.parent
DIST = ROOT / "frontend" / "dist"

NODE_SCRIPT = """
import {{ ServiceClient }} from {api_module!r};
import {{ emptyState, projectResult, draftConstraint }} from {state_module!r};
import {{ readFileSync }} from "node:fs";

const instance = JSON.parse(readFileSync({fixture!r}, "utf8"));
const client = new ServiceClient({base!r});
const t0 = Date.now();

const created = await client.createSession(instance, "power", {{ seed: 0, restarts: 4 }});
let diag = await client.getDiagnostics(created.sessionId);
let state = projectResult(emptyState("power"), instance, created.sessionId, created.result, diag);
if (diag.connected.every(Boolean)) {{
  throw new Error("fixture failed to produce a disconnected cluster");
}}
const stranded = created.result.assignments.find((a) => a.unit === "u4");
state = draftConstraint(state, "exclude", {{ unit: "u4", cluster: stranded.cluster }});
const updated = await client.postConstraints(state.sessionId, {{
  pin: state.draft.pin, exclude: state.draft.exclude,
}});
diag = await client.getDiagnostics(state.sessionId);
state = projectResult(state, instance, state.sessionId, updated.result, diag);
console.log(JSON.stringify({{
  connected: diag.connected,
  maxDeviation: updated.result.summary.maxDeviation,
  fractionalMarkers: state.markers.filter((m) => m.fractional).length,
  elapsedMs: Date.now() - t0,
}}));
"""


@pytest.mark.skipif(shutil.which("node") is None, reason="node unavailable")
@pytest.mark.skipif(not (DIST / "api.js").exists(), reason="frontend not built (npm run build)")
def test_ui_exclusion_repairs_two_lobe(tmp_path):
    srv = create_server(port=0)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    try:
        base = f"http://127.0.0.1:{srv.server_address[1]}"
        script = tmp_path / "loop.mjs"
        script.write_text(
            NODE_SCRIPT.format(
                api_module=str(DIST / "api.js"),
                state_module=str(DIST / "state.js"),
                fixture=str(ROOT / "fixtures" / "two_lobe.json"),
                base=base,
            )
        )
        t0 = time.monotonic()
        proc = subprocess.run(
            ["node", str(script)], capture_output=True, text=True, timeout=30
        )
        elapsed = time.monotonic() - t0
        assert proc.returncode == 0, proc.stderr
        verdict = json.loads(proc.stdout.strip().splitlines()[-1])
        assert all(verdict["connected"]), verdict
        # rounding bound for the fixture: max w_j / kappa_i = 1/4
        assert verdict["maxDeviation"] <= 0.25 + 1e-9
        assert elapsed < 5.0, f"operator round-trip took {elapsed:.1f}s"
    finally:
        srv.shutdown()
