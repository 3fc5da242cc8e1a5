// DOM wiring: upload an instance, pick an approach, then iterate
// pin/exclude -> re-solve against the service. All logic lives in the pure
// modules; this file only moves data between them and the page.

import { ServiceClient, ServiceError } from "./api.js";
import {
  ViewState,
  connectivityDelta,
  draftConstraint,
  dropDraft,
  emptyState,
  projectResult,
  recordApplied,
  selectUnit,
  toggleOverlay,
} from "./state.js";
import {
  deviationPanel,
  diagnosticsView,
  markersSvg,
  polygonsSvg,
  sitesSvg,
  viewBoxFor,
} from "./render.js";
import type { CellsPayload, InstanceDocument } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
};

let state: ViewState = emptyState();
let instance: InstanceDocument | null = null;
let cells: CellsPayload | null = null;
let client = new ServiceClient(serviceBase());
let busy = false;

function serviceBase(): string {
  const input = document.getElementById("service-url") as HTMLInputElement | null;
  return input?.value || "http://127.0.0.1:8749";
}

async function loadSession(): Promise<void> {
  if (!instance || busy) {
    return;
  }
  const approach = ($("approach") as HTMLSelectElement).value;
  state = { ...emptyState(approach) };
  client = new ServiceClient(serviceBase());
  await guarded(async () => {
    const resp = await client.createSession(instance!, approach, { seed: 0 });
    const diagnostics = await client.getDiagnostics(resp.sessionId);
    state = projectResult(state, instance!, resp.sessionId, resp.result, diagnostics);
    cells = approach === "power" ? (await client.getCells(resp.sessionId)).cells : null;
  });
  draw();
}

async function resolveConstraints(): Promise<void> {
  if (!state.sessionId || busy) {
    return;
  }
  const body = { pin: state.draft.pin, exclude: state.draft.exclude };
  await guarded(async () => {
    const resp = await client.postConstraints(state.sessionId!, body);
    const diagnostics = await client.getDiagnostics(state.sessionId!);
    state = recordApplied(state);
    state = projectResult(state, instance!, state.sessionId!, resp.result, diagnostics);
    if (state.approach === "power") {
      cells = (await client.getCells(state.sessionId!)).cells;
    }
  });
  draw();
}

async function clearConstraints(): Promise<void> {
  if (!state.sessionId || busy) {
    return;
  }
  await guarded(async () => {
    const resp = await client.postConstraints(state.sessionId!, { clear: "all" });
    const diagnostics = await client.getDiagnostics(state.sessionId!);
    state = { ...state, applied: { pin: [], exclude: [] } };
    state = projectResult(state, instance!, state.sessionId!, resp.result, diagnostics);
  });
  draw();
}

async function guarded(action: () => Promise<void>): Promise<void> {
  busy = true;
  $("status").textContent = "solving...";
  try {
    await action();
    $("status").textContent = "";
  } catch (err) {
    const message =
      err instanceof ServiceError
        ? `${err.status || "network"}: ${err.message}${err.details.length ? " — " + err.details.join("; ") : ""}`
        : String(err);
    state = { ...state, error: message };
    $("status").textContent = "";
  } finally {
    busy = false;
  }
}

function draw(): void {
  const svg = $("map");
  if (!instance) {
    svg.innerHTML = "";
    return;
  }
  const vb = viewBoxFor(instance.units);
  svg.setAttribute("viewBox", `${vb.x} ${vb.y} ${vb.width} ${vb.height}`);
  const radius = Math.max(vb.width, vb.height) / 90;
  svg.innerHTML =
    polygonsSvg(state, cells?.polygons) + markersSvg(state, radius) + sitesSvg(state, radius * 2);
  svg.querySelectorAll(".unit").forEach((el) => {
    el.addEventListener("click", () => {
      const raw = el.getAttribute("data-unit")!;
      const unit = instance!.units.find((u) => String(u.id) === raw)?.id ?? raw;
      state = selectUnit(state, unit);
      draw();
    });
  });
  renderPanels();
}

function renderPanels(): void {
  const dev = $("deviation-panel");
  dev.innerHTML = deviationPanel(state.summary)
    .map((r) => `<div class="row ${r.tone}"><span>${r.label}</span><b>${r.value}</b></div>`)
    .join("");

  const diag = diagnosticsView(state.diagnostics, state.previousConnectivity);
  const flags = diag.flags
    .map((f) => `<span class="flag ${f.state}">${f.label}</span>`)
    .join(" ");
  const clusters = diag.perCluster
    .map(
      (c) =>
        `<span class="badge ${c.connected ? "ok" : "bad"}">C${c.cluster}` +
        `${c.change ? ` (${c.change})` : ""}</span>`,
    )
    .join(" ");
  const witnesses = diag.witnesses
    .map((w, i) => `<a href="#" class="witness" data-index="${i}">${w.text}</a>`)
    .join("<br>");
  $("diagnostics-panel").innerHTML =
    (state.sessionId ? `<div>${flags}</div><div>${clusters}</div>${witnesses}` : "<em>no session</em>");
  $("diagnostics-panel")
    .querySelectorAll<HTMLAnchorElement>(".witness")
    .forEach((a) => {
      a.addEventListener("click", (ev) => {
        ev.preventDefault();
        const w = diag.witnesses[Number(a.dataset.index)];
        state = selectUnit(state, w.intermediate);
        draw();
      });
    });

  const sel = $("selection-panel");
  if (state.selectedUnit === null) {
    sel.innerHTML = "<em>click a unit</em>";
  } else {
    const marker = state.markers.find((m) => m.id === state.selectedUnit);
    const fr = marker
      ? marker.fractions.map(([c, f]) => `C${c}: ${(f * 100).toFixed(0)}%`).join(", ")
      : "";
    sel.innerHTML =
      `<b>${String(state.selectedUnit)}</b> ${fr} ` +
      `<label>cluster <input id="target-cluster" type="number" min="0" ` +
      `max="${Math.max(0, state.k - 1)}" value="${marker?.majority ?? 0}" size="3"></label> ` +
      `<button id="btn-pin">pin</button> <button id="btn-exclude">exclude</button>`;
    $("btn-pin").addEventListener("click", () => addDraft("pin"));
    $("btn-exclude").addEventListener("click", () => addDraft("exclude"));
  }

  const draft = $("draft-panel");
  const items = [
    ...state.draft.pin.map((r) => ({ kind: "pin" as const, r })),
    ...state.draft.exclude.map((r) => ({ kind: "exclude" as const, r })),
  ];
  draft.innerHTML = items.length
    ? items
        .map(
          (it, i) =>
            `<div>${it.kind} ${String(it.r.unit)} → C${it.r.cluster} ` +
            `<a href="#" class="drop" data-i="${i}">×</a></div>`,
        )
        .join("")
    : "<em>no pending constraints</em>";
  draft.querySelectorAll<HTMLAnchorElement>(".drop").forEach((a) => {
    a.addEventListener("click", (ev) => {
      ev.preventDefault();
      const it = items[Number(a.dataset.i)];
      state = dropDraft(state, it.kind, it.r);
      renderPanels();
    });
  });

  $("error-banner").textContent = state.error ?? "";
  ($("error-banner") as HTMLElement).style.display = state.error ? "block" : "none";
}

function addDraft(kind: "pin" | "exclude"): void {
  if (state.selectedUnit === null) {
    return;
  }
  const cluster = Number(($("target-cluster") as HTMLInputElement).value);
  state = draftConstraint(state, kind, { unit: state.selectedUnit, cluster });
  renderPanels();
}

function wire(): void {
  ($("instance-file") as HTMLInputElement).addEventListener("change", async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file) {
      return;
    }
    instance = JSON.parse(await file.text()) as InstanceDocument;
    $("status").textContent = `${instance.units.length} units loaded`;
  });
  $("btn-solve").addEventListener("click", () => void loadSession());
  $("btn-resolve").addEventListener("click", () => void resolveConstraints());
  $("btn-clear").addEventListener("click", () => void clearConstraints());
  $("toggle-polygons").addEventListener("click", () => {
    state = toggleOverlay(state, "polygons");
    draw();
  });
  $("toggle-sites").addEventListener("click", () => {
    state = toggleOverlay(state, "sites");
    draw();
  });
}

if (typeof document !== "undefined" && document.getElementById("map")) {
  wire();
}

export { connectivityDelta };
