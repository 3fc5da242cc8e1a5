// Pure SVG builders: everything returns strings or plain data, so rendering
// is testable without a DOM. Fractional units draw as pie markers split by
// their assigned fractions, which makes the at-most-(k-1) fractional units
// of a vertex solution visible at a glance.

import type { ViewState } from "./state.js";
import type { Diagnostics, EvaluationSummary, UnitId } from "./types.js";

export function clusterColor(i: number, k: number): string {
  if (i < 0) {
    return "#999999";
  }
  const hue = Math.round((360 * i) / Math.max(1, k));
  return `hsl(${hue}, 70%, 45%)`;
}

export interface ViewBox {
  x: number;
  y: number;
  width: number;
  height: number;
}

export function viewBoxFor(points: Array<{ x: number; y: number }>, pad = 0.08): ViewBox {
  if (points.length === 0) {
    return { x: 0, y: 0, width: 1, height: 1 };
  }
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const spanX = Math.max(maxX - minX, 1e-9);
  const spanY = Math.max(maxY - minY, 1e-9);
  const margin = pad * Math.max(spanX, spanY);
  return {
    x: minX - margin,
    y: minY - margin,
    width: spanX + 2 * margin,
    height: spanY + 2 * margin,
  };
}

// One closed arc path per fraction; a lone full assignment becomes a circle.
export function pieSlices(
  cx: number,
  cy: number,
  r: number,
  fractions: Array<[number, number]>,
  k: number,
): string {
  if (fractions.length <= 1) {
    const color = clusterColor(fractions[0]?.[0] ?? -1, k);
    return `<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" fill="${color}"/>`;
  }
  const total = fractions.reduce((acc, [, f]) => acc + f, 0);
  let angle = -Math.PI / 2;
  const parts: string[] = [];
  for (const [cluster, fraction] of fractions) {
    const sweep = (2 * Math.PI * fraction) / total;
    const x1 = cx + r * Math.cos(angle);
    const y1 = cy + r * Math.sin(angle);
    const x2 = cx + r * Math.cos(angle + sweep);
    const y2 = cy + r * Math.sin(angle + sweep);
    const large = sweep > Math.PI ? 1 : 0;
    parts.push(
      `<path d="M ${fmt(cx)} ${fmt(cy)} L ${fmt(x1)} ${fmt(y1)} ` +
        `A ${fmt(r)} ${fmt(r)} 0 ${large} 1 ${fmt(x2)} ${fmt(y2)} Z" ` +
        `fill="${clusterColor(cluster, k)}"/>`,
    );
    angle += sweep;
  }
  return parts.join("");
}

function fmt(v: number): string {
  return Number(v.toFixed(4)).toString();
}

function esc(v: UnitId): string {
  return String(v).replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/"/g, "&quot;");
}

export function markersSvg(state: ViewState, radius: number): string {
  const out: string[] = [];
  for (const m of state.markers) {
    const selected = state.selectedUnit === m.id;
    const r = radius * (selected ? 1.6 : 1.0);
    out.push(
      `<g class="unit${m.fractional ? " fractional" : ""}" data-unit="${esc(m.id)}">` +
        pieSlices(m.x, m.y, r, m.fractions, state.k) +
        (selected
          ? `<circle cx="${fmt(m.x)}" cy="${fmt(m.y)}" r="${fmt(r * 1.25)}" fill="none" stroke="#000" stroke-width="${fmt(radius / 3)}"/>`
          : "") +
        `</g>`,
    );
  }
  return out.join("");
}

export function sitesSvg(state: ViewState, size: number): string {
  if (!state.overlays.sites) {
    return "";
  }
  const out: string[] = [];
  state.sites.forEach((site, i) => {
    let x: number;
    let y: number;
    if (Array.isArray(site)) {
      [x, y] = site;
    } else {
      const unit = state.markers.find((m) => m.id === site);
      if (!unit) {
        return;
      }
      x = unit.x;
      y = unit.y;
    }
    const h = size / 2;
    out.push(
      `<rect class="site" data-cluster="${i}" x="${fmt(x - h)}" y="${fmt(y - h)}" ` +
        `width="${fmt(size)}" height="${fmt(size)}" fill="white" ` +
        `stroke="${clusterColor(i, state.k)}" stroke-width="${fmt(size / 4)}"/>`,
    );
  });
  return out.join("");
}

export function polygonsSvg(state: ViewState, polygons: number[][][] | undefined): string {
  if (!state.overlays.polygons || !polygons) {
    return "";
  }
  const out: string[] = [];
  polygons.forEach((poly, i) => {
    if (poly.length < 3) {
      return;
    }
    const pts = poly.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    out.push(
      `<polygon class="cell" data-cluster="${i}" points="${pts}" ` +
        `fill="${clusterColor(i, state.k)}" fill-opacity="0.12" ` +
        `stroke="${clusterColor(i, state.k)}" stroke-width="0.5%"/>`,
    );
  });
  return out.join("");
}

export interface PanelRow {
  label: string;
  value: string;
  tone: "ok" | "warn" | "bad" | "plain";
}

export function deviationPanel(summary: EvaluationSummary | null): PanelRow[] {
  if (!summary) {
    return [];
  }
  const rows: PanelRow[] = [
    {
      label: "max deviation",
      value: `${(summary.maxDeviation * 100).toFixed(2)}%`,
      tone: summary.maxDeviation <= 1e-9 ? "ok" : summary.maxDeviation <= 0.15 ? "warn" : "bad",
    },
    {
      label: "avg deviation",
      value: `${(summary.avgDeviation * 100).toFixed(2)}%`,
      tone: "plain",
    },
    { label: "moment of inertia", value: summary.momentOfInertia.toFixed(2), tone: "plain" },
  ];
  if (summary.changedPairsRatio !== null) {
    rows.push({
      label: "changed pairs",
      value: `${(summary.changedPairsRatio * 100).toFixed(1)}%`,
      tone: "plain",
    });
  }
  return rows;
}

export interface DiagnosticFlag {
  label: string;
  state: "ok" | "bad" | "na";
}

export interface WitnessTarget {
  cluster: number;
  unit: UnitId;
  intermediate: UnitId;
  text: string;
}

export interface DiagnosticsView {
  flags: DiagnosticFlag[];
  perCluster: Array<{ cluster: number; connected: boolean; change: string }>;
  witnesses: WitnessTarget[];
}

export function diagnosticsView(
  diag: Diagnostics | null,
  previousConnectivity: boolean[] | null,
): DiagnosticsView {
  if (!diag) {
    return { flags: [], perCluster: [], witnesses: [] };
  }
  const flags: DiagnosticFlag[] = [
    { label: "feasible", state: diag.feasible ? "ok" : "bad" },
    { label: "supports", state: diag.supports ? "ok" : "bad" },
    {
      label: "star-shaped",
      state: diag.starShaped === null ? "na" : diag.starShaped ? "ok" : "bad",
    },
  ];
  const perCluster = (diag.connected ?? []).map((connected, cluster) => {
    const was = previousConnectivity?.[cluster];
    let change = "";
    if (was !== undefined && was !== connected) {
      change = connected ? "repaired" : "broke";
    }
    return { cluster, connected, change };
  });
  const witnesses = diag.witnesses.map(([cluster, unit, intermediate]) => ({
    cluster,
    unit,
    intermediate,
    text: `cluster ${cluster}: ${String(unit)} skips ${String(intermediate)}`,
  }));
  return { flags, perCluster, witnesses };
}
