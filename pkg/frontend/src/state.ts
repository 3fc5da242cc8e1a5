// View state is a pure projection of the latest service response: rebuilding
// from the same inputs yields the identical state, so a page reload plus a
// refetch reproduces the view.

import type {
  ConstraintRef,
  Diagnostics,
  InstanceDocument,
  ResultFile,
  UnitId,
} from "./types.js";

export interface UnitMarker {
  id: UnitId;
  x: number;
  y: number;
  weight: number;
  fractions: Array<[number, number]>; // [cluster, fraction], cluster-sorted
  majority: number;
  fractional: boolean;
}

export interface Overlays {
  polygons: boolean;
  sites: boolean;
  edges: boolean;
}

export interface ViewState {
  sessionId: string | null;
  approach: string;
  version: number;
  markers: UnitMarker[];
  sites: Array<[number, number] | UnitId>;
  mu: number[];
  k: number;
  summary: ResultFile["summary"] | null;
  diagnostics: Diagnostics | null;
  previousConnectivity: boolean[] | null;
  overlays: Overlays;
  selectedUnit: UnitId | null;
  draft: { pin: ConstraintRef[]; exclude: ConstraintRef[] };
  applied: { pin: ConstraintRef[]; exclude: ConstraintRef[] };
  error: string | null;
}

export function emptyState(approach = "power"): ViewState {
  return {
    sessionId: null,
    approach,
    version: 0,
    markers: [],
    sites: [],
    mu: [],
    k: 0,
    summary: null,
    diagnostics: null,
    previousConnectivity: null,
    overlays: { polygons: true, sites: true, edges: false },
    selectedUnit: null,
    draft: { pin: [], exclude: [] },
    applied: { pin: [], exclude: [] },
    error: null,
  };
}

export function projectResult(
  prev: ViewState,
  instance: InstanceDocument,
  sessionId: string,
  result: ResultFile,
  diagnostics: Diagnostics | null,
): ViewState {
  const byUnit = new Map<UnitId, Array<[number, number]>>();
  for (const a of result.assignments) {
    const list = byUnit.get(a.unit) ?? [];
    list.push([a.cluster, a.fraction]);
    byUnit.set(a.unit, list);
  }
  const markers: UnitMarker[] = instance.units.map((u) => {
    const fractions = (byUnit.get(u.id) ?? []).slice().sort((a, b) => a[0] - b[0]);
    let majority = -1;
    let best = -1;
    for (const [cluster, fraction] of fractions) {
      if (fraction > best) {
        best = fraction;
        majority = cluster;
      }
    }
    return {
      id: u.id,
      x: u.x,
      y: u.y,
      weight: u.weight,
      fractions,
      majority,
      fractional: fractions.length > 1,
    };
  });
  return {
    ...prev,
    sessionId,
    version: prev.version + 1,
    markers,
    sites: result.sites,
    mu: result.mu,
    k: result.mu.length,
    summary: result.summary,
    diagnostics,
    previousConnectivity: prev.diagnostics?.connected ?? prev.previousConnectivity,
    draft: { pin: [], exclude: [] },
    error: null,
  };
}

export function withError(prev: ViewState, message: string): ViewState {
  return { ...prev, error: message };
}

export function selectUnit(prev: ViewState, unit: UnitId | null): ViewState {
  return { ...prev, selectedUnit: unit };
}

export function toggleOverlay(prev: ViewState, key: keyof Overlays): ViewState {
  return { ...prev, overlays: { ...prev.overlays, [key]: !prev.overlays[key] } };
}

function sameRef(a: ConstraintRef, b: ConstraintRef): boolean {
  return a.unit === b.unit && a.cluster === b.cluster;
}

export function draftConstraint(
  prev: ViewState,
  kind: "pin" | "exclude",
  ref: ConstraintRef,
): ViewState {
  const other = kind === "pin" ? "exclude" : "pin";
  if (prev.draft[kind].some((r) => sameRef(r, ref))) {
    return prev;
  }
  return {
    ...prev,
    draft: {
      ...prev.draft,
      [kind]: [...prev.draft[kind], ref],
      [other]: prev.draft[other].filter((r) => !sameRef(r, ref)),
    },
  };
}

export function dropDraft(prev: ViewState, kind: "pin" | "exclude", ref: ConstraintRef): ViewState {
  return {
    ...prev,
    draft: { ...prev.draft, [kind]: prev.draft[kind].filter((r) => !sameRef(r, ref)) },
  };
}

export function recordApplied(prev: ViewState): ViewState {
  return {
    ...prev,
    applied: {
      pin: [...prev.applied.pin, ...prev.draft.pin],
      exclude: [...prev.applied.exclude, ...prev.draft.exclude],
    },
  };
}

export type ConnectivityChange = "fixed" | "broken" | "same";

export function connectivityDelta(
  before: boolean[] | null,
  after: boolean[] | null,
): ConnectivityChange[] {
  if (!after) {
    return [];
  }
  return after.map((ok, i) => {
    const was = before?.[i];
    if (was === undefined || was === ok) {
      return "same";
    }
    return ok ? "fixed" : "broken";
  });
}

export function fractionalCount(state: ViewState): number {
  return state.markers.filter((m) => m.fractional).length;
}
