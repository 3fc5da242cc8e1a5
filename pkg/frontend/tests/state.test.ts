import { describe, expect, it } from "vitest";

import {
  connectivityDelta,
  draftConstraint,
  dropDraft,
  emptyState,
  fractionalCount,
  projectResult,
  selectUnit,
  toggleOverlay,
} from "../src/state.js";
import type { Diagnostics, InstanceDocument, ResultFile } from "../src/types.js";

const instance: InstanceDocument = {
  units: [
    { id: "x1", x: 0, y: 0, weight: 1 },
    { id: "x2", x: 1, y: 0, weight: 1 },
    { id: "x3", x: 2, y: 0, weight: 1 },
    { id: "x4", x: 1, y: 2, weight: 1 },
  ],
  k: 2,
};

const result: ResultFile = {
  assignments: [
    { unit: "x1", cluster: 0, fraction: 1.0 },
    { unit: "x2", cluster: 0, fraction: 0.5 },
    { unit: "x2", cluster: 1, fraction: 0.5 },
    { unit: "x3", cluster: 1, fraction: 0.25 },
    { unit: "x3", cluster: 0, fraction: 0.75 },
    { unit: "x4", cluster: 1, fraction: 1.0 },
  ],
  mu: [1, 0],
  sites: ["x1", "x4"],
  summary: {
    avgDeviation: 0,
    maxDeviation: 0,
    momentOfInertia: 3.5,
    changedPairsRatio: null,
    connectivity: [true, true],
    starShaped: true,
  },
  parameters: {},
};

const diagnostics: Diagnostics = {
  feasible: true,
  supports: true,
  starShaped: true,
  connected: [true, true],
  violations: [],
  witnesses: [],
  tolerance: 1e-9,
};

describe("projectResult", () => {
  it("maps assignments onto markers with sorted fractions and majority", () => {
    const state = projectResult(emptyState(), instance, "s1", result, diagnostics);
    expect(state.sessionId).toBe("s1");
    expect(state.markers).toHaveLength(4);
    const x2 = state.markers.find((m) => m.id === "x2")!;
    expect(x2.fractional).toBe(true);
    expect(x2.fractions).toEqual([
      [0, 0.5],
      [1, 0.5],
    ]);
    const x3 = state.markers.find((m) => m.id === "x3")!;
    expect(x3.majority).toBe(0);
    expect(fractionalCount(state)).toBe(2);
    expect(state.k).toBe(2);
  });

  it("is a pure projection: same inputs, identical view", () => {
    const a = projectResult(emptyState(), instance, "s1", result, diagnostics);
    const b = projectResult(emptyState(), instance, "s1", result, diagnostics);
    expect(JSON.stringify({ ...a, version: 0 })).toBe(JSON.stringify({ ...b, version: 0 }));
  });

  it("clears drafts and errors, bumps the version, remembers connectivity", () => {
    let state = emptyState();
    state = projectResult(state, instance, "s1", result, diagnostics);
    state = draftConstraint(state, "pin", { unit: "x2", cluster: 0 });
    state = { ...state, error: "boom" };
    const brokenDiag: Diagnostics = { ...diagnostics, connected: [false, true] };
    const next = projectResult(state, instance, "s1", result, brokenDiag);
    expect(next.draft.pin).toHaveLength(0);
    expect(next.error).toBeNull();
    expect(next.version).toBe(state.version + 1);
    expect(next.previousConnectivity).toEqual([true, true]);
  });
});

describe("constraint drafts", () => {
  it("adds once and flips between pin and exclude", () => {
    let state = emptyState();
    state = draftConstraint(state, "pin", { unit: "x1", cluster: 0 });
    state = draftConstraint(state, "pin", { unit: "x1", cluster: 0 });
    expect(state.draft.pin).toHaveLength(1);
    state = draftConstraint(state, "exclude", { unit: "x1", cluster: 0 });
    expect(state.draft.pin).toHaveLength(0);
    expect(state.draft.exclude).toHaveLength(1);
    state = dropDraft(state, "exclude", { unit: "x1", cluster: 0 });
    expect(state.draft.exclude).toHaveLength(0);
  });
});

describe("view toggles", () => {
  it("selection and overlays round-trip", () => {
    let state = emptyState();
    state = selectUnit(state, "x3");
    expect(state.selectedUnit).toBe("x3");
    const before = state.overlays.polygons;
    state = toggleOverlay(state, "polygons");
    expect(state.overlays.polygons).toBe(!before);
  });
});

describe("connectivityDelta", () => {
  it("labels repaired and broken clusters", () => {
    expect(connectivityDelta([true, false], [true, true])).toEqual(["same", "fixed"]);
    expect(connectivityDelta([true, true], [false, true])).toEqual(["broken", "same"]);
    expect(connectivityDelta(null, [true])).toEqual(["same"]);
    expect(connectivityDelta([true], null)).toEqual([]);
  });
});
