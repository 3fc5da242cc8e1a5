// Wire types mirroring the service's JSON responses.

export type UnitId = string | number;

export interface Assignment {
  unit: UnitId;
  cluster: number;
  fraction: number;
}

export interface EvaluationSummary {
  avgDeviation: number;
  maxDeviation: number;
  momentOfInertia: number;
  changedPairsRatio: number | null;
  connectivity: boolean[] | null;
  starShaped: boolean | null;
}

export interface ResultFile {
  assignments: Assignment[];
  mu: number[];
  sites: Array<[number, number] | UnitId>;
  summary: EvaluationSummary;
  parameters: Record<string, unknown>;
}

export interface SessionResponse {
  sessionId: string;
  result: ResultFile;
}

export interface Diagnostics {
  feasible: boolean;
  supports: boolean;
  starShaped: boolean | null;
  connected: boolean[] | null;
  violations: Array<[number, UnitId, string]>;
  witnesses: Array<[number, UnitId, UnitId]>;
  tolerance: number;
}

export interface CellMembership {
  unit: UnitId;
  clusters: number[];
}

export interface CellsPayload {
  membership: CellMembership[];
  eta: number[];
  polygons?: number[][][];
  boundingBox?: number[];
}

export interface InstanceUnit {
  id: UnitId;
  x: number;
  y: number;
  weight: number;
}

export interface InstanceDocument {
  units: InstanceUnit[];
  edges?: Array<{ a: UnitId; b: UnitId; length: number }>;
  k: number;
  capacities?: number[];
  reference?: Array<{ unit: UnitId; cluster: number }>;
}

export interface ConstraintRef {
  unit: UnitId;
  cluster: number;
}

export interface ConstraintsRequest {
  pin?: ConstraintRef[];
  exclude?: ConstraintRef[];
  clear?: ConstraintRef[] | "all";
}

export interface PipelineOptions {
  seed?: number;
  restarts?: number;
  maxIter?: number;
  neighborhood?: number;
}
