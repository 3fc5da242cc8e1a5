// Thin client over the session HTTP API. All verdicts and geometry come from
// the service; the client only moves JSON.

import type {
  CellsPayload,
  ConstraintsRequest,
  Diagnostics,
  InstanceDocument,
  PipelineOptions,
  ResultFile,
  SessionResponse,
} from "./types.js";

export class ServiceError extends Error {
  readonly status: number;
  readonly details: string[];

  constructor(status: number, message: string, details: string[] = []) {
    super(message);
    this.status = status;
    this.details = details;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchImpl(this.base + path, {
        method,
        headers: { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ServiceError(0, `service unreachable: ${String(err)}`);
    }
    const payload = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      const message = typeof payload?.error === "string" ? payload.error : `HTTP ${resp.status}`;
      const details = Array.isArray(payload?.details) ? payload.details.map(String) : [];
      throw new ServiceError(resp.status, message, details);
    }
    return payload as T;
  }

  createSession(
    instance: InstanceDocument,
    approach: string,
    options: PipelineOptions = {},
  ): Promise<SessionResponse> {
    return this.request<SessionResponse>("POST", "/sessions", { instance, approach, options });
  }

  postConstraints(sessionId: string, constraints: ConstraintsRequest): Promise<SessionResponse> {
    return this.request<SessionResponse>(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/constraints`,
      constraints,
    );
  }

  getResult(sessionId: string): Promise<ResultFile> {
    return this.request<ResultFile>("GET", `/sessions/${encodeURIComponent(sessionId)}/result`);
  }

  getCells(sessionId: string): Promise<{ cells: CellsPayload }> {
    return this.request<{ cells: CellsPayload }>(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/result?include=cells`,
    );
  }

  getDiagnostics(sessionId: string): Promise<Diagnostics> {
    return this.request<Diagnostics>(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/diagnostics`,
    );
  }
}
