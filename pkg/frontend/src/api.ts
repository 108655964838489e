/** Typed client for the curation API. Every non-2xx response carries one
 * {error: {code, message}} envelope, surfaced here as ApiError. */

import type {
  CurationEventBody,
  EvalReport,
  ExportDocument,
  Job,
  SessionSnapshot,
  Stage,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  try {
    const body = await response.json();
    if (body && body.error && typeof body.error.code === "string") {
      return new ApiError(body.error.code, body.error.message ?? "", response.status);
    }
  } catch {
    /* fall through to the generic error below */
  }
  return new ApiError("unknown_error", `HTTP ${response.status}`, response.status);
}

export class ApiClient {
  constructor(
    public baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/healthz");
  }

  createSession(scenario: string): Promise<SessionSnapshot> {
    return this.request("POST", "/sessions", { scenario });
  }

  getSession(sessionId: string): Promise<SessionSnapshot> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}`);
  }

  postEvent(
    sessionId: string,
    event: CurationEventBody,
  ): Promise<{ event_id: string; changed: Record<string, unknown> }> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/events`, event);
  }

  startStage(sessionId: string, stage: Stage, params: Record<string, unknown>): Promise<{ job_id: string }> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/stages/${stage}`, params);
  }

  getJob(jobId: string): Promise<Job> {
    return this.request("GET", `/jobs/${encodeURIComponent(jobId)}`);
  }

  /** Poll until the job reaches a terminal state; rejects on job error. */
  async pollJob(jobId: string, onProgress?: (job: Job) => void, intervalMs = 150): Promise<Job> {
    for (;;) {
      const job = await this.getJob(jobId);
      onProgress?.(job);
      if (job.status === "done") {
        return job;
      }
      if (job.status === "error") {
        throw new ApiError(job.error?.code ?? "llm_failure", job.error?.message ?? "stage failed", 502);
      }
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }

  getExport(sessionId: string): Promise<ExportDocument> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}/export`);
  }

  getMetrics(sessionId: string, k = 3): Promise<EvalReport> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}/metrics?k=${k}`);
  }
}
