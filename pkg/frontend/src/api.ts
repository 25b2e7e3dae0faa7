// Typed client for the studio's only backend surface: the HTTP API.

import type {
  ElementCard,
  ElementTypeKey,
  FieldKey,
  HistoryItem,
  JobHandle,
  MetricsResponse,
  RequirementCards,
  RequirementEntry,
  SelectionSet,
  SessionDoc,
} from "./types.js";

export class ApiRequestError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
    public details: unknown = null,
  ) {
    super(message);
    this.name = "ApiRequestError";
  }
}

export class JobFailedError extends Error {
  constructor(
    public code: string,
    message: string,
    public job: JobHandle,
  ) {
    super(message);
    this.name = "JobFailedError";
  }
}

export class ApiClient {
  constructor(public base: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.base + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let code = `http_${response.status}`;
      let message = response.statusText;
      let details: unknown = null;
      try {
        const payload = await response.json();
        code = payload.code ?? code;
        message = payload.message ?? message;
        details = payload.details ?? null;
      } catch {
        // non-JSON error body; keep the HTTP status info
      }
      throw new ApiRequestError(code, message, response.status, details);
    }
    return (await response.json()) as T;
  }

  createSession(body: {
    brief_text: string;
    output_language?: string;
    deliverable_format?: string;
    orientation?: string;
  }): Promise<SessionDoc> {
    return this.request("POST", "/sessions", body);
  }

  getSession(sessionId: string): Promise<SessionDoc> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  extract(sessionId: string): Promise<JobHandle> {
    return this.request("POST", `/sessions/${sessionId}/requirements/extract`);
  }

  recommendRequirements(sessionId: string, field: FieldKey, n?: number): Promise<JobHandle> {
    return this.request("POST", `/sessions/${sessionId}/requirements/${field}/recommend`, {
      n: n ?? null,
    });
  }

  addEntry(
    sessionId: string,
    field: FieldKey,
    text: string,
    origin: "manual" | "recommended" = "manual",
  ): Promise<{ requirement_cards: RequirementCards }> {
    return this.request("POST", `/sessions/${sessionId}/requirements/entries`, {
      field,
      text,
      origin,
    });
  }

  editEntry(
    sessionId: string,
    entryId: string,
    text: string,
  ): Promise<{ requirement_cards: RequirementCards }> {
    return this.request("PATCH", `/sessions/${sessionId}/requirements/entries/${entryId}`, {
      text,
    });
  }

  deleteEntry(sessionId: string, entryId: string): Promise<{ requirement_cards: RequirementCards }> {
    return this.request("DELETE", `/sessions/${sessionId}/requirements/entries/${entryId}`);
  }

  recommendElements(sessionId: string, type: ElementTypeKey, n?: number): Promise<JobHandle> {
    return this.request("POST", `/sessions/${sessionId}/elements/${type}/recommend`, {
      n: n ?? null,
    });
  }

  addElement(sessionId: string, type: ElementTypeKey, roughPrompt: string): Promise<JobHandle> {
    return this.request("POST", `/sessions/${sessionId}/elements/${type}`, {
      rough_prompt: roughPrompt,
    });
  }

  editCard(sessionId: string, cardId: string, roughPrompt: string): Promise<JobHandle> {
    return this.request("POST", `/sessions/${sessionId}/elements/${cardId}/edit`, {
      rough_prompt: roughPrompt,
    });
  }

  regenerateCard(sessionId: string, cardId: string): Promise<JobHandle> {
    return this.request("POST", `/sessions/${sessionId}/elements/${cardId}/regenerate`);
  }

  deleteCard(sessionId: string, cardId: string): Promise<{ ok: boolean }> {
    return this.request("DELETE", `/sessions/${sessionId}/elements/${cardId}`);
  }

  putSelection(
    sessionId: string,
    selection: SelectionSet,
  ): Promise<{ selection: SelectionSet; validated: unknown }> {
    return this.request("PUT", `/sessions/${sessionId}/selection`, selection);
  }

  integrate(sessionId: string): Promise<JobHandle> {
    return this.request("POST", `/sessions/${sessionId}/integrate`);
  }

  regenerateDesign(sessionId: string): Promise<JobHandle> {
    return this.request("POST", `/sessions/${sessionId}/regenerate-design`);
  }

  getHistory(sessionId: string): Promise<{ history: HistoryItem[] }> {
    return this.request("GET", `/sessions/${sessionId}/history`);
  }

  getMetrics(sessionId: string): Promise<MetricsResponse> {
    return this.request("GET", `/sessions/${sessionId}/metrics`);
  }

  getJob(jobId: string): Promise<JobHandle> {
    return this.request("GET", `/jobs/${jobId}`);
  }

  imageUrl(contentHash: string): string {
    return `${this.base}/images/${contentHash}`;
  }
}

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  onUpdate?: (job: JobHandle) => void;
}

/** Poll a job until done or failed; polling stops at the first terminal state. */
export async function pollJob(
  api: ApiClient,
  job: JobHandle,
  options: PollOptions = {},
): Promise<JobHandle> {
  const intervalMs = options.intervalMs ?? 200;
  const timeoutMs = options.timeoutMs ?? 180_000;
  const deadline = Date.now() + timeoutMs;
  let current = job;
  while (current.state !== "done" && current.state !== "failed") {
    if (Date.now() > deadline) {
      throw new JobFailedError("poll_timeout", `job ${job.job_id} did not finish`, current);
    }
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
    current = await api.getJob(job.job_id);
    options.onUpdate?.(current);
  }
  if (current.state === "failed") {
    const error = current.error ?? { code: "job_failed", message: "job failed" };
    throw new JobFailedError(error.code, error.message, current);
  }
  return current;
}

/** Extract a typed payload from a finished job's result. */
export function jobResult<T>(job: JobHandle, key: string): T {
  if (job.result === null || !(key in job.result)) {
    throw new JobFailedError("missing_result", `job result lacks ${key}`, job);
  }
  return job.result[key] as T;
}

export type { ElementCard, RequirementEntry };
