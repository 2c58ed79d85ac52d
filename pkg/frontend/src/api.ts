// Typed client for the gateway HTTP API (the dashboard's only backend).

export interface CaseInfo {
  case: string;
  suite: string;
  text: string;
  services: string[];
  injections: string[];
}

export interface TaskInfo {
  task_id: string;
  text: string;
  status: string;
  services: string[];
}

export interface ServicePanel {
  ok: boolean;
  error?: string | null;
  slices: string[];
  artifact_hash: string;
  program_hash: string;
}

export interface TaskSlices {
  task_id: string;
  services: Record<string, ServicePanel>;
}

export interface GatewayEvent {
  id: number;
  task_id: string;
  type: string;
  [key: string]: unknown;
}

export interface EventBatch {
  events: GatewayEvent[];
  next: number;
}

export interface DecisionOutcome {
  ok: boolean;
  error?: string;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class GatewayClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    private readonly sessionToken: string | null = null,
  ) {}

  // Mutations authenticate with the session token; reads are open.
  private authHeaders(): Record<string, string> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.sessionToken) {
      headers["Authorization"] = `Bearer ${this.sessionToken}`;
    }
    return headers;
  }

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path);
    if (!resp.ok) {
      throw new Error(`GET ${path} failed: ${resp.status}`);
    }
    return (await resp.json()) as T;
  }

  async getCases(): Promise<CaseInfo[]> {
    const doc = await this.getJson<{ cases: CaseInfo[] }>("/cases");
    return doc.cases;
  }

  async getTasks(): Promise<TaskInfo[]> {
    const doc = await this.getJson<{ tasks: TaskInfo[] }>("/tasks");
    return doc.tasks;
  }

  async getSlices(taskId: string): Promise<TaskSlices> {
    return this.getJson<TaskSlices>(`/tasks/${encodeURIComponent(taskId)}/slices`);
  }

  async pollEvents(taskId: string, after: number, timeoutSec: number): Promise<EventBatch> {
    const path =
      `/tasks/${encodeURIComponent(taskId)}/events?after=${after}&timeout=${timeoutSec}`;
    return this.getJson<EventBatch>(path);
  }

  async submitTask(caseId: string, injected = true): Promise<string> {
    const resp = await this.fetchFn(`${this.baseUrl}/tasks`, {
      method: "POST",
      headers: this.authHeaders(),
      body: JSON.stringify({ case: caseId, injected }),
    });
    if (!resp.ok) {
      const body = await resp.json().catch(() => ({}));
      throw new Error(`submit failed: ${(body as { error?: string }).error ?? resp.status}`);
    }
    const doc = (await resp.json()) as { task_id: string };
    return doc.task_id;
  }

  // The gateway validates and signs the decision; a reused nonce comes back
  // as ok=false (HTTP 409), never as an exception, so the UI can surface it.
  async submitDecision(nonce: string, decision: "approve" | "deny"): Promise<DecisionOutcome> {
    const resp = await this.fetchFn(`${this.baseUrl}/escalations/${encodeURIComponent(nonce)}`, {
      method: "POST",
      headers: this.authHeaders(),
      body: JSON.stringify({ decision }),
    });
    const body = (await resp.json().catch(() => ({}))) as DecisionOutcome;
    return { ok: resp.ok && body.ok === true, error: body.error };
  }
}
