/** Typed client for the session HTTP API. The console talks to nothing else. */

export interface BoxJson {
  description: string;
  center: number[];
  scale: number[];
}

export interface LayoutJson {
  dialect: string;
  description: string;
  objects: BoxJson[];
}

export interface OpJson {
  kind: string;
  description: string;
  prev_index?: number;
  next_index?: number;
  new_center?: number[];
  new_scale?: number[];
  new_description?: string;
}

export interface PlanJson {
  dialect: string;
  ops: OpJson[];
  matches: number[][];
  next_description: string;
  directives: { action: string; params: Record<string, unknown> }[];
}

export interface FeedbackJson {
  verdict: "match" | "mismatch";
  reason: string;
  detail: string | null;
}

export interface RecordJson {
  round_index: number;
  instruction: string;
  raw_response: string;
  layout: LayoutJson;
  plan: PlanJson;
  render_ref: Record<string, { digest: string; file: string }> | null;
  feedback_trail: FeedbackJson[];
  degraded: boolean;
}

export interface SessionJson {
  schema_version: number;
  id: string;
  dialect: string;
  policy: string;
  records: RecordJson[];
  rounds?: number;
}

export interface ApiErrorBody {
  error: { code: string; message: string; violations?: unknown[] };
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function asJson<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    const err = (body as ApiErrorBody | null)?.error;
    throw new ApiError(response.status, err?.code ?? "http_error", err?.message ?? response.statusText);
  }
  return body as T;
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private async request<T>(method: string, path: string, payload?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (payload !== undefined) {
      init.body = JSON.stringify(payload);
      init.headers = { "Content-Type": "application/json" };
    }
    return asJson<T>(await this.fetchFn(this.url(path), init));
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/healthz");
  }

  createSession(dialect: string, policy = "off"): Promise<{ id: string }> {
    return this.request("POST", "/sessions", { dialect, policy });
  }

  getSession(id: string): Promise<SessionJson> {
    return this.request("GET", `/sessions/${id}`);
  }

  postInstruction(id: string, text: string): Promise<RecordJson> {
    return this.request("POST", `/sessions/${id}/instructions`, { text });
  }

  putLayout(id: string, layout: LayoutJson): Promise<RecordJson> {
    return this.request("PUT", `/sessions/${id}/layout`, { layout });
  }

  getRecord(id: string, round: number): Promise<RecordJson> {
    return this.request("GET", `/sessions/${id}/records/${round}`);
  }

  runFeedback(id: string): Promise<{ record: RecordJson; changed: boolean }> {
    return this.request("POST", `/sessions/${id}/feedback`, {});
  }

  renderUrl(id: string, round: number, view: string): string {
    return this.url(`/sessions/${id}/render/${round}/${view}`);
  }
}
