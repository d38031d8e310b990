// HTTP client for /api/v1. Every committed gesture maps to exactly one call
// here; mutations queue so a pending request is never raced by the next
// gesture. No optimistic updates: callers re-render only from responses.

export interface ApiErrorBody {
  error: { code: string; message: string };
}

export class ApiError extends Error {
  code: string;
  status: number;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.status = status;
    this.code = code;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private base: string;
  private fetchFn: FetchLike;
  private queue: Promise<unknown> = Promise.resolve();

  constructor(base = "/api/v1", fetchFn: FetchLike = (...args) => fetch(...args)) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const resp = await this.fetchFn(`${this.base}${path}`, init);
    const payload = await resp.json();
    if (!resp.ok) {
      const err = (payload as ApiErrorBody).error ?? {
        code: "unknown",
        message: `HTTP ${resp.status}`,
      };
      throw new ApiError(resp.status, err.code, err.message);
    }
    return payload as T;
  }

  get<T>(path: string): Promise<T> {
    return this.request<T>("GET", path);
  }

  // mutations run strictly one at a time, in gesture order
  post<T>(path: string, body?: unknown): Promise<T> {
    const next = this.queue.then(
      () => this.request<T>("POST", path, body),
      () => this.request<T>("POST", path, body),
    );
    this.queue = next.catch(() => undefined);
    return next;
  }
}
