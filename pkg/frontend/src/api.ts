/** Minimal HTTP client for the vault service lifecycle endpoints. */

import {
  ClientStateView,
  ErrorPayload,
  ServerMessage,
  SignalPayload,
  isErrorPayload,
} from "./types";

export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string }
) => Promise<{ status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number
  ) {
    super(message);
  }
}

export interface CreateSessionRequest {
  level: number;
  reveal_weights?: boolean;
  seed?: number;
  code?: number[];
}

export interface CreateSessionResponse {
  session_id: string;
  view: ClientStateView;
}

export class VaultApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch as unknown as FetchLike
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown
  ): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const doc = await resp.json();
    if (resp.status >= 400) {
      if (isErrorPayload(doc)) {
        const e = (doc as ErrorPayload).error;
        throw new ApiError(e.code, e.message, resp.status);
      }
      throw new ApiError("unknown_error", `HTTP ${resp.status}`, resp.status);
    }
    return doc as T;
  }

  createSession(req: CreateSessionRequest): Promise<CreateSessionResponse> {
    return this.request("POST", "/api/session", req);
  }

  getSession(sessionId: string): Promise<ClientStateView> {
    return this.request("GET", `/api/session/${sessionId}`);
  }

  submitSignal(sessionId: string, signal: SignalPayload): Promise<ServerMessage> {
    return this.request("POST", `/api/session/${sessionId}/signal`, signal);
  }

  deleteSession(sessionId: string): Promise<{ deleted: string }> {
    return this.request("DELETE", `/api/session/${sessionId}`);
  }
}
