/** Wire types shared with the vault service. */

export type SessionStatus = "InProgress" | "Opened" | "Failed";

export interface PatternView {
  A: number[];
  B: number[];
  /** Present only for level 1. */
  colors?: { A: string; B: string };
}

export interface ClientStateView {
  session_id: string;
  level: number;
  status: SessionStatus;
  step_index: number;
  digits_accepted: number;
  pattern: PatternView | null;
  /** Present only when the session was created with reveal_weights. */
  weights?: number[] | null;
}

export interface ServerEvent {
  kind: string;
  payload: Record<string, unknown>;
}

export interface ServerMessage {
  view: ClientStateView;
  events: ServerEvent[];
}

export interface ErrorPayload {
  error: { code: string; message: string };
}

export type SignalPayload = { button: number } | { point: [number, number] };

export function isErrorPayload(doc: unknown): doc is ErrorPayload {
  return (
    typeof doc === "object" &&
    doc !== null &&
    typeof (doc as ErrorPayload).error === "object" &&
    (doc as ErrorPayload).error !== null &&
    typeof (doc as ErrorPayload).error.code === "string"
  );
}

export function isServerMessage(doc: unknown): doc is ServerMessage {
  if (typeof doc !== "object" || doc === null) return false;
  const m = doc as ServerMessage;
  return (
    typeof m.view === "object" &&
    m.view !== null &&
    typeof m.view.session_id === "string" &&
    Array.isArray(m.events)
  );
}

export function assertValidView(view: ClientStateView): void {
  if (![1, 4, 5].includes(view.level)) {
    throw new Error(`unknown level ${view.level}`);
  }
  if (!["InProgress", "Opened", "Failed"].includes(view.status)) {
    throw new Error(`unknown status ${view.status}`);
  }
}
