/** Client-side session state: view mirror, connection, input gating.
 *
 * The model never invents state — every field it exposes is either a
 * received view/event or purely local bookkeeping (click overlay,
 * connection status).  One signal may be in flight at a time; input is
 * re-enabled when the next view arrives.
 */

import {
  ClientStateView,
  ServerEvent,
  ServerMessage,
  SignalPayload,
} from "./types";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface ModelListener {
  onViewChanged?(view: ClientStateView): void;
  onEvent?(event: ServerEvent): void;
  onConnectionChanged?(status: ConnectionStatus): void;
}

export class UiSessionModel {
  view: ClientStateView | null = null;
  connection: ConnectionStatus = "connecting";
  /** Local click overlay (level 5 only); never sent anywhere. */
  readonly clickHistory: Array<[number, number]> = [];
  private inFlight = false;
  private listeners: ModelListener[] = [];

  addListener(l: ModelListener): void {
    this.listeners.push(l);
  }

  /** True when the user may produce the next signal. */
  get inputEnabled(): boolean {
    return (
      this.connection === "connected" &&
      !this.inFlight &&
      this.view !== null &&
      this.view.status === "InProgress"
    );
  }

  get terminal(): boolean {
    return this.view !== null && this.view.status !== "InProgress";
  }

  setConnection(status: ConnectionStatus): void {
    this.connection = status;
    for (const l of this.listeners) l.onConnectionChanged?.(status);
  }

  /** Gate a signal: returns the payload to send, or null if blocked. */
  takeSignal(payload: SignalPayload): SignalPayload | null {
    if (!this.inputEnabled) return null;
    this.inFlight = true;
    if ("point" in payload) this.clickHistory.push(payload.point);
    return payload;
  }

  applyMessage(message: ServerMessage): void {
    // messages arrive in order; ignore stale snapshots
    if (this.view !== null && message.view.step_index < this.view.step_index) {
      return;
    }
    this.view = message.view;
    this.inFlight = false;
    for (const l of this.listeners) l.onViewChanged?.(message.view);
    for (const event of message.events) {
      for (const l of this.listeners) l.onEvent?.(event);
    }
  }
}
