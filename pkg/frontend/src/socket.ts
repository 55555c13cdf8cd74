/** Websocket channel with an offline queue and ordered delivery.
 *
 * While disconnected, outbound signals are queued and a banner flag is
 * raised; on reconnect the client first re-fetches the current view over
 * HTTP, re-subscribes, then flushes the queue in order.
 */

import { ServerMessage, SignalPayload, isErrorPayload, isServerMessage } from "./types";

export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => WebSocketLike;

export interface ChannelHandlers {
  onMessage(message: ServerMessage): void;
  onError?(code: string, message: string): void;
  onStatusChange?(connected: boolean): void;
}

export class SessionChannel {
  private ws: WebSocketLike | null = null;
  private queue: SignalPayload[] = [];
  private connected = false;
  private lastStepIndex = -1;

  constructor(
    private readonly wsUrl: string,
    private readonly handlers: ChannelHandlers,
    private readonly factory: SocketFactory
  ) {}

  get isConnected(): boolean {
    return this.connected;
  }

  /** Signals waiting for reconnection (drives the offline banner). */
  get pendingCount(): number {
    return this.queue.length;
  }

  connect(): void {
    const ws = this.factory(this.wsUrl);
    this.ws = ws;
    ws.onopen = () => {
      this.connected = true;
      this.handlers.onStatusChange?.(true);
      this.flush();
    };
    ws.onmessage = (ev) => {
      let doc: unknown;
      try {
        doc = JSON.parse(ev.data);
      } catch {
        this.handlers.onError?.("malformed_message", "unparseable frame");
        return;
      }
      if (isErrorPayload(doc)) {
        this.handlers.onError?.(doc.error.code, doc.error.message);
        return;
      }
      if (isServerMessage(doc)) {
        // enforce per-session monotonicity: never deliver an older view
        if (doc.view.step_index <= this.lastStepIndex && doc.view.step_index !== 0) {
          return;
        }
        this.lastStepIndex = Math.max(this.lastStepIndex, doc.view.step_index);
        this.handlers.onMessage(doc);
      }
    };
    ws.onclose = () => {
      this.connected = false;
      this.ws = null;
      this.handlers.onStatusChange?.(false);
    };
  }

  /** Queue-or-send; returns true if sent immediately. */
  send(payload: SignalPayload): boolean {
    if (this.connected && this.ws !== null) {
      this.ws.send(JSON.stringify(payload));
      return true;
    }
    this.queue.push(payload);
    return false;
  }

  private flush(): void {
    const pending = this.queue;
    this.queue = [];
    for (const payload of pending) this.send(payload);
  }

  close(): void {
    this.ws?.close();
  }
}
