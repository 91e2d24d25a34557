// WebSocket wrapper: validates inbound messages, sends only builder-made
// commands, and surfaces connection state changes.

import {
  CommandMessage, ServerMessage, isValidCommand, parseServerMessage,
} from "./schema.js";

export interface SocketCallbacks {
  onMessage: (msg: ServerMessage) => void;
  onStatus: (connected: boolean) => void;
}

export class PilotSocket {
  private ws: WebSocket | null = null;
  readonly clientId = `ui-${Math.random().toString(36).slice(2, 10)}`;

  constructor(private url: string, private callbacks: SocketCallbacks) {}

  connect(): void {
    if (this.ws) return;
    this.ws = new WebSocket(this.url);
    this.ws.onopen = () => this.callbacks.onStatus(true);
    this.ws.onclose = () => {
      this.ws = null;
      this.callbacks.onStatus(false);
    };
    this.ws.onmessage = (ev) => {
      this.callbacks.onMessage(parseServerMessage(String(ev.data)));
    };
  }

  get connected(): boolean {
    return this.ws !== null && this.ws.readyState === WebSocket.OPEN;
  }

  send(cmd: CommandMessage): boolean {
    if (!this.connected || !isValidCommand(cmd)) return false;
    this.ws!.send(JSON.stringify(cmd));
    return true;
  }
}
