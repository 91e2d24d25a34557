// Wire schema shared with the simulation service (version 1).
// Every message carries "v"; the UI refuses to render mismatched versions.

export const SCHEMA_VERSION = 1;

export interface StateFields {
  x: number; y: number; z: number;
  vx: number; vy: number; vz: number;
  phi: number; theta: number; psi: number;
  p: number; q: number; r: number;
}

export interface RefFields {
  xd: number; yd: number; zd: number;
  phid: number; thetad: number; psid: number;
}

export interface TelemetryFrame {
  v: number;
  t: number;
  state: StateFields;
  ref: RefFields;
  S: number[];
  U: number[];
  force: number[];
  gated: boolean;
}

export interface ConfigFrame {
  v: number;
  config: {
    threshold: number;
    dt?: number;
    decimate?: number;
    mode: string;
    speed?: number;
    records?: number;
  };
}

export interface ErrorFrame {
  v: number;
  error: string;
}

export type ServerMessage =
  | { kind: "frame"; frame: TelemetryFrame }
  | { kind: "config"; config: ConfigFrame }
  | { kind: "error"; error: string }
  | { kind: "invalid"; reason: string };

const STATE_KEYS: (keyof StateFields)[] = [
  "x", "y", "z", "vx", "vy", "vz", "phi", "theta", "psi", "p", "q", "r",
];
const REF_KEYS: (keyof RefFields)[] = ["xd", "yd", "zd", "phid", "thetad", "psid"];

function finiteNumbers(obj: unknown, keys: string[]): boolean {
  if (typeof obj !== "object" || obj === null) return false;
  const rec = obj as Record<string, unknown>;
  return keys.every((k) => typeof rec[k] === "number" && Number.isFinite(rec[k] as number));
}

function finiteArray(value: unknown, length: number): boolean {
  return Array.isArray(value) && value.length === length &&
    value.every((x) => typeof x === "number" && Number.isFinite(x));
}

/** Classify and validate one raw message from the socket. */
export function parseServerMessage(raw: string): ServerMessage {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return { kind: "invalid", reason: "not JSON" };
  }
  if (typeof doc !== "object" || doc === null) {
    return { kind: "invalid", reason: "not an object" };
  }
  const msg = doc as Record<string, unknown>;
  if (msg.v !== SCHEMA_VERSION) {
    return { kind: "invalid", reason: `schema version ${String(msg.v)} (want ${SCHEMA_VERSION})` };
  }
  if (typeof msg.error === "string") {
    return { kind: "error", error: msg.error };
  }
  if (typeof msg.config === "object" && msg.config !== null) {
    const cfg = msg.config as Record<string, unknown>;
    if (typeof cfg.threshold !== "number" && cfg.mode !== "replay") {
      return { kind: "invalid", reason: "config frame missing threshold" };
    }
    return { kind: "config", config: doc as ConfigFrame };
  }
  if (
    typeof msg.t === "number" &&
    finiteNumbers(msg.state, STATE_KEYS) &&
    finiteNumbers(msg.ref, REF_KEYS) &&
    finiteArray(msg.S, 6) &&
    finiteArray(msg.U, 4) &&
    finiteArray(msg.force, 3) &&
    typeof msg.gated === "boolean"
  ) {
    return { kind: "frame", frame: doc as TelemetryFrame };
  }
  return { kind: "invalid", reason: "frame fields missing or malformed" };
}

export interface CommandMessage {
  kind: "apply_force" | "clear_force" | "pause" | "resume" | "reset";
  force?: [number, number, number];
  client: string;
  ts: number;
}

/** Builders are the only way the UI creates commands, so every message the
 * socket sends is schema-valid by construction. */
export function applyForceCommand(
  force: [number, number, number], client: string, ts: number,
): CommandMessage {
  if (!force.every((x) => Number.isFinite(x))) {
    throw new Error("force must be finite");
  }
  return { kind: "apply_force", force, client, ts };
}

export function simpleCommand(
  kind: "clear_force" | "pause" | "resume" | "reset", client: string, ts: number,
): CommandMessage {
  return { kind, client, ts };
}

export function isValidCommand(cmd: CommandMessage): boolean {
  const kinds = ["apply_force", "clear_force", "pause", "resume", "reset"];
  if (!kinds.includes(cmd.kind)) return false;
  if (cmd.kind === "apply_force") {
    if (!cmd.force || !finiteArray(cmd.force, 3)) return false;
  }
  return typeof cmd.client === "string" && Number.isFinite(cmd.ts);
}
