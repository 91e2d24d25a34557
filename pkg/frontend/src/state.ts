// Session state: the only mutable stores are the ring buffers and the
// latest-frame slots.  Everything rendered comes from telemetry frames;
// the UI derives plot series here and computes no physics.

import { RingBuffer } from "./ring.js";
import { ConfigFrame, TelemetryFrame } from "./schema.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface PlotPoint {
  t: number;
  actual: number;
  ref: number;
}

export interface ForcePoint {
  t: number;
  magnitude: number;
  gated: boolean;
}

export interface SurfacePoint {
  t: number;
  S: number[];
  V: number[];
}

export interface PathPoint {
  x: number;
  y: number;
}

export const DEFAULT_CAPACITY = 600; // 20 s of frames at 30 Hz

export class UiSessionState {
  status: ConnectionStatus = "connecting";
  latest: TelemetryFrame | null = null;
  config: ConfigFrame["config"] | null = null;
  versionMismatch: string | null = null;
  commandedForce: [number, number, number] = [0, 0, 0];
  forceActive = false;

  readonly axes: Record<"x" | "y" | "z", RingBuffer<PlotPoint>>;
  readonly force: RingBuffer<ForcePoint>;
  readonly surfaces: RingBuffer<SurfacePoint>;
  readonly path: RingBuffer<PathPoint>;

  constructor(capacity: number = DEFAULT_CAPACITY) {
    this.axes = {
      x: new RingBuffer(capacity),
      y: new RingBuffer(capacity),
      z: new RingBuffer(capacity),
    };
    this.force = new RingBuffer(capacity);
    this.surfaces = new RingBuffer(capacity);
    this.path = new RingBuffer(capacity * 4);
  }

  get threshold(): number {
    return this.config?.threshold ?? 0;
  }

  applyFrame(frame: TelemetryFrame): void {
    this.latest = frame;
    this.axes.x.push({ t: frame.t, actual: frame.state.x, ref: frame.ref.xd });
    this.axes.y.push({ t: frame.t, actual: frame.state.y, ref: frame.ref.yd });
    this.axes.z.push({ t: frame.t, actual: frame.state.z, ref: frame.ref.zd });
    const mag = Math.hypot(frame.force[0], frame.force[1], frame.force[2]);
    this.force.push({ t: frame.t, magnitude: mag, gated: frame.gated });
    this.surfaces.push({
      t: frame.t,
      S: frame.S.slice(),
      V: frame.S.map((s) => 0.5 * s * s),
    });
    this.path.push({ x: frame.state.x, y: frame.state.y });
  }

  applyConfig(frame: ConfigFrame): void {
    this.config = frame.config;
  }

  reset(): void {
    this.latest = null;
    for (const buf of [this.axes.x, this.axes.y, this.axes.z]) buf.clear();
    this.force.clear();
    this.surfaces.clear();
    this.path.clear();
  }
}

export interface ShadeInterval {
  start: number;
  end: number;
}

/** Contiguous gated intervals for background shading, derived purely from
 * the per-frame gated flags. */
export function gatedIntervals(points: ForcePoint[]): ShadeInterval[] {
  const out: ShadeInterval[] = [];
  let open: ShadeInterval | null = null;
  for (const p of points) {
    if (p.gated) {
      if (!open) open = { start: p.t, end: p.t };
      else open.end = p.t;
    } else if (open) {
      out.push(open);
      open = null;
    }
  }
  if (open) out.push(open);
  return out;
}

/** A frame time is shaded iff it lies inside a gated interval. */
export function isShaded(intervals: ShadeInterval[], t: number): boolean {
  return intervals.some((iv) => t >= iv.start && t <= iv.end);
}
