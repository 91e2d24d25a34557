import { describe, expect, it } from "vitest";
import session from "./fixtures/session.json";
import { TelemetryFrame, parseServerMessage } from "./schema.js";
import { UiSessionState, gatedIntervals, isShaded } from "./state.js";

function sessionFrames(): TelemetryFrame[] {
  return session.frames.map((f) => {
    const msg = parseServerMessage(JSON.stringify(f));
    if (msg.kind !== "frame") throw new Error("fixture frame invalid");
    return msg.frame;
  });
}

describe("UiSessionState", () => {
  it("derives plot series from frames only", () => {
    const state = new UiSessionState(1000);
    const frames = sessionFrames();
    frames.forEach((f) => state.applyFrame(f));
    expect(state.latest?.t).toBe(frames[frames.length - 1].t);
    expect(state.axes.x.size).toBe(frames.length);
    const first = state.axes.x.get(0)!;
    expect(first.actual).toBe(frames[0].state.x);
    expect(first.ref).toBe(frames[0].ref.xd);
    const surf = state.surfaces.get(0)!;
    // Lyapunov trace is derived as S^2/2 from the served surface values
    expect(surf.V[0]).toBeCloseTo(0.5 * frames[0].S[0] ** 2, 12);
  });

  it("ring buffers never exceed capacity under a long stream", () => {
    const state = new UiSessionState(50);
    const frames = sessionFrames();
    frames.forEach((f) => state.applyFrame(f));
    expect(state.axes.x.size).toBeLessThanOrEqual(50);
    expect(state.force.size).toBeLessThanOrEqual(50);
    expect(state.surfaces.size).toBeLessThanOrEqual(50);
    // retained tail matches the newest frames
    const kept = state.axes.x.toArray();
    expect(kept[kept.length - 1].t).toBe(frames[frames.length - 1].t);
  });

  it("stores the config threshold", () => {
    const state = new UiSessionState();
    const msg = parseServerMessage(JSON.stringify(session.config));
    if (msg.kind === "config") state.applyConfig(msg.config);
    expect(state.threshold).toBe(0.5);
  });

  it("replaying the same frames reproduces identical chart data", () => {
    const a = new UiSessionState(1000);
    const b = new UiSessionState(1000);
    const frames = sessionFrames();
    frames.forEach((f) => a.applyFrame(f));
    frames.forEach((f) => b.applyFrame(f));
    expect(a.axes.z.toArray()).toEqual(b.axes.z.toArray());
    expect(a.surfaces.toArray()).toEqual(b.surfaces.toArray());
    expect(a.force.toArray()).toEqual(b.force.toArray());
  });
});

describe("hover stream", () => {
  it("produces flat traces pinned at the reference", () => {
    const state = new UiSessionState(100);
    const base = sessionFrames()[0]; // t = 0 hover frame before any pulse
    for (let i = 0; i < 40; i++) {
      state.applyFrame({ ...base, t: i * 0.02 });
    }
    const zs = state.axes.z.toArray();
    expect(new Set(zs.map((p) => p.actual)).size).toBe(1);
    expect(zs.every((p) => p.actual === zs[0].actual && p.ref === zs[0].ref)).toBe(true);
    expect(zs[0].actual).toBeCloseTo(zs[0].ref, 6);
  });
});

describe("gating shading", () => {
  it("matches the gated flag on 100% of recorded frames", () => {
    const state = new UiSessionState(1000);
    const frames = sessionFrames();
    frames.forEach((f) => state.applyFrame(f));
    const intervals = gatedIntervals(state.force.toArray());
    expect(intervals.length).toBeGreaterThan(0);
    for (const f of frames) {
      expect(isShaded(intervals, f.t)).toBe(f.gated);
    }
  });

  it("builds contiguous intervals", () => {
    const pts = [
      { t: 0, magnitude: 0, gated: false },
      { t: 1, magnitude: 2, gated: true },
      { t: 2, magnitude: 2, gated: true },
      { t: 3, magnitude: 0, gated: false },
      { t: 4, magnitude: 2, gated: true },
    ];
    expect(gatedIntervals(pts)).toEqual([
      { start: 1, end: 2 },
      { start: 4, end: 4 },
    ]);
  });
});
