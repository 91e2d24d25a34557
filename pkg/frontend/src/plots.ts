// Hand-rolled canvas strip charts: reference vs actual traces with gating
// shading, the force magnitude against the threshold band, per-axis sliding
// surface and Lyapunov traces, and a top-down path view.

import { RingBuffer } from "./ring.js";
import {
  ForcePoint, PathPoint, PlotPoint, ShadeInterval, SurfacePoint, gatedIntervals,
} from "./state.js";

const AXIS_COLORS = ["#e4572e", "#17bebb", "#ffc914", "#76b041", "#9b5de5", "#f15bb5"];
const BG = "#11151c";
const GRID = "#2a3240";
const SHADE = "rgba(150, 150, 150, 0.25)";

interface Range { lo: number; hi: number; }

function niceRange(values: number[], pad = 0.1): Range {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) return { lo: -1, hi: 1 };
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  const span = hi - lo;
  return { lo: lo - pad * span, hi: hi + pad * span };
}

export class StripChart {
  private ctx: CanvasRenderingContext2D;

  constructor(private canvas: HTMLCanvasElement, private title: string) {
    this.ctx = canvas.getContext("2d")!;
  }

  private frame(tRange: Range, yRange: Range) {
    const { ctx, canvas } = this;
    ctx.fillStyle = BG;
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    ctx.strokeStyle = GRID;
    ctx.strokeRect(0.5, 0.5, canvas.width - 1, canvas.height - 1);
    ctx.fillStyle = "#8899aa";
    ctx.font = "11px sans-serif";
    ctx.fillText(this.title, 6, 13);
    return {
      tx: (t: number) =>
        ((t - tRange.lo) / (tRange.hi - tRange.lo || 1)) * (canvas.width - 8) + 4,
      ty: (y: number) =>
        canvas.height - 4 - ((y - yRange.lo) / (yRange.hi - yRange.lo || 1)) * (canvas.height - 22),
    };
  }

  private polyline(ts: number[], ys: number[], color: string,
                   tx: (t: number) => number, ty: (y: number) => number,
                   dashed = false) {
    const { ctx } = this;
    ctx.strokeStyle = color;
    ctx.setLineDash(dashed ? [4, 3] : []);
    ctx.beginPath();
    ys.forEach((y, i) => {
      const px = tx(ts[i]);
      const py = ty(y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
    ctx.setLineDash([]);
  }

  private shade(intervals: ShadeInterval[], tx: (t: number) => number) {
    const { ctx, canvas } = this;
    ctx.fillStyle = SHADE;
    for (const iv of intervals) {
      const a = tx(iv.start);
      const b = Math.max(tx(iv.end), a + 1);
      ctx.fillRect(a, 14, b - a, canvas.height - 18);
    }
  }

  drawRefActual(buf: RingBuffer<PlotPoint>, gate: RingBuffer<ForcePoint>, color: string) {
    const pts = buf.toArray();
    if (!pts.length) return;
    const ts = pts.map((p) => p.t);
    const tRange = { lo: ts[0], hi: ts[ts.length - 1] };
    const yRange = niceRange(pts.flatMap((p) => [p.actual, p.ref]));
    const { tx, ty } = this.frame(tRange, yRange);
    this.shade(gatedIntervals(gate.toArray()), tx);
    this.polyline(ts, pts.map((p) => p.ref), "#ff4d4d", tx, ty, true);
    this.polyline(ts, pts.map((p) => p.actual), color, tx, ty);
  }

  drawForce(buf: RingBuffer<ForcePoint>, threshold: number) {
    const pts = buf.toArray();
    if (!pts.length) return;
    const ts = pts.map((p) => p.t);
    const tRange = { lo: ts[0], hi: ts[ts.length - 1] };
    const yRange = niceRange([0, threshold, ...pts.map((p) => p.magnitude)]);
    const { tx, ty } = this.frame(tRange, yRange);
    this.shade(gatedIntervals(pts), tx);
    // threshold band
    this.ctx.strokeStyle = "#888";
    this.ctx.setLineDash([2, 4]);
    this.ctx.beginPath();
    this.ctx.moveTo(4, ty(threshold));
    this.ctx.lineTo(this.canvas.width - 4, ty(threshold));
    this.ctx.stroke();
    this.ctx.setLineDash([]);
    this.polyline(ts, pts.map((p) => p.magnitude), "#4d9fff", tx, ty);
  }

  drawSurfaces(buf: RingBuffer<SurfacePoint>, field: "S" | "V") {
    const pts = buf.toArray();
    if (!pts.length) return;
    const ts = pts.map((p) => p.t);
    const tRange = { lo: ts[0], hi: ts[ts.length - 1] };
    const all = pts.flatMap((p) => p[field]);
    const yRange = niceRange(field === "V" ? [0, ...all] : all);
    const { tx, ty } = this.frame(tRange, yRange);
    for (let k = 0; k < 6; k++) {
      this.polyline(ts, pts.map((p) => p[field][k]), AXIS_COLORS[k], tx, ty);
    }
  }
}

export class PathView {
  private ctx: CanvasRenderingContext2D;

  constructor(private canvas: HTMLCanvasElement) {
    this.ctx = canvas.getContext("2d")!;
  }

  draw(buf: RingBuffer<PathPoint>, force: [number, number, number]) {
    const pts = buf.toArray();
    const { ctx, canvas } = this;
    ctx.fillStyle = BG;
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    ctx.strokeStyle = GRID;
    ctx.strokeRect(0.5, 0.5, canvas.width - 1, canvas.height - 1);
    ctx.fillStyle = "#8899aa";
    ctx.font = "11px sans-serif";
    ctx.fillText("top-down path (x right, y up)", 6, 13);
    if (!pts.length) return;
    const xr = niceRange(pts.map((p) => p.x), 0.2);
    const yr = niceRange(pts.map((p) => p.y), 0.2);
    const span = Math.max(xr.hi - xr.lo, yr.hi - yr.lo);
    const cx = (xr.lo + xr.hi) / 2;
    const cy = (yr.lo + yr.hi) / 2;
    const px = (x: number) => ((x - cx) / span + 0.5) * (canvas.width - 10) + 5;
    const py = (y: number) => (0.5 - (y - cy) / span) * (canvas.height - 10) + 5;
    ctx.strokeStyle = "#17bebb";
    ctx.beginPath();
    pts.forEach((p, i) => (i ? ctx.lineTo(px(p.x), py(p.y)) : ctx.moveTo(px(p.x), py(p.y))));
    ctx.stroke();
    const last = pts[pts.length - 1];
    ctx.fillStyle = "#ffc914";
    ctx.beginPath();
    ctx.arc(px(last.x), py(last.y), 4, 0, 2 * Math.PI);
    ctx.fill();
    // commanded force arrow from the vehicle marker
    if (Math.hypot(force[0], force[1]) > 1e-6) {
      const scale = (canvas.width / 4) / 10;
      ctx.strokeStyle = "#ff4d4d";
      ctx.beginPath();
      ctx.moveTo(px(last.x), py(last.y));
      ctx.lineTo(px(last.x) + force[0] * scale, py(last.y) - force[1] * scale);
      ctx.stroke();
    }
  }
}
