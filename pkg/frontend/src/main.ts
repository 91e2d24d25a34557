// Cockpit wiring: socket -> session state -> rAF-driven canvas rendering.
// Frames are applied on arrival; painting happens once per animation frame.

import { DEFAULT_FORCE_CAP, belowGate, clampAxis, dragToForce } from "./input.js";
import { PathView, StripChart } from "./plots.js";
import { applyForceCommand, simpleCommand } from "./schema.js";
import { PilotSocket } from "./socket.js";
import { UiSessionState } from "./state.js";

const state = new UiSessionState();

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

const banner = el<HTMLDivElement>("banner");
const statusBadge = el<HTMLSpanElement>("status");
const gateBadge = el<HTMLSpanElement>("gateBadge");
const forceReadout = el<HTMLSpanElement>("forceReadout");
const pad = el<HTMLCanvasElement>("forcePad");
const zSlider = el<HTMLInputElement>("zForce");

const charts = {
  x: new StripChart(el("plotX"), "x [m] (red dashed = reference)"),
  y: new StripChart(el("plotY"), "y [m]"),
  z: new StripChart(el("plotZ"), "z [m]"),
  force: new StripChart(el("plotForce"), "|F| [N] with gate threshold"),
  S: new StripChart(el("plotS"), "sliding surfaces S"),
  V: new StripChart(el("plotV"), "Lyapunov V = S^2/2"),
};
const pathView = new PathView(el("plotPath"));

const wsUrl = new URLSearchParams(location.search).get("ws")
  ?? `ws://${location.hostname}:8700/ws`;

const socket = new PilotSocket(wsUrl, {
  onStatus(connected) {
    state.status = connected ? "connected" : "disconnected";
    statusBadge.textContent = connected ? "connected" : "disconnected";
    statusBadge.className = connected ? "badge ok" : "badge bad";
    setInputsEnabled(connected);
  },
  onMessage(msg) {
    switch (msg.kind) {
      case "frame":
        state.versionMismatch = null;
        state.applyFrame(msg.frame);
        break;
      case "config":
        state.applyConfig(msg.config);
        break;
      case "error":
        console.warn("service error:", msg.error);
        break;
      case "invalid":
        if (msg.reason.startsWith("schema version")) {
          state.versionMismatch = msg.reason;
        } else {
          console.warn("invalid message:", msg.reason);
        }
        break;
    }
  },
});

function setInputsEnabled(enabled: boolean): void {
  zSlider.disabled = !enabled;
  pad.style.opacity = enabled ? "1" : "0.4";
}

// --- force input: drag pad for x/y, slider for z --------------------------

let dragging = false;
let dragOrigin: { x: number; y: number } | null = null;
const PIXELS_PER_NEWTON = 8;

function currentForce(dx: number, dy: number): [number, number, number] {
  const [fx, fy] = dragToForce({ dx, dy }, PIXELS_PER_NEWTON, DEFAULT_FORCE_CAP);
  const fz = clampAxis(parseFloat(zSlider.value || "0"));
  return [fx, fy, fz];
}

function sendForce(force: [number, number, number]): void {
  state.commandedForce = force;
  state.forceActive = true;
  socket.send(applyForceCommand(force, socket.clientId, Date.now() / 1000));
  const below = belowGate(force, state.threshold);
  gateBadge.style.display = below ? "inline" : "none";
  forceReadout.textContent =
    `[${force.map((f) => f.toFixed(2)).join(", ")}] N`;
}

function release(): void {
  dragging = false;
  dragOrigin = null;
  state.commandedForce = [0, 0, 0];
  state.forceActive = false;
  socket.send(simpleCommand("clear_force", socket.clientId, Date.now() / 1000));
  gateBadge.style.display = "none";
  forceReadout.textContent = "released";
  drawPad(0, 0);
}

pad.addEventListener("pointerdown", (ev) => {
  if (!socket.connected) return;
  dragging = true;
  dragOrigin = { x: ev.offsetX, y: ev.offsetY };
  pad.setPointerCapture(ev.pointerId);
});
pad.addEventListener("pointermove", (ev) => {
  if (!dragging || !dragOrigin) return;
  const dx = ev.offsetX - dragOrigin.x;
  const dy = ev.offsetY - dragOrigin.y;
  sendForce(currentForce(dx, dy));
  drawPad(dx, dy);
});
pad.addEventListener("pointerup", release);
pad.addEventListener("pointercancel", release);
zSlider.addEventListener("input", () => {
  if (!socket.connected) return;
  sendForce(currentForce(0, 0));
});
zSlider.addEventListener("change", () => {
  if (parseFloat(zSlider.value) === 0 && !dragging) release();
});

function drawPad(dx: number, dy: number): void {
  const ctx = pad.getContext("2d")!;
  ctx.fillStyle = "#11151c";
  ctx.fillRect(0, 0, pad.width, pad.height);
  ctx.strokeStyle = "#2a3240";
  ctx.strokeRect(0.5, 0.5, pad.width - 1, pad.height - 1);
  const cx = pad.width / 2;
  const cy = pad.height / 2;
  ctx.strokeStyle = "#44506077";
  ctx.beginPath();
  ctx.arc(cx, cy, state.threshold * PIXELS_PER_NEWTON, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.fillStyle = "#8899aa";
  ctx.font = "11px sans-serif";
  ctx.fillText("drag to push (x right, y up)", 6, 13);
  ctx.strokeStyle = "#ff4d4d";
  ctx.beginPath();
  ctx.moveTo(cx, cy);
  ctx.lineTo(cx + dx, cy + dy);
  ctx.stroke();
}

// --- render loop -----------------------------------------------------------

function render(): void {
  if (state.versionMismatch) {
    banner.textContent = `incompatible telemetry: ${state.versionMismatch}`;
    banner.style.display = "block";
  } else {
    banner.style.display = "none";
  }
  charts.x.drawRefActual(state.axes.x, state.force, "#e4572e");
  charts.y.drawRefActual(state.axes.y, state.force, "#17bebb");
  charts.z.drawRefActual(state.axes.z, state.force, "#ffc914");
  charts.force.drawForce(state.force, state.threshold);
  charts.S.drawSurfaces(state.surfaces, "S");
  charts.V.drawSurfaces(state.surfaces, "V");
  pathView.draw(state.path, state.commandedForce);
  requestAnimationFrame(render);
}

drawPad(0, 0);
setInputsEnabled(false);
socket.connect();
requestAnimationFrame(render);

el<HTMLButtonElement>("pauseBtn").onclick = () =>
  socket.send(simpleCommand("pause", socket.clientId, Date.now() / 1000));
el<HTMLButtonElement>("resumeBtn").onclick = () =>
  socket.send(simpleCommand("resume", socket.clientId, Date.now() / 1000));
el<HTMLButtonElement>("resetBtn").onclick = () => {
  socket.send(simpleCommand("reset", socket.clientId, Date.now() / 1000));
  state.reset();
};
