// Force input: drag on the pad sets the horizontal force, the slider sets
// the vertical component.  Pure mapping functions here; DOM wiring in main.

export const DEFAULT_FORCE_CAP = 10; // newtons, configurable

export interface DragState {
  dx: number; // pixels right from the pad center
  dy: number; // pixels down from the pad center
}

/** Pixel drag to force vector: right = +x, up = +y, capped in magnitude. */
export function dragToForce(
  drag: DragState, pixelsPerNewton: number, cap: number = DEFAULT_FORCE_CAP,
): [number, number] {
  let fx = drag.dx / pixelsPerNewton;
  let fy = -drag.dy / pixelsPerNewton;
  const mag = Math.hypot(fx, fy);
  if (mag > cap) {
    fx *= cap / mag;
    fy *= cap / mag;
  }
  // avoid negative zero leaking into readouts and wire messages
  return [fx + 0, fy + 0];
}

export function clampAxis(value: number, cap: number = DEFAULT_FORCE_CAP): number {
  return Math.max(-cap, Math.min(cap, value));
}

/** True when the commanded force would be suppressed by the gate. */
export function belowGate(force: [number, number, number], threshold: number): boolean {
  return Math.hypot(force[0], force[1], force[2]) <= threshold;
}
