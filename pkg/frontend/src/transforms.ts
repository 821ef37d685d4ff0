/** Pure view transforms between data coordinates (codomain or domain) and
 * canvas pixels. Screen y grows downward; data y grows upward. The only
 * math the client owns, so it is fully unit-tested. */

import type { Box } from "./api.js";

export interface Viewport {
  scale: number; // pixels per data unit
  ox: number; // screen x of data x = 0
  oy: number; // distance from screen bottom of data y = 0, in pixels
  height: number; // canvas height in pixels
}

export function dataToScreen(vp: Viewport, x: number, y: number): [number, number] {
  return [x * vp.scale + vp.ox, vp.height - (y * vp.scale + vp.oy)];
}

export function screenToData(vp: Viewport, sx: number, sy: number): [number, number] {
  return [(sx - vp.ox) / vp.scale, (vp.height - sy - vp.oy) / vp.scale];
}

/** Viewport that fits a data box into a width x height canvas with a margin,
 * preserving aspect ratio and centering. Degenerate boxes get a unit span. */
export function fitBox(
  box: Box,
  width: number,
  height: number,
  margin = 16,
): Viewport {
  const spanX = Math.max(box.max[0] - box.min[0], 1e-12);
  const spanY = Math.max(box.max[1] - box.min[1], 1e-12);
  const scale = Math.min(
    (width - 2 * margin) / spanX,
    (height - 2 * margin) / spanY,
  );
  const cx = 0.5 * (box.min[0] + box.max[0]);
  const cy = 0.5 * (box.min[1] + box.max[1]);
  return {
    scale,
    ox: width / 2 - cx * scale,
    oy: height / 2 - cy * scale,
    height,
  };
}

/** Pan by a screen-space delta (positive dy moves the view content down). */
export function pan(vp: Viewport, dxScreen: number, dyScreen: number): Viewport {
  return { ...vp, ox: vp.ox + dxScreen, oy: vp.oy - dyScreen };
}

/** Zoom by a factor keeping the data point under (sx, sy) fixed on screen. */
export function zoomAt(
  vp: Viewport,
  sx: number,
  sy: number,
  factor: number,
): Viewport {
  const [px, py] = screenToData(vp, sx, sy);
  const scale = vp.scale * factor;
  return {
    scale,
    ox: sx - px * scale,
    oy: vp.height - sy - py * scale,
    height: vp.height,
  };
}

/** Squared screen-space distance from a point to a segment (hit testing). */
export function screenSegmentDist2(
  px: number,
  py: number,
  ax: number,
  ay: number,
  bx: number,
  by: number,
): number {
  const dx = bx - ax;
  const dy = by - ay;
  const len2 = dx * dx + dy * dy;
  let t = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0;
  t = Math.max(0, Math.min(1, t));
  const qx = ax + t * dx - px;
  const qy = ay + t * dy - py;
  return qx * qx + qy * qy;
}
