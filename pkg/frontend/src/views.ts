/** Canvas execution of draw lists and pointer wiring. All geometry decisions
 * live in draw.ts/state.ts; this file only paints and routes events. */

import type { DensityRaster } from "./api.js";
import type { DrawOp } from "./draw.js";
import type { EditorStore } from "./state.js";
import {
  screenSegmentDist2,
  screenToData,
  type Viewport,
  pan,
  zoomAt,
} from "./transforms.js";

const HANDLE_GRAB_PX = 8;
const EDGE_GRAB_PX = 6;

export function renderOps(
  ctx: CanvasRenderingContext2D,
  ops: DrawOp[],
  rasterCache: Map<string, HTMLCanvasElement>,
): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  for (const op of ops) {
    if (op.kind === "raster") {
      const img = rasterToCanvas(op.raster, rasterCache);
      ctx.imageSmoothingEnabled = false;
      ctx.drawImage(img, op.screen.x, op.screen.y, op.screen.w, op.screen.h);
    } else if (op.kind === "segments") {
      ctx.strokeStyle = op.color;
      ctx.lineWidth = op.lineWidth;
      ctx.beginPath();
      for (const [ax, ay, bx, by] of op.points) {
        ctx.moveTo(ax, ay);
        ctx.lineTo(bx, by);
      }
      ctx.stroke();
    } else if (op.kind === "polyline") {
      ctx.strokeStyle = op.color;
      ctx.lineWidth = op.lineWidth;
      ctx.beginPath();
      op.points.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
      if (op.closed) ctx.closePath();
      ctx.stroke();
    } else if (op.kind === "handles") {
      ctx.fillStyle = op.color;
      for (const [x, y] of op.points) {
        ctx.fillRect(x - op.size / 2, y - op.size / 2, op.size, op.size);
      }
    } else {
      ctx.fillStyle = "#868e96";
      ctx.font = "13px sans-serif";
      ctx.fillText(op.text, 12, 20);
    }
  }
}

function rasterToCanvas(
  raster: DensityRaster,
  cache: Map<string, HTMLCanvasElement>,
): HTMLCanvasElement {
  const key = raster.pixels.slice(0, 64) + raster.width;
  const hit = cache.get(key);
  if (hit) return hit;
  const bytes = Uint8Array.from(atob(raster.pixels), (c) => c.charCodeAt(0));
  const canvas = document.createElement("canvas");
  canvas.width = raster.width;
  canvas.height = raster.height;
  const ctx = canvas.getContext("2d")!;
  const img = ctx.createImageData(raster.width, raster.height);
  for (let row = 0; row < raster.height; row++) {
    // raster row 0 is at min y; canvas row 0 is at the top
    const src = (raster.height - 1 - row) * raster.width;
    for (let col = 0; col < raster.width; col++) {
      const v = bytes[src + col];
      const o = 4 * (row * raster.width + col);
      img.data[o] = 255 - v;
      img.data[o + 1] = 255 - Math.floor(v * 0.85);
      img.data[o + 2] = 255 - Math.floor(v * 0.6);
      img.data[o + 3] = 255;
    }
  }
  ctx.putImageData(img, 0, 0);
  cache.set(key, canvas);
  return canvas;
}

/** Vertex/edge hit tests against the polygon currently being edited. */
export function hitVertex(
  vp: Viewport,
  polygon: [number, number][],
  sx: number,
  sy: number,
): number | null {
  for (let i = 0; i < polygon.length; i++) {
    const [px, py] = polygon[i];
    const x = px * vp.scale + vp.ox;
    const y = vp.height - (py * vp.scale + vp.oy);
    if (Math.hypot(x - sx, y - sy) <= HANDLE_GRAB_PX) return i;
  }
  return null;
}

export function hitEdge(
  vp: Viewport,
  polygon: [number, number][],
  closed: boolean,
  sx: number,
  sy: number,
): number | null {
  const n = polygon.length;
  const last = closed ? n : n - 1;
  for (let i = 0; i < last; i++) {
    const [ax, ay] = polygon[i];
    const [bx, by] = polygon[(i + 1) % n];
    const d2 = screenSegmentDist2(
      sx,
      sy,
      ax * vp.scale + vp.ox,
      vp.height - (ay * vp.scale + vp.oy),
      bx * vp.scale + vp.ox,
      vp.height - (by * vp.scale + vp.oy),
    );
    if (d2 <= EDGE_GRAB_PX * EDGE_GRAB_PX) return i;
  }
  return null;
}

/** Codomain canvas: drag vertices, drag the whole polygon, double-click an
 * edge to insert a vertex, alt-click a vertex to delete it. */
export function wirePolygonEditor(
  canvas: HTMLCanvasElement,
  store: EditorStore,
  getViewport: () => Viewport,
): void {
  let lastPos: [number, number] | null = null;

  canvas.addEventListener("mousedown", (ev) => {
    const vp = getViewport();
    const poly = store.state.equivalence
      ? store.state.domainPolygon
      : store.state.polygon;
    const v = hitVertex(vp, poly, ev.offsetX, ev.offsetY);
    if (v !== null && ev.altKey) {
      store.deleteVertex(v);
      return;
    }
    if (v !== null) {
      store.startDrag({ kind: "vertex", index: v });
    } else if (hitEdge(vp, poly, true, ev.offsetX, ev.offsetY) !== null) {
      store.startDrag({ kind: "translate" });
    }
    lastPos = [ev.offsetX, ev.offsetY];
  });

  canvas.addEventListener("mousemove", (ev) => {
    const drag = store.state.drag;
    if (!drag || !lastPos) return;
    const vp = getViewport();
    const [x, y] = screenToData(vp, ev.offsetX, ev.offsetY);
    if (drag.kind === "vertex") {
      store.moveVertex(drag.index, x, y);
    } else {
      const [px, py] = screenToData(vp, lastPos[0], lastPos[1]);
      store.translatePolygon(x - px, y - py);
    }
    lastPos = [ev.offsetX, ev.offsetY];
  });

  const stop = () => {
    if (store.state.drag) store.endDrag();
    lastPos = null;
  };
  canvas.addEventListener("mouseup", stop);
  canvas.addEventListener("mouseleave", stop);

  canvas.addEventListener("dblclick", (ev) => {
    const vp = getViewport();
    const poly = store.state.equivalence
      ? store.state.domainPolygon
      : store.state.polygon;
    const e = hitEdge(vp, poly, true, ev.offsetX, ev.offsetY);
    if (e !== null) store.insertVertexOnEdge(e);
  });
}

/** Domain canvas: wheel zoom around the cursor plus drag panning. */
export function wirePanZoom(
  canvas: HTMLCanvasElement,
  getViewport: () => Viewport,
  setViewport: (vp: Viewport) => void,
): void {
  let panning = false;
  let last: [number, number] = [0, 0];
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const factor = ev.deltaY < 0 ? 1.15 : 1 / 1.15;
    setViewport(zoomAt(getViewport(), ev.offsetX, ev.offsetY, factor));
  });
  canvas.addEventListener("mousedown", (ev) => {
    panning = true;
    last = [ev.offsetX, ev.offsetY];
  });
  canvas.addEventListener("mousemove", (ev) => {
    if (!panning) return;
    setViewport(pan(getViewport(), ev.offsetX - last[0], ev.offsetY - last[1]));
    last = [ev.offsetX, ev.offsetY];
  });
  const stop = () => {
    panning = false;
  };
  canvas.addEventListener("mouseup", stop);
  canvas.addEventListener("mouseleave", stop);
}
