/** Pure draw-list builders. Views execute these ops on a canvas; tests (and
 * the scripted smoke check) compare them directly, so "rendered geometry" is
 * a value, not pixels. */

import type { DensityRaster } from "./api.js";
import type { EditorState } from "./state.js";
import { dataToScreen, type Viewport } from "./transforms.js";

export type DrawOp =
  | {
      kind: "raster";
      raster: DensityRaster;
      screen: { x: number; y: number; w: number; h: number };
    }
  | { kind: "segments"; points: number[][]; color: string; lineWidth: number }
  | {
      kind: "polyline";
      points: number[][];
      closed: boolean;
      color: string;
      lineWidth: number;
    }
  | { kind: "handles"; points: number[][]; color: string; size: number }
  | { kind: "note"; text: string };

const FIBER_COLOR = "#0b7285";
const POLYGON_COLOR = "#e8590c";
const DOMAIN_POLY_COLOR = "#5f3dc4";
const IMAGE_POLY_COLOR = "#2b8a3e";

function polygonScreenPoints(
  vp: Viewport,
  vertices: [number, number][],
): number[][] {
  return vertices.map(([x, y]) => {
    const [sx, sy] = dataToScreen(vp, x, y);
    return [sx, sy];
  });
}

/** Codomain view: density underlay, the editable control polygon (or, in
 * equivalence mode, the image polyline received from the service). */
export function codomainDrawList(
  state: EditorState,
  vp: Viewport,
  raster: DensityRaster | null,
): DrawOp[] {
  const ops: DrawOp[] = [];
  const ds = state.dataset;
  if (!ds) return [{ kind: "note", text: "no dataset" }];
  if (raster) {
    const [x0, y1] = dataToScreen(vp, ds.codomain_box.min[0], ds.codomain_box.min[1]);
    const [x1, y0] = dataToScreen(vp, ds.codomain_box.max[0], ds.codomain_box.max[1]);
    ops.push({
      kind: "raster",
      raster,
      screen: { x: x0, y: y0, w: x1 - x0, h: y1 - y0 },
    });
  }
  if (!state.equivalence && state.polygon.length) {
    const pts = polygonScreenPoints(vp, state.polygon);
    ops.push({
      kind: "polyline",
      points: pts,
      closed: state.closed,
      color: POLYGON_COLOR,
      lineWidth: 1.5,
    });
    ops.push({ kind: "handles", points: pts, color: POLYGON_COLOR, size: 4 });
  }
  if (
    state.equivalence &&
    state.showImagePolyline &&
    state.lastResponse?.image_polyline
  ) {
    const points = state.lastResponse.image_polyline.map((s) => {
      const [ax, ay] = dataToScreen(vp, s.a[0], s.a[1]);
      const [bx, by] = dataToScreen(vp, s.b[0], s.b[1]);
      return [ax, ay, bx, by];
    });
    ops.push({ kind: "segments", points, color: IMAGE_POLY_COLOR, lineWidth: 1.5 });
  }
  return ops;
}

/** Domain view: fiber segments; equivalence mode also shows the editable
 * domain polygon. */
export function domainDrawList(state: EditorState, vp: Viewport): DrawOp[] {
  const ops: DrawOp[] = [];
  const res = state.lastResponse;
  if (state.equivalence && state.domainPolygon.length) {
    const pts = polygonScreenPoints(vp, state.domainPolygon);
    ops.push({
      kind: "polyline",
      points: pts,
      closed: true,
      color: DOMAIN_POLY_COLOR,
      lineWidth: 1.5,
    });
    ops.push({ kind: "handles", points: pts, color: DOMAIN_POLY_COLOR, size: 4 });
  }
  if (!res) {
    ops.push({ kind: "note", text: "no extraction yet" });
    return ops;
  }
  if (res.segments.length === 0) {
    ops.push({ kind: "note", text: "no fibers" });
    return ops;
  }
  const points = res.segments.map((s) => {
    const [px, py] = dataToScreen(vp, s.p[0], s.p[1]);
    const [qx, qy] = dataToScreen(vp, s.q[0], s.q[1]);
    return [px, py, qx, qy];
  });
  ops.push({ kind: "segments", points, color: FIBER_COLOR, lineWidth: 1.2 });
  return ops;
}

/** Stats table rows: raw values straight from the response (no rounding), so
 * what the panel holds is exactly what the service sent. */
export function statsRows(state: EditorState): [string, string | number][] {
  const res = state.lastResponse;
  if (!res) return [["status", "waiting for extraction"]];
  const s = res.stats;
  return [
    ["method", state.method],
    ["recursion", state.recursion],
    ["segments", res.segments.length],
    ["polygon edges", res.polygon_edges],
    ["nit_box_box", s.nit_box_box],
    ["nit_seg_box", s.nit_seg_box],
    ["nit_total", s.nit_total],
    ["candidates", s.candidates],
    ["true_positives", s.true_positives],
    ["tpap", s.tpap],
    ["degenerate_cells", s.degenerate_cells],
    ["build_cells_ms", s.build_cells_ms],
    ["build_edges_ms", s.build_edges_ms],
    ["search_ms", s.search_ms],
    ["extract_ms", s.extract_ms],
    ["total_ms", s.total_ms],
  ];
}
