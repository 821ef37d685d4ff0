import { afterEach, beforeEach, describe, expect, test, vi } from "vitest";

import type { DatasetSummary, ExtractRequest, ExtractResponse } from "../src/api.js";
import { EditorStore } from "../src/state.js";

const DATASET: DatasetSummary = {
  id: "demo",
  cells: 8,
  vertices: 9,
  domain_box: { min: [0, 0], max: [1, 1] },
  codomain_box: { min: [0, 0], max: [1, 1] },
};

function fakeResponse(tag: number): ExtractResponse {
  return {
    segments: [{ cell_id: tag, edge_id: 0, p: [0, 0], q: [1, 1] }],
    image_polyline: null,
    polygon_edges: 4,
    stats: {
      nit_box_box: tag,
      nit_seg_box: 0,
      nit_total: tag,
      candidates: 1,
      true_positives: 1,
      tpap: 1,
      degenerate_cells: 0,
      build_cells_ms: 0,
      build_edges_ms: 0,
      search_ms: 0,
      extract_ms: 0,
      total_ms: 0,
    },
  };
}

const SQUARE: [number, number][] = [
  [0.2, 0.2],
  [0.8, 0.2],
  [0.8, 0.8],
  [0.2, 0.8],
];

describe("request scheduling", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  test("edits within the debounce window collapse into one request", async () => {
    const calls: ExtractRequest[] = [];
    const store = new EditorStore(async (_ds, req) => {
      calls.push(req);
      const body = fakeResponse(calls.length);
      return { body, raw: JSON.stringify(body) };
    });
    store.state.dataset = DATASET;
    store.setPolygon(SQUARE);
    store.moveVertex(0, 0.1, 0.1);
    store.moveVertex(0, 0.15, 0.12);
    await vi.advanceTimersByTimeAsync(49);
    expect(calls.length).toBe(0);
    await vi.advanceTimersByTimeAsync(2);
    expect(calls.length).toBe(1);
    // the final geometry is what got sent
    expect(calls[0].polygon!.vertices[0]).toEqual([0.15, 0.12]);
    expect(store.state.lastResponse).not.toBeNull();
  });

  test("at most one request in flight; edits during flight queue one follow-up", async () => {
    const resolvers: ((r: { body: ExtractResponse; raw: string }) => void)[] = [];
    const store = new EditorStore(
      (_ds, _req) =>
        new Promise((resolve) => {
          resolvers.push(resolve);
        }),
    );
    store.state.dataset = DATASET;
    store.setPolygon(SQUARE);
    await vi.advanceTimersByTimeAsync(51);
    expect(resolvers.length).toBe(1);
    // three edits while the first request is pending
    store.moveVertex(0, 0.3, 0.3);
    await vi.advanceTimersByTimeAsync(51);
    store.moveVertex(0, 0.4, 0.4);
    await vi.advanceTimersByTimeAsync(51);
    expect(resolvers.length).toBe(1); // still only one in flight
    const body = fakeResponse(1);
    resolvers[0]({ body, raw: JSON.stringify(body) });
    await vi.advanceTimersByTimeAsync(1);
    expect(resolvers.length).toBe(2); // queued follow-up fired once
  });

  test("stale responses are discarded (last writer wins)", async () => {
    const pending: {
      req: ExtractRequest;
      resolve: (r: { body: ExtractResponse; raw: string }) => void;
    }[] = [];
    const store = new EditorStore(
      (_ds, req) =>
        new Promise((resolve) => {
          pending.push({ req, resolve });
        }),
    );
    store.state.dataset = DATASET;
    store.setPolygon(SQUARE);
    await vi.advanceTimersByTimeAsync(51);
    store.moveVertex(0, 0.5, 0.5);
    await vi.advanceTimersByTimeAsync(51);
    const first = fakeResponse(111);
    pending[0].resolve({ body: first, raw: "first" });
    await vi.advanceTimersByTimeAsync(1);
    expect(pending.length).toBe(2);
    const second = fakeResponse(222);
    pending[1].resolve({ body: second, raw: "second" });
    await vi.advanceTimersByTimeAsync(1);
    // the follow-up (matching the newest edit) is what sticks
    expect(store.state.lastRaw).toBe("second");
    expect(store.state.lastResponse!.stats.nit_box_box).toBe(222);
  });

  test("fetch failure surfaces as a banner and the store stays usable", async () => {
    let fail = true;
    const store = new EditorStore(async () => {
      if (fail) throw new Error("boom");
      const body = fakeResponse(7);
      return { body, raw: JSON.stringify(body) };
    });
    store.state.dataset = DATASET;
    store.setPolygon(SQUARE);
    await vi.advanceTimersByTimeAsync(51);
    expect(store.state.error).toContain("boom");
    fail = false;
    store.moveVertex(0, 0.25, 0.25);
    await vi.advanceTimersByTimeAsync(51);
    expect(store.state.error).toBeNull();
    expect(store.state.lastResponse).not.toBeNull();
  });

  test("method switch requests immediately (no debounce)", async () => {
    const calls: ExtractRequest[] = [];
    const store = new EditorStore(async (_ds, req) => {
      calls.push(req);
      const body = fakeResponse(calls.length);
      return { body, raw: "" };
    });
    store.state.dataset = DATASET;
    store.state.polygon = SQUARE.map((v) => [...v] as [number, number]);
    store.setMethod("naive");
    await vi.advanceTimersByTimeAsync(1);
    expect(calls.length).toBe(1);
    expect(calls[0].method).toBe("naive");
  });
});

describe("polygon editing", () => {
  test("insertVertexOnEdge adds exactly one edge", () => {
    const store = new EditorStore(async () => {
      throw new Error("unused");
    });
    store.state.dataset = DATASET;
    store.state.polygon = SQUARE.map((v) => [...v] as [number, number]);
    store.insertVertexOnEdge(1);
    expect(store.state.polygon.length).toBe(5);
    expect(store.state.polygon[2]).toEqual([0.8, 0.5]); // midpoint of edge 1
  });

  test("deleteVertex refuses to drop below a triangle", () => {
    const store = new EditorStore(async () => {
      throw new Error("unused");
    });
    store.state.polygon = SQUARE.map((v) => [...v] as [number, number]);
    store.deleteVertex(0);
    expect(store.state.polygon.length).toBe(3);
    store.deleteVertex(0);
    expect(store.state.polygon.length).toBe(3);
  });

  test("edits apply to the domain polygon in equivalence mode", () => {
    const store = new EditorStore(async () => {
      throw new Error("unused");
    });
    store.state.equivalence = true;
    store.state.domainPolygon = SQUARE.map((v) => [...v] as [number, number]);
    store.moveVertex(2, 0.9, 0.9);
    expect(store.state.domainPolygon[2]).toEqual([0.9, 0.9]);
    store.translatePolygon(0.01, -0.01);
    expect(store.state.domainPolygon[2][0]).toBeCloseTo(0.91, 12);
  });
});
