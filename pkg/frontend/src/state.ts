/** Editor state machine: polygon edits, request scheduling, and response
 * bookkeeping. Network access is injected so tests can fake it.
 *
 * Invariants kept here:
 *  - the polygon in state is always the one being edited (edits apply
 *    synchronously, requests follow);
 *  - at most one extraction is in flight; edits during flight queue exactly
 *    one follow-up;
 *  - a response is applied only if its request id is still the newest.
 */

import type {
  DatasetSummary,
  ExtractRequest,
  ExtractResponse,
} from "./api.js";

export type ExtractFn = (
  datasetId: string,
  req: ExtractRequest,
) => Promise<{ body: ExtractResponse; raw: string }>;

export interface EditorState {
  dataset: DatasetSummary | null;
  polygon: [number, number][];
  closed: boolean;
  method: string;
  recursion: string;
  leafCells: number | null;
  leafEdges: number | null;
  equivalence: boolean;
  domainPolygon: [number, number][];
  showImagePolyline: boolean;
  drag: { kind: "vertex"; index: number } | { kind: "translate" } | null;
  lastResponse: ExtractResponse | null;
  lastRaw: string | null;
  error: string | null;
}

export const DEBOUNCE_MS = 50;

export class EditorStore {
  state: EditorState = {
    dataset: null,
    polygon: [],
    closed: true,
    method: "hybrid",
    recursion: "area",
    leafCells: null,
    leafEdges: null,
    equivalence: false,
    domainPolygon: [],
    showImagePolyline: true,
    drag: null,
    lastResponse: null,
    lastRaw: null,
    error: null,
  };

  private listeners: (() => void)[] = [];
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inflight = false;
  private queued = false;
  private seq = 0;
  private applied = 0;

  constructor(
    private extractFn: ExtractFn,
    private debounceMs: number = DEBOUNCE_MS,
  ) {}

  subscribe(fn: () => void): void {
    this.listeners.push(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  // --- dataset & configuration -------------------------------------------

  setDataset(ds: DatasetSummary): void {
    this.state.dataset = ds;
    this.state.lastResponse = null;
    this.state.lastRaw = null;
    this.notify();
    this.requestExtract();
  }

  setMethod(method: string): void {
    this.state.method = method;
    this.requestExtract(true);
  }

  setRecursion(recursion: string): void {
    this.state.recursion = recursion;
    this.requestExtract(true);
  }

  setEquivalence(on: boolean): void {
    this.state.equivalence = on;
    this.requestExtract(true);
  }

  setShowImagePolyline(on: boolean): void {
    this.state.showImagePolyline = on;
    this.notify();
  }

  // --- polygon editing -----------------------------------------------------

  private get activePolygon(): [number, number][] {
    return this.state.equivalence ? this.state.domainPolygon : this.state.polygon;
  }

  setPolygon(vertices: [number, number][], closed = true): void {
    this.state.polygon = vertices.map((v) => [v[0], v[1]]);
    this.state.closed = closed;
    this.notify();
    this.requestExtract();
  }

  setDomainPolygon(vertices: [number, number][]): void {
    this.state.domainPolygon = vertices.map((v) => [v[0], v[1]]);
    this.notify();
    this.requestExtract();
  }

  moveVertex(index: number, x: number, y: number): void {
    const poly = this.activePolygon;
    if (index < 0 || index >= poly.length) return;
    poly[index] = [x, y];
    this.notify();
    this.requestExtract();
  }

  /** Insert a vertex at the midpoint of edge i (edge i joins vertex i and
   * vertex i+1, wrapping when closed); edge count grows by exactly one. */
  insertVertexOnEdge(edgeIndex: number): void {
    const poly = this.activePolygon;
    if (poly.length < 2) return;
    const a = poly[edgeIndex % poly.length];
    const b = poly[(edgeIndex + 1) % poly.length];
    poly.splice(edgeIndex + 1, 0, [(a[0] + b[0]) / 2, (a[1] + b[1]) / 2]);
    this.notify();
    this.requestExtract();
  }

  deleteVertex(index: number): void {
    const poly = this.activePolygon;
    if (poly.length <= 3) return; // keep a valid polygon
    poly.splice(index, 1);
    this.notify();
    this.requestExtract();
  }

  translatePolygon(dx: number, dy: number): void {
    const poly = this.activePolygon;
    for (let i = 0; i < poly.length; i++) poly[i] = [poly[i][0] + dx, poly[i][1] + dy];
    this.notify();
    this.requestExtract();
  }

  startDrag(drag: EditorState["drag"]): void {
    this.state.drag = drag;
    this.notify();
  }

  endDrag(): void {
    this.state.drag = null;
    this.notify();
    this.requestExtract(true);
  }

  // --- extraction scheduling ----------------------------------------------

  private buildRequest(): ExtractRequest | null {
    const s = this.state;
    if (!s.dataset) return null;
    const base: ExtractRequest = {
      method: s.method,
      recursion: s.recursion,
      leaf_cells: s.leafCells,
      leaf_edges: s.leafEdges,
    };
    if (s.equivalence) {
      if (s.domainPolygon.length < 3) return null;
      base.equivalence = true;
      base.domain_polygon = { vertices: s.domainPolygon, closed: true };
    } else {
      if (s.polygon.length < 2) return null;
      base.polygon = { vertices: s.polygon, closed: s.closed };
    }
    return base;
  }

  /** Debounced by default (50 ms, drag-friendly); immediate for discrete
   * actions like switching methods. */
  requestExtract(immediate = false): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (immediate) {
      this.send();
    } else {
      this.timer = setTimeout(() => {
        this.timer = null;
        this.send();
      }, this.debounceMs);
    }
  }

  private send(): void {
    if (this.inflight) {
      this.queued = true;
      return;
    }
    const req = this.buildRequest();
    const dataset = this.state.dataset;
    if (!req || !dataset) return;
    const id = ++this.seq;
    this.inflight = true;
    this.extractFn(dataset.id, req).then(
      ({ body, raw }) => {
        this.inflight = false;
        if (id === this.seq && id > this.applied) {
          this.applied = id;
          this.state.lastResponse = body;
          this.state.lastRaw = raw;
          this.state.error = null;
          this.notify();
        }
        this.drainQueue();
      },
      (err: unknown) => {
        this.inflight = false;
        this.state.error = err instanceof Error ? err.message : String(err);
        this.notify();
        this.drainQueue();
      },
    );
  }

  private drainQueue(): void {
    if (this.queued) {
      this.queued = false;
      this.send();
    }
  }

  /** Resolves once no request is pending, in flight, or queued. */
  async settle(pollMs = 5): Promise<void> {
    for (;;) {
      if (this.timer === null && !this.inflight && !this.queued) return;
      await new Promise((resolve) => setTimeout(resolve, pollMs));
    }
  }
}
