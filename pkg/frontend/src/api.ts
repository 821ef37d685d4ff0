/** Typed client for the fiberline HTTP service. The UI never computes
 * geometry itself; everything it shows comes from these endpoints. */

export interface Box {
  min: [number, number];
  max: [number, number];
}

export interface DatasetSummary {
  id: string;
  cells: number;
  vertices: number;
  domain_box: Box;
  codomain_box: Box;
}

export interface Stats {
  nit_box_box: number;
  nit_seg_box: number;
  nit_total: number;
  candidates: number;
  true_positives: number;
  tpap: number;
  degenerate_cells: number;
  build_cells_ms: number;
  build_edges_ms: number;
  search_ms: number;
  extract_ms: number;
  total_ms: number;
}

export interface FiberSegment {
  cell_id: number;
  edge_id: number;
  p: [number, number];
  q: [number, number];
}

export interface ImageSegment {
  cell_id: number;
  source_edge_id: number;
  a: [number, number];
  b: [number, number];
}

export interface ExtractResponse {
  segments: FiberSegment[];
  image_polyline: ImageSegment[] | null;
  polygon_edges: number;
  stats: Stats;
}

export interface PolygonBody {
  vertices: [number, number][];
  closed: boolean;
}

export interface ExtractRequest {
  polygon?: PolygonBody;
  method: string;
  recursion: string;
  leaf_cells?: number | null;
  leaf_edges?: number | null;
  equivalence?: boolean;
  domain_polygon?: PolygonBody;
}

export interface DensityRaster {
  width: number;
  height: number;
  pixels: string; // base64 uint8 rows, row 0 at min y
}

async function getJson<T>(url: string): Promise<T> {
  const res = await fetch(url);
  if (!res.ok) throw new Error(`${url}: ${res.status} ${await res.text()}`);
  return (await res.json()) as T;
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  listDatasets(): Promise<DatasetSummary[]> {
    return getJson(`${this.baseUrl}/datasets`);
  }

  density(datasetId: string, res: number): Promise<DensityRaster> {
    return getJson(
      `${this.baseUrl}/datasets/${encodeURIComponent(datasetId)}/density?res=${res}`,
    );
  }

  /** Returns both the parsed body and the raw bytes so callers can verify
   * displayed numbers against exactly what the service sent. */
  async extractRaw(
    datasetId: string,
    req: ExtractRequest,
  ): Promise<{ body: ExtractResponse; raw: string }> {
    const res = await fetch(
      `${this.baseUrl}/datasets/${encodeURIComponent(datasetId)}/extract`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(req),
      },
    );
    const raw = await res.text();
    if (!res.ok) throw new Error(`extract: ${res.status} ${raw}`);
    return { body: JSON.parse(raw) as ExtractResponse, raw };
  }

  async isoline(
    datasetId: string,
    component: "u" | "v",
    isovalue: number,
  ): Promise<[number, number][][]> {
    const res = await fetch(
      `${this.baseUrl}/datasets/${encodeURIComponent(datasetId)}/isoline`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ component, isovalue }),
      },
    );
    if (!res.ok) throw new Error(`isoline: ${res.status} ${await res.text()}`);
    return (await res.json()).edges as [number, number][][];
  }
}
