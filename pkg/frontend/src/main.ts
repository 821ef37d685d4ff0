/** Page bootstrap: dataset picker, linked codomain/domain canvases, stats
 * panel, and the service client. */

import { ApiClient, type DensityRaster } from "./api.js";
import { codomainDrawList, domainDrawList, statsRows } from "./draw.js";
import { EditorStore } from "./state.js";
import { fitBox, type Viewport } from "./transforms.js";
import { renderOps, wirePanZoom, wirePolygonEditor } from "./views.js";

const SERVICE_URL =
  new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8040";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const api = new ApiClient(SERVICE_URL);
  const store = new EditorStore((dataset, req) => api.extractRaw(dataset, req));

  const banner = el<HTMLDivElement>("banner");
  const datasetSel = el<HTMLSelectElement>("dataset");
  const methodSel = el<HTMLSelectElement>("method");
  const recursionSel = el<HTMLSelectElement>("recursion");
  const equivalenceBox = el<HTMLInputElement>("equivalence");
  const showImageBox = el<HTMLInputElement>("show-image");
  const statsTable = el<HTMLTableElement>("stats");
  const codomainCanvas = el<HTMLCanvasElement>("codomain");
  const domainCanvas = el<HTMLCanvasElement>("domain");
  const codomainCtx = codomainCanvas.getContext("2d")!;
  const domainCtx = domainCanvas.getContext("2d")!;
  const rasterCache = new Map<string, HTMLCanvasElement>();

  let codomainVp: Viewport = fitBox(
    { min: [0, 0], max: [1, 1] },
    codomainCanvas.width,
    codomainCanvas.height,
  );
  let domainVp = codomainVp;
  let raster: DensityRaster | null = null;

  const paint = () => {
    banner.textContent = store.state.error ?? "";
    banner.style.display = store.state.error ? "block" : "none";
    renderOps(codomainCtx, codomainDrawList(store.state, codomainVp, raster), rasterCache);
    renderOps(domainCtx, domainDrawList(store.state, domainVp), rasterCache);
    statsTable.innerHTML = statsRows(store.state)
      .map(([k, v]) => `<tr><td>${k}</td><td>${v}</td></tr>`)
      .join("");
  };
  store.subscribe(paint);

  const selectDataset = async (id: string) => {
    const all = await api.listDatasets();
    const ds = all.find((d) => d.id === id) ?? all[0];
    if (!ds) return;
    codomainVp = fitBox(ds.codomain_box, codomainCanvas.width, codomainCanvas.height);
    domainVp = fitBox(ds.domain_box, domainCanvas.width, domainCanvas.height);
    try {
      raster = await api.density(ds.id, 256);
    } catch (err) {
      raster = null;
      store.state.error = err instanceof Error ? err.message : String(err);
    }
    // default polygon: a square in the middle of the codomain
    const [u0, v0] = ds.codomain_box.min;
    const [u1, v1] = ds.codomain_box.max;
    const cx = (u0 + u1) / 2;
    const cy = (v0 + v1) / 2;
    const r = 0.2 * Math.min(u1 - u0 || 1, v1 - v0 || 1);
    store.state.dataset = ds;
    store.setPolygon([
      [cx - r, cy - r],
      [cx + r, cy - r],
      [cx + r, cy + r],
      [cx - r, cy + r],
    ]);
    const [x0, y0] = ds.domain_box.min;
    const [x1, y1] = ds.domain_box.max;
    const dcx = (x0 + x1) / 2;
    const dcy = (y0 + y1) / 2;
    const dr = 0.2 * Math.min(x1 - x0 || 1, y1 - y0 || 1);
    store.setDomainPolygon([
      [dcx - dr, dcy - dr],
      [dcx + dr, dcy - dr],
      [dcx + dr, dcy + dr],
      [dcx - dr, dcy + dr],
    ]);
    paint();
  };

  try {
    const datasets = await api.listDatasets();
    datasetSel.innerHTML = datasets
      .map((d) => `<option value="${d.id}">${d.id} (${d.cells} cells)</option>`)
      .join("");
    if (datasets.length) await selectDataset(datasets[0].id);
  } catch (err) {
    store.state.error = `cannot reach service at ${SERVICE_URL}: ${err}`;
    paint();
    return;
  }

  datasetSel.addEventListener("change", () => void selectDataset(datasetSel.value));
  methodSel.addEventListener("change", () => store.setMethod(methodSel.value));
  recursionSel.addEventListener("change", () => store.setRecursion(recursionSel.value));
  equivalenceBox.addEventListener("change", () =>
    store.setEquivalence(equivalenceBox.checked),
  );
  showImageBox.addEventListener("change", () =>
    store.setShowImagePolyline(showImageBox.checked),
  );

  wirePolygonEditor(codomainCanvas, store, () => codomainVp);
  wirePanZoom(
    domainCanvas,
    () => domainVp,
    (vp) => {
      domainVp = vp;
      paint();
    },
  );
  // in equivalence mode the editable polygon lives in the domain view
  wirePolygonEditor(domainCanvas, store, () => domainVp);
  paint();
}

if (typeof document !== "undefined") {
  void boot();
}
