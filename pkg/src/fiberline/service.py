"""HTTP API for interactive clients: dataset listing, a codomain density
raster, live fiber-line extraction, and isoline-projected control polygons.

Datasets are loaded once at startup and never mutated; cell BVHs are built on
first use per leaf size and cached, so interactive requests only pay for the
edge tree, the search, and the extraction.  All bodies are JSON; errors carry
``{"error": "<message>"}``.
"""

from __future__ import annotations

import base64
import threading
from pathlib import Path
from typing import Literal

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .bvh import Bvh, ControlPolygon, build_cells, build_domain_cells
from .field import BivariateField, load_field
from .pipeline import QueryResult, field_equivalence, isoline_fscp, run_query
from .traversal import SearchConfig

DATA_SUFFIXES = (".bvf2", ".grid")


class BoxModel(BaseModel):
    min: list[float] = Field(min_length=2, max_length=2)
    max: list[float] = Field(min_length=2, max_length=2)


class DatasetSummary(BaseModel):
    id: str
    cells: int
    vertices: int
    domain_box: BoxModel
    codomain_box: BoxModel


class PolygonModel(BaseModel):
    vertices: list[list[float]]
    closed: bool = True


class ExtractRequest(BaseModel):
    polygon: PolygonModel | None = None
    method: Literal["naive", "single", "dual", "hybrid"] = "hybrid"
    recursion: Literal["area", "height", "cells_first", "edges_first"] = "area"
    leaf_cells: int | None = Field(default=None, ge=1)
    leaf_edges: int | None = Field(default=None, ge=1)
    equivalence: bool = False
    domain_polygon: PolygonModel | None = None


class SegmentModel(BaseModel):
    cell_id: int
    edge_id: int
    p: list[float]
    q: list[float]


class ImageSegmentModel(BaseModel):
    cell_id: int
    source_edge_id: int
    a: list[float]
    b: list[float]


class StatsModel(BaseModel):
    nit_box_box: int
    nit_seg_box: int
    nit_total: int
    candidates: int
    true_positives: int
    tpap: float
    degenerate_cells: int
    build_cells_ms: float
    build_edges_ms: float
    search_ms: float
    extract_ms: float
    total_ms: float


class ExtractResponse(BaseModel):
    segments: list[SegmentModel]
    image_polyline: list[ImageSegmentModel] | None = None
    polygon_edges: int
    stats: StatsModel


class IsolineRequest(BaseModel):
    component: Literal["u", "v"] = "u"
    isovalue: float


class IsolineResponse(BaseModel):
    edges: list[list[list[float]]]  # m x 2 x 2 codomain endpoints


class DensityResponse(BaseModel):
    width: int
    height: int
    pixels: str  # base64 of row-major uint8 rows, row 0 at min-y


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        self.status = status
        self.message = message


class _Dataset:
    """One loaded field plus lazily built, cached acceleration trees."""

    def __init__(self, dataset_id: str, field: BivariateField):
        self.id = dataset_id
        self.field = field
        self._lock = threading.Lock()
        self._cells_bvh: dict[int, Bvh] = {}
        self._domain_bvh: Bvh | None = None

    def cells_bvh(self, leaf_size: int) -> Bvh:
        with self._lock:
            bvh = self._cells_bvh.get(leaf_size)
            if bvh is None:
                bvh = build_cells(self.field, leaf_size)
                self._cells_bvh[leaf_size] = bvh
            return bvh

    def domain_bvh(self) -> Bvh:
        with self._lock:
            if self._domain_bvh is None:
                self._domain_bvh = build_domain_cells(self.field, 1)
            return self._domain_bvh

    def summary(self) -> DatasetSummary:
        f = self.field
        db, cb = f.domain_bounds, f.codomain_bounds
        return DatasetSummary(
            id=self.id,
            cells=f.n_cells,
            vertices=f.n_vertices,
            domain_box=BoxModel(min=list(db.min), max=list(db.max)),
            codomain_box=BoxModel(min=list(cb.min), max=list(cb.max)),
        )


def _box_model(aabb) -> BoxModel:
    return BoxModel(min=list(aabb.min), max=list(aabb.max))


def _polygon_from_model(model: PolygonModel) -> ControlPolygon:
    return ControlPolygon.from_vertices(
        np.asarray(model.vertices, dtype=np.float64), model.closed
    )


def _density_raster(field: BivariateField, res: int) -> np.ndarray:
    """Per-pixel count of cell-image AABB coverage over the codomain bounds,
    normalized to 0..255.  Deterministic; row 0 corresponds to min y."""
    box = field.codomain_bounds
    lo = np.array(box.min)
    span = np.maximum(np.array(box.max) - lo, 1e-300)
    b = field.cell_value_boxes
    x0 = np.clip(((b[:, 0] - lo[0]) / span[0] * res).astype(np.int64), 0, res - 1)
    y0 = np.clip(((b[:, 1] - lo[1]) / span[1] * res).astype(np.int64), 0, res - 1)
    x1 = np.clip(((b[:, 2] - lo[0]) / span[0] * res).astype(np.int64), 0, res - 1)
    y1 = np.clip(((b[:, 3] - lo[1]) / span[1] * res).astype(np.int64), 0, res - 1)
    acc = np.zeros((res + 1, res + 1), dtype=np.int64)
    np.add.at(acc, (y0, x0), 1)
    np.add.at(acc, (y0, x1 + 1), -1)
    np.add.at(acc, (y1 + 1, x0), -1)
    np.add.at(acc, (y1 + 1, x1 + 1), 1)
    counts = acc.cumsum(axis=0).cumsum(axis=1)[:res, :res]
    peak = counts.max()
    if peak == 0:
        return np.zeros((res, res), dtype=np.uint8)
    return (counts * 255 // peak).astype(np.uint8)


def _result_response(result: QueryResult) -> ExtractResponse:
    fl = result.fiber_lines
    segments = [
        SegmentModel(
            cell_id=int(c),
            edge_id=int(e),
            p=[float(p[0]), float(p[1])],
            q=[float(q[0]), float(q[1])],
        )
        for c, e, p, q in zip(fl.cell_ids, fl.edge_ids, fl.p, fl.q)
    ]
    image = None
    if result.image is not None:
        image = [
            ImageSegmentModel(
                cell_id=int(c),
                source_edge_id=int(e),
                a=[float(a[0]), float(a[1])],
                b=[float(b[0]), float(b[1])],
            )
            for c, e, a, b in zip(
                result.image.cell_ids,
                result.image.source_edge_ids,
                result.image.a,
                result.image.b,
            )
        ]
    return ExtractResponse(
        segments=segments,
        image_polyline=image,
        polygon_edges=result.polygon_used.n_edges,
        stats=StatsModel(**result.stats.to_dict()),
    )


def load_datasets(data_dir) -> dict[str, BivariateField]:
    """All mesh files (by suffix) in a directory, keyed by file stem."""
    root = Path(data_dir)
    if not root.is_dir():
        raise OSError(f"data directory not found: {root}")
    fields = {}
    for path in sorted(root.iterdir()):
        if path.suffix in DATA_SUFFIXES and path.is_file():
            fields[path.stem] = load_field(path)
    return fields


def create_app(
    data_dir=None, datasets: dict[str, BivariateField] | None = None
) -> FastAPI:
    """Service over the given datasets (and/or every mesh file in data_dir)."""
    fields: dict[str, BivariateField] = {}
    if data_dir is not None:
        fields.update(load_datasets(data_dir))
    if datasets:
        fields.update(datasets)
    registry = {name: _Dataset(name, f) for name, f in sorted(fields.items())}

    app = FastAPI(title="fiberline", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"error": exc.message})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={"error": str(exc.errors())})

    def _dataset(dataset_id: str) -> _Dataset:
        ds = registry.get(dataset_id)
        if ds is None:
            raise ApiError(404, f"unknown dataset {dataset_id!r}")
        return ds

    @app.get("/datasets", response_model=list[DatasetSummary])
    def list_datasets():
        return [ds.summary() for ds in registry.values()]

    @app.get("/datasets/{dataset_id}/density", response_model=DensityResponse)
    def density(dataset_id: str, res: int = 256):
        ds = _dataset(dataset_id)
        if not 16 <= res <= 2048:
            raise ApiError(400, f"res must be in [16, 2048], got {res}")
        raster = _density_raster(ds.field, res)
        return DensityResponse(
            width=res,
            height=res,
            pixels=base64.b64encode(raster.tobytes()).decode("ascii"),
        )

    @app.post("/datasets/{dataset_id}/extract", response_model=ExtractResponse)
    def extract(dataset_id: str, req: ExtractRequest):
        ds = _dataset(dataset_id)
        config = SearchConfig(
            method=req.method,
            leaf_cells=req.leaf_cells,
            leaf_edges=req.leaf_edges,
            recursion=req.recursion,
        )
        reuse = (
            ds.cells_bvh(config.resolved_leaf_cells)
            if config.method != "naive"
            else None
        )
        if req.equivalence:
            if req.domain_polygon is None:
                raise ApiError(422, "equivalence mode needs domain_polygon")
            domain_poly = _polygon_from_model(req.domain_polygon)
            if domain_poly.n_edges < 1:
                raise ApiError(422, "domain polygon has no valid edges")
            result = field_equivalence(
                ds.field,
                domain_poly,
                config,
                reuse_cells_bvh=reuse,
                reuse_domain_bvh=ds.domain_bvh(),
            )
        else:
            if req.polygon is None:
                raise ApiError(422, "polygon is required")
            polygon = _polygon_from_model(req.polygon)
            if polygon.n_edges < 1:
                raise ApiError(422, "polygon has no valid edges")
            result = run_query(ds.field, polygon, config, reuse_cells_bvh=reuse)
        return _result_response(result)

    @app.post("/datasets/{dataset_id}/isoline", response_model=IsolineResponse)
    def isoline(dataset_id: str, req: IsolineRequest):
        ds = _dataset(dataset_id)
        polygon = isoline_fscp(ds.field, req.component, req.isovalue)
        if polygon is None:
            return IsolineResponse(edges=[])
        return IsolineResponse(edges=polygon.edges.tolist())

    return app
