"""End-to-end queries: fiber-line extraction behind any search method,
isoline-projected control polygons, and field-equivalence extraction
(image of a domain polyline, then the preimage of that image).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .bvh import Bvh, ControlPolygon, build_domain_cells, build_edges
from .extraction import (
    MIN_SEGMENT_LEN,
    FiberLineSet,
    extract_all,
    extract_isoline_arrays,
)
from .field import BivariateField, evaluate_in_cells
from .geometry import points_segment_distance
from .traversal import QueryStats, SearchConfig, run_search, search_hybrid

_QUANT = 1e-12  # endpoint quantum for isoline chaining


@dataclass
class ImagePolyline:
    """Codomain image of a domain polyline, one sub-segment per crossed cell.

    a/b: (k, 2) codomain endpoints; cell_ids: source cell; source_edge_ids:
    index of the domain polyline edge each piece came from.  Pieces are
    ordered along each source edge, so consecutive endpoints of one source
    edge coincide.
    """

    cell_ids: np.ndarray
    source_edge_ids: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __len__(self) -> int:
        return len(self.cell_ids)

    @property
    def edges(self) -> np.ndarray:
        return np.stack([self.a, self.b], axis=1)


@dataclass
class QueryResult:
    fiber_lines: FiberLineSet
    polygon_used: ControlPolygon
    stats: QueryStats
    image: ImagePolyline | None = None


def run_query(
    field: BivariateField,
    polygon: ControlPolygon,
    config: SearchConfig = SearchConfig(),
    reuse_cells_bvh: Bvh | None = None,
) -> QueryResult:
    """Search for candidate pairs with the configured method, then extract.

    A supplied reuse_cells_bvh skips the cell-tree build (zero build time
    charged), matching the interaction model where only the polygon changes.
    """
    if polygon.n_edges == 0:
        raise ValueError("control polygon has no valid edges")
    t0 = time.perf_counter()
    stats = QueryStats()
    cands, _ = run_search(field, polygon, config, cells_bvh=reuse_cells_bvh, stats=stats)
    t1 = time.perf_counter()
    fibers = extract_all(field, polygon, cands, stats)
    stats.extract_ms += (time.perf_counter() - t1) * 1e3
    stats.total_ms += (time.perf_counter() - t0) * 1e3
    return QueryResult(fibers, polygon, stats)


def _chain_codomain_edges(segments: np.ndarray) -> np.ndarray:
    """Reorder (and orient) codomain segments into connected chains.

    Pure bookkeeping: the returned (m, 2, 2) array holds the same edges,
    possibly flipped, ordered so that chained edges share endpoints.  Shared
    endpoints are matched after quantization at 1e-12.
    """
    m = len(segments)
    if m == 0:
        return segments
    keys = np.round(segments / _QUANT).astype(np.int64)
    adj: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for i in range(m):
        for end in (0, 1):
            adj.setdefault((int(keys[i, end, 0]), int(keys[i, end, 1])), []).append(
                (i, end)
            )
    used = np.zeros(m, dtype=bool)
    out: list[np.ndarray] = []

    def walk(i: int, end: int) -> None:
        # follow the chain entering segment i at endpoint `end`
        while True:
            used[i] = True
            out.append(segments[i] if end == 0 else segments[i, ::-1])
            exit_key = (int(keys[i, 1 - end, 0]), int(keys[i, 1 - end, 1]))
            nxt = [(j, f) for (j, f) in adj.get(exit_key, ()) if not used[j]]
            if not nxt:
                return
            i, end = min(nxt)

    # open chains first: start at endpoints with a single incident segment
    degree_one = sorted(
        (entries[0] for entries in adj.values() if len(entries) == 1),
        key=lambda t: t,
    )
    for i, end in degree_one:
        if not used[i]:
            walk(i, end)
    for i in range(m):  # remaining closed loops
        if not used[i]:
            walk(i, 0)
    return np.stack(out)


def isoline_fscp(
    field: BivariateField, component: str, isovalue: float
) -> ControlPolygon | None:
    """Control polygon obtained by projecting a domain isoline into the
    codomain.  Returns None when the isoline is empty.

    The projected segments are chained into one or more open polylines and
    concatenated into a single open edge list; chaining never creates or
    removes edges.
    """
    cells, p, q = extract_isoline_arrays(field, component, isovalue)
    if len(cells) == 0:
        return None
    au, av = evaluate_in_cells(field, cells, p[:, 0], p[:, 1], check=False)
    bu, bv = evaluate_in_cells(field, cells, q[:, 0], q[:, 1], check=False)
    seg = np.stack(
        [np.stack([au, av], axis=1), np.stack([bu, bv], axis=1)], axis=1
    )
    keep = ~((seg[:, 0, 0] == seg[:, 1, 0]) & (seg[:, 0, 1] == seg[:, 1, 1]))
    seg = seg[keep]
    if len(seg) == 0:
        return None
    return ControlPolygon.from_edges(_chain_codomain_edges(seg))


def image_of_domain_polyline(
    field: BivariateField,
    domain_poly: ControlPolygon,
    domain_bvh: Bvh | None = None,
    stats: QueryStats | None = None,
) -> ImagePolyline:
    """Image of a domain polyline under the field.

    Each edge is clipped against the cells it crosses (hybrid search over the
    cells' domain boxes), and each clipped piece is mapped to the codomain by
    evaluating the field at its endpoints -- exact under piecewise-linear
    interpolation.  An entirely-outside polyline yields an empty result.
    """
    if domain_poly.n_edges == 0:
        raise ValueError("domain polyline has no positive-length edges")
    if stats is None:
        stats = QueryStats()
    if domain_bvh is None:
        t0 = time.perf_counter()
        domain_bvh = build_domain_cells(field, 1)
        stats.build_cells_ms += (time.perf_counter() - t0) * 1e3
    t0 = time.perf_counter()
    edges_bvh = build_edges(domain_poly, 1)
    stats.build_edges_ms += (time.perf_counter() - t0) * 1e3
    t0 = time.perf_counter()
    cands, _ = search_hybrid(field, domain_poly, domain_bvh, edges_bvh, "area", stats)
    stats.search_ms += (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    empty = ImagePolyline(
        np.empty(0, dtype=np.int64),
        np.empty(0, dtype=np.int64),
        np.empty((0, 2)),
        np.empty((0, 2)),
    )
    if len(cands) == 0:
        stats.extract_ms += (time.perf_counter() - t0) * 1e3
        return empty
    cells = cands.cells
    eids = cands.edges
    tp = field.tri_vertices[cells]  # (N,3,2)
    e = domain_poly.edges[eids]
    p = e[:, 0]
    d = e[:, 1] - e[:, 0]
    sigma = np.sign(field.domain_areas[cells])

    lo = np.zeros(len(cells))
    hi = np.ones(len(cells))
    dead = np.zeros(len(cells), dtype=bool)
    for i, j in ((0, 1), (1, 2), (2, 0)):
        vx, vy = tp[:, i, 0], tp[:, i, 1]
        wx, wy = tp[:, j, 0], tp[:, j, 1]
        ex, ey = wx - vx, wy - vy
        c1 = sigma * (ex * d[:, 1] - ey * d[:, 0])
        c0 = sigma * (ex * (p[:, 1] - vy) - ey * (p[:, 0] - vx))
        tcrit = -c0 / np.where(c1 == 0.0, 1.0, c1)
        lo = np.where(c1 > 0.0, np.maximum(lo, tcrit), lo)
        hi = np.where(c1 < 0.0, np.minimum(hi, tcrit), hi)
        dead |= (c1 == 0.0) & (c0 < 0.0)

    seg_len = np.hypot(d[:, 0], d[:, 1])
    keep = ~dead & ((hi - lo) * seg_len > MIN_SEGMENT_LEN)
    if not keep.any():
        stats.extract_ms += (time.perf_counter() - t0) * 1e3
        return empty
    cells, eids, p, d, lo, hi = (
        cells[keep],
        eids[keep],
        p[keep],
        d[keep],
        lo[keep],
        hi[keep],
    )
    pa = p + lo[:, None] * d
    pb = p + hi[:, None] * d
    au, av = evaluate_in_cells(field, cells, pa[:, 0], pa[:, 1], check=False)
    bu, bv = evaluate_in_cells(field, cells, pb[:, 0], pb[:, 1], check=False)
    a = np.stack([au, av], axis=1)
    b = np.stack([bu, bv], axis=1)
    nonzero = ~((a[:, 0] == b[:, 0]) & (a[:, 1] == b[:, 1]))
    order = np.lexsort((lo, eids))
    order = order[nonzero[order]]
    stats.extract_ms += (time.perf_counter() - t0) * 1e3
    return ImagePolyline(cells[order], eids[order], a[order], b[order])


def field_equivalence(
    field: BivariateField,
    domain_poly: ControlPolygon,
    config: SearchConfig = SearchConfig(),
    reuse_cells_bvh: Bvh | None = None,
    reuse_domain_bvh: Bvh | None = None,
) -> QueryResult:
    """Preimage of the image of a domain polyline ("all domain points sharing
    values with the polyline"), run as two queries in sequence.

    The returned stats aggregate both phases: intersection-test counters and
    phase timings are summed, while candidates/true positives describe the
    fiber query.  An empty image yields an empty result with phase-1 stats.
    """
    t0 = time.perf_counter()
    phase1 = QueryStats()
    image = image_of_domain_polyline(field, domain_poly, reuse_domain_bvh, phase1)
    if len(image) == 0:
        phase1.total_ms = (time.perf_counter() - t0) * 1e3
        empty = FiberLineSet(
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.int64),
            np.empty((0, 2)),
            np.empty((0, 2)),
            phase1,
        )
        return QueryResult(empty, ControlPolygon.from_edges(np.empty((0, 2, 2))), phase1, image)
    fscp = ControlPolygon.from_edges(image.edges)
    result = run_query(field, fscp, config, reuse_cells_bvh)
    stats = result.stats
    stats.nit_box_box += phase1.nit_box_box
    stats.nit_seg_box += phase1.nit_seg_box
    stats.degenerate_cells += phase1.degenerate_cells
    stats.build_cells_ms += phase1.build_cells_ms
    stats.build_edges_ms += phase1.build_edges_ms
    stats.search_ms += phase1.search_ms
    stats.extract_ms += phase1.extract_ms
    stats.total_ms = (time.perf_counter() - t0) * 1e3
    result.image = image
    return result


def fiber_round_trip_max_distance(
    field: BivariateField,
    fibers: FiberLineSet,
    polygon: ControlPolygon,
    interior_samples: int = 0,
) -> float:
    """Largest codomain distance from any fiber segment sample to its
    generating edge (endpoints always included)."""
    if len(fibers) == 0:
        return 0.0
    e = polygon.edges[fibers.edge_ids]
    worst = 0.0
    ts = np.linspace(0.0, 1.0, interior_samples + 2)
    for t in ts:
        x = fibers.p + t * (fibers.q - fibers.p)
        u, v = evaluate_in_cells(field, fibers.cell_ids, x[:, 0], x[:, 1], check=False)
        dist = points_segment_distance(
            u, v, e[:, 0, 0], e[:, 0, 1], e[:, 1, 0], e[:, 1, 1]
        )
        worst = max(worst, float(dist.max()))
    return worst


def fiber_sets_equal(
    a: FiberLineSet, b: FiberLineSet, tol: float = 1e-9
) -> bool:
    """Same (cell, edge) provenance pairs and endpoint agreement within tol.

    Both sets are in canonical (cell, edge) order as produced by extract_all.
    """
    if len(a) != len(b):
        return False
    if len(a) == 0:
        return True
    if not (
        np.array_equal(a.cell_ids, b.cell_ids)
        and np.array_equal(a.edge_ids, b.edge_ids)
    ):
        return False
    dp = np.max(np.abs(a.p - b.p))
    dq = np.max(np.abs(a.q - b.q))
    return bool(max(dp, dq) <= tol)
