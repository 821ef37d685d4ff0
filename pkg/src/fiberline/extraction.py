"""Exact per-(cell, edge) preimage kernel and the marching-triangles isoline
extractor.

For one cell and one control-polygon edge the kernel computes signed distances
of the cell-image corners to the edge's infinite line, finds the two zero
crossings on the image boundary, clips their parameter interval along the edge
to [0, 1], and maps the clipped endpoints to the domain with the same linear
weights.  Under piecewise-linear interpolation the preimage inside a cell is a
straight segment, so the mapping is exact up to floating-point rounding.

Conventions (fixed so the case split is total and deterministic):

* a corner with signed distance d > 0 is on the positive side, d <= 0 on the
  non-positive side; corners exactly on the line join the non-positive side;
* cell images collinear with the line (all |d| <= 1e-12) emit nothing and are
  tallied in ``degenerate_cells`` (their preimage is the whole cell, which is
  outside the fiber-line model);
* emitted segments shorter than 1e-12 domain units are discarded.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .bvh import ControlPolygon
from .field import BivariateField
from .geometry import Segment
from .traversal import CandidateList, QueryStats

DEGENERATE_EPS = 1e-12  # |signed distance| below which a cell image is collinear
MIN_SEGMENT_LEN = 1e-12  # minimum emitted segment length, domain units

_CHUNK = 1 << 20  # candidate pairs per kernel chunk (bounds temp memory)


@dataclass(frozen=True)
class DomainSegment:
    """One fiber-line piece with (cell, edge) provenance.

    Isoline extraction reuses this type with edge_id = -1.
    """

    p: tuple[float, float]
    q: tuple[float, float]
    cell_id: int
    edge_id: int


@dataclass
class FiberLineSet:
    """Extracted fiber-line segments, stored as flat arrays.

    cell_ids/edge_ids: (k,) provenance (unique pairs); p/q: (k, 2) domain
    endpoints.
    """

    cell_ids: np.ndarray
    edge_ids: np.ndarray
    p: np.ndarray
    q: np.ndarray
    stats: QueryStats = dc_field(default_factory=QueryStats)

    def __len__(self) -> int:
        return len(self.cell_ids)

    def segments(self) -> list[DomainSegment]:
        return [
            DomainSegment(
                (float(px), float(py)),
                (float(qx), float(qy)),
                int(c),
                int(e),
            )
            for c, e, (px, py), (qx, qy) in zip(
                self.cell_ids, self.edge_ids, self.p, self.q
            )
        ]

    def total_length(self) -> float:
        d = self.q - self.p
        return float(np.hypot(d[:, 0], d[:, 1]).sum())

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("cell_id,edge_id,px,py,qx,qy\n")
            for c, e, (px, py), (qx, qy) in zip(
                self.cell_ids, self.edge_ids, self.p, self.q
            ):
                fh.write(f"{c},{e},{px:.17g},{py:.17g},{qx:.17g},{qy:.17g}\n")


def _empty_fibers(stats: QueryStats) -> FiberLineSet:
    return FiberLineSet(
        np.empty(0, dtype=np.int64),
        np.empty(0, dtype=np.int64),
        np.empty((0, 2)),
        np.empty((0, 2)),
        stats,
    )


def _kernel(field: BivariateField, edge_arr: np.ndarray, cells, edges):
    """Vectorized preimage kernel over candidate pairs.

    edge_arr: (m, 2, 2) codomain edges; cells/edges: int arrays of equal
    length selecting the pairs.  Returns (keep_cells, keep_edges, P, Q,
    n_degenerate).
    """
    tv = field.tri_values[cells]  # (N,3,2) cell-image corners
    tp = field.tri_vertices[cells]  # (N,3,2) domain corners
    a = edge_arr[edges, 0]
    b = edge_arr[edges, 1]
    dx = b[:, 0] - a[:, 0]
    dy = b[:, 1] - a[:, 1]
    ln = np.hypot(dx, dy)

    # signed distance of each corner to the edge's infinite line; the same
    # expression (and rounding) as the all-pairs classification path
    d = (
        dx[:, None] * (tv[:, :, 1] - a[:, 1, None])
        - dy[:, None] * (tv[:, :, 0] - a[:, 0, None])
    ) / ln[:, None]
    side = d > 0.0
    degenerate = (np.abs(d) <= DEGENERATE_EPS).all(axis=1)
    n_degenerate = int(degenerate.sum())
    m01 = side[:, 0] != side[:, 1]
    m12 = side[:, 1] != side[:, 2]
    m20 = side[:, 2] != side[:, 0]
    crossing = (m01 | m12) & ~degenerate
    if not crossing.any():
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, np.empty((0, 2)), np.empty((0, 2)), n_degenerate

    # restrict to crossing pairs
    sel = np.flatnonzero(crossing)
    cells = np.asarray(cells)[sel]
    edges = np.asarray(edges)[sel]
    d = d[sel]
    tv = tv[sel]
    tp = tp[sel]
    a = a[sel]
    dx = dx[sel]
    dy = dy[sel]
    ln = ln[sel]
    m01 = m01[sel]
    m12 = m12[sel]
    m20 = m20[sel]

    def cross_point(i: int, j: int, mask):
        di = d[:, i]
        dj = d[:, j]
        span = np.where(mask, di - dj, 1.0)
        s = np.where(mask, di / span, 0.0)
        x = tv[:, i] + s[:, None] * (tv[:, j] - tv[:, i])  # codomain
        y = tp[:, i] + s[:, None] * (tp[:, j] - tp[:, i])  # domain
        return x, y

    x01, y01 = cross_point(0, 1, m01)
    x12, y12 = cross_point(1, 2, m12)
    x20, y20 = cross_point(2, 0, m20)

    # exactly two of the three cell edges cross; pick (first, second)
    xa = np.where(m01[:, None], x01, x12)
    ya = np.where(m01[:, None], y01, y12)
    xb = np.where(m20[:, None], x20, x12)
    yb = np.where(m20[:, None], y20, y12)

    len2 = ln * ln
    ta = ((xa[:, 0] - a[:, 0]) * dx + (xa[:, 1] - a[:, 1]) * dy) / len2
    tb = ((xb[:, 0] - a[:, 0]) * dx + (xb[:, 1] - a[:, 1]) * dy) / len2

    swap = ta > tb
    t_lo = np.where(swap, tb, ta)
    t_hi = np.where(swap, ta, tb)
    y_lo = np.where(swap[:, None], yb, ya)
    y_hi = np.where(swap[:, None], ya, yb)

    # discard pairs whose crossing interval misses the edge's [0,1] range
    keep = (t_hi >= 0.0) & (t_lo <= 1.0)

    span = t_hi - t_lo
    safe = np.where(span > 0.0, span, 1.0)
    w0 = np.where(span > 0.0, (np.maximum(t_lo, 0.0) - t_lo) / safe, 0.0)
    w1 = np.where(span > 0.0, (np.minimum(t_hi, 1.0) - t_lo) / safe, 1.0)
    p = y_lo + w0[:, None] * (y_hi - y_lo)
    q = y_lo + w1[:, None] * (y_hi - y_lo)
    keep &= np.hypot(q[:, 0] - p[:, 0], q[:, 1] - p[:, 1]) > MIN_SEGMENT_LEN

    return cells[keep], edges[keep], p[keep], q[keep], n_degenerate


def extract_pair(
    field: BivariateField, cell_id: int, edge: Segment, edge_id: int = 0
) -> DomainSegment | None:
    """Preimage of one codomain edge restricted to one cell, or None."""
    if not 0 <= cell_id < field.n_cells:
        raise IndexError(f"cell {cell_id} out of range")
    if edge.length() == 0.0:
        raise ValueError("zero-length edge (callers filter these)")
    edge_arr = np.array([[edge.a, edge.b]], dtype=np.float64)
    cells, edges, p, q, _ = _kernel(
        field, edge_arr, np.array([cell_id]), np.array([0])
    )
    if len(cells) == 0:
        return None
    return DomainSegment(
        (float(p[0, 0]), float(p[0, 1])),
        (float(q[0, 0]), float(q[0, 1])),
        int(cells[0]),
        edge_id,
    )


def _normalize_candidates(candidates, n_edges: int):
    """Returns (cells, edges, all_pairs, n_candidates) with duplicates removed
    and pairs sorted by (cell, edge)."""
    if isinstance(candidates, CandidateList):
        if candidates.all_pairs:
            return None, None, True, candidates.n_cells * candidates.n_edges
        cells, edges = candidates.cells, candidates.edges
    else:
        pairs = np.asarray(list(candidates), dtype=np.int64).reshape(-1, 2)
        cells, edges = pairs[:, 0], pairs[:, 1]
    if len(cells) == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64), False, 0
    code = cells.astype(np.int64) * max(n_edges, 1) + edges.astype(np.int64)
    code = np.unique(code)
    return code // max(n_edges, 1), code % max(n_edges, 1), False, len(code)


def extract_all(
    field: BivariateField,
    polygon: ControlPolygon,
    candidates,
    stats: QueryStats | None = None,
) -> FiberLineSet:
    """Apply the preimage kernel to every candidate (cell, edge) pair.

    candidates may be a CandidateList (possibly the implicit all-pairs form) or
    any iterable of (cell_id, edge_id); duplicates are deduplicated.  Fills
    candidate/true-positive/degenerate counters on stats.
    """
    if stats is None:
        stats = QueryStats()
    edge_arr = polygon.edges
    m = len(edge_arr)
    cells, edges, all_pairs, n_cand = _normalize_candidates(candidates, m)
    stats.candidates += n_cand

    out_c: list[np.ndarray] = []
    out_e: list[np.ndarray] = []
    out_p: list[np.ndarray] = []
    out_q: list[np.ndarray] = []

    if all_pairs and m > 0 and field.n_cells > 0:
        ndeg, parts = _extract_all_pairs(field, edge_arr)
        stats.degenerate_cells += ndeg
        for c, e, p, q in parts:
            out_c.append(c)
            out_e.append(e)
            out_p.append(p)
            out_q.append(q)
    elif not all_pairs:
        for i in range(0, len(cells), _CHUNK):
            c, e, p, q, ndeg = _kernel(
                field, edge_arr, cells[i : i + _CHUNK], edges[i : i + _CHUNK]
            )
            stats.degenerate_cells += ndeg
            if len(c):
                out_c.append(c)
                out_e.append(e)
                out_p.append(p)
                out_q.append(q)

    if not out_c:
        stats.true_positives += 0
        return _empty_fibers(stats)
    cells_out = np.concatenate(out_c)
    edges_out = np.concatenate(out_e)
    p_out = np.concatenate(out_p)
    q_out = np.concatenate(out_q)
    # canonical (cell, edge) order
    perm = np.lexsort((edges_out, cells_out))
    fibers = FiberLineSet(
        cells_out[perm], edges_out[perm], p_out[perm], q_out[perm], stats
    )
    stats.true_positives += len(fibers)
    return fibers


def _extract_all_pairs(field: BivariateField, edge_arr: np.ndarray):
    """All-pairs kernel without materializing the n*m candidate list.

    Classifies corner sides per vertex in blocks of edges, then runs the exact
    kernel only on sign-crossing pairs.  The classification uses the same
    arithmetic as the kernel, so the selected set matches exactly.
    """
    values = field.values
    tri = field.triangles
    nv = len(values)
    m = len(edge_arr)
    px = values[:, 0][:, None]
    py = values[:, 1][:, None]
    block = max(1, min(m, int(4e6) // max(nv, 1)))
    n_degenerate = 0
    parts = []
    for e0 in range(0, m, block):
        eb = edge_arr[e0 : e0 + block]
        ax = eb[:, 0, 0][None, :]
        ay = eb[:, 0, 1][None, :]
        dx = (eb[:, 1, 0] - eb[:, 0, 0])[None, :]
        dy = (eb[:, 1, 1] - eb[:, 0, 1])[None, :]
        ln = np.hypot(dx, dy)
        d = (dx * (py - ay) - dy * (px - ax)) / ln  # (nv, k)
        side = d > 0.0
        small = np.abs(d) <= DEGENERATE_EPS
        s0 = side[tri[:, 0]]
        s1 = side[tri[:, 1]]
        s2 = side[tri[:, 2]]
        deg = small[tri[:, 0]] & small[tri[:, 1]] & small[tri[:, 2]]
        n_degenerate += int(np.count_nonzero(deg))
        crossing = ((s0 != s1) | (s1 != s2)) & ~deg
        cc, ee = np.nonzero(crossing)
        if len(cc):
            c, e, p, q, _ = _kernel(field, edge_arr, cc, ee + e0)
            if len(c):
                parts.append((c, e, p, q))
    return n_degenerate, parts


def extract_isoline_arrays(field: BivariateField, component: str, isovalue: float):
    """Marching-triangles isoline of one value component.

    Returns (cell_ids, p, q) arrays of per-cell domain segments.
    """
    comp = {"u": 0, "v": 1}.get(component)
    if comp is None:
        raise ValueError("component must be 'u' or 'v'")
    g = field.values[:, comp] - isovalue  # (nv,)
    side = g > 0.0
    tri = field.triangles
    s0, s1, s2 = side[tri[:, 0]], side[tri[:, 1]], side[tri[:, 2]]
    crossing = (s0 != s1) | (s1 != s2)
    cells = np.flatnonzero(crossing)
    if len(cells) == 0:
        return (
            np.empty(0, dtype=np.int64),
            np.empty((0, 2)),
            np.empty((0, 2)),
        )
    t = tri[cells]
    gv = g[t]  # (k,3)
    tp = field.tri_vertices[cells]
    sv = gv > 0.0
    m01 = sv[:, 0] != sv[:, 1]
    m12 = sv[:, 1] != sv[:, 2]
    m20 = sv[:, 2] != sv[:, 0]

    def cpoint(i, j, mask):
        span = np.where(mask, gv[:, i] - gv[:, j], 1.0)
        s = np.where(mask, gv[:, i] / span, 0.0)
        return tp[:, i] + s[:, None] * (tp[:, j] - tp[:, i])

    y01 = cpoint(0, 1, m01)
    y12 = cpoint(1, 2, m12)
    y20 = cpoint(2, 0, m20)
    p = np.where(m01[:, None], y01, y12)
    q = np.where(m20[:, None], y20, y12)
    keep = np.hypot(q[:, 0] - p[:, 0], q[:, 1] - p[:, 1]) > MIN_SEGMENT_LEN
    return cells[keep], p[keep], q[keep]


def extract_isoline(
    field: BivariateField, component: str, isovalue: float
) -> list[DomainSegment]:
    """Isoline of values[component] at isovalue, one segment per crossed cell."""
    cells, p, q = extract_isoline_arrays(field, component, isovalue)
    return [
        DomainSegment((float(pp[0]), float(pp[1])), (float(qq[0]), float(qq[1])), int(c), -1)
        for c, pp, qq in zip(cells, p, q)
    ]
