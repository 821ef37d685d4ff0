"""Binary AABB hierarchies over cell images or control-polygon edges, and the
control-polygon type itself.

Construction is top-down: each range is split at its median index after
sorting by centroid along the longest axis of the range's centroid bounds
(ties on equal centroids break by primitive index).  The build is fully
deterministic; traversal code relies only on candidate-set semantics, never on
tree shape.

Polygon text format: line 1 ``poly <n> <closed|open>``, then n lines ``u v``.
Zero-length edges are tolerated in files and dropped on load.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .field import BivariateField, FieldFormatError
from .geometry import Aabb, Segment


@dataclass(frozen=True)
class ControlPolygon:
    """Polyline/polygon in the codomain whose preimage is extracted.

    The canonical payload is ``edges`` (m, 2, 2): zero-length edges are
    removed at derivation.  ``vertices`` is kept when the polygon was built
    from a vertex list; edge-list polygons (e.g. projected isolines) carry
    ``vertices=None``.
    """

    vertices: np.ndarray | None
    closed: bool
    edges: np.ndarray = dc_field(repr=False, default=None)  # type: ignore[assignment]

    @staticmethod
    def from_vertices(vertices, closed: bool) -> "ControlPolygon":
        vertices = np.ascontiguousarray(vertices, dtype=np.float64).reshape(-1, 2)
        if not np.isfinite(vertices).all():
            raise ValueError("non-finite polygon vertex")
        a = vertices[:-1]
        b = vertices[1:]
        if closed and len(vertices) >= 2:
            a = np.concatenate([a, vertices[-1:]])
            b = np.concatenate([b, vertices[:1]])
        edges = np.stack([a, b], axis=1)
        keep = ~((a[:, 0] == b[:, 0]) & (a[:, 1] == b[:, 1]))
        return ControlPolygon(vertices, closed, np.ascontiguousarray(edges[keep]))

    @staticmethod
    def from_edges(edges) -> "ControlPolygon":
        """Polygon given directly as an edge list (m, 2, 2); zero-length edges
        are dropped."""
        edges = np.ascontiguousarray(edges, dtype=np.float64).reshape(-1, 2, 2)
        if not np.isfinite(edges).all():
            raise ValueError("non-finite polygon edge")
        keep = ~(
            (edges[:, 0, 0] == edges[:, 1, 0]) & (edges[:, 0, 1] == edges[:, 1, 1])
        )
        return ControlPolygon(None, False, np.ascontiguousarray(edges[keep]))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_segment(self, edge_id: int) -> Segment:
        e = self.edges[edge_id]
        return Segment((e[0, 0], e[0, 1]), (e[1, 0], e[1, 1]))

    def bounds(self) -> Aabb:
        if self.n_edges == 0:
            raise ValueError("polygon has no edges")
        lo = self.edges.reshape(-1, 2).min(axis=0)
        hi = self.edges.reshape(-1, 2).max(axis=0)
        return Aabb((float(lo[0]), float(lo[1])), (float(hi[0]), float(hi[1])))

    def translated(self, dx: float, dy: float) -> "ControlPolygon":
        off = np.array([dx, dy])
        verts = self.vertices + off if self.vertices is not None else None
        return ControlPolygon(verts, self.closed, self.edges + off)

    def scaled(self, factor: float) -> "ControlPolygon":
        verts = self.vertices * factor if self.vertices is not None else None
        return ControlPolygon(verts, self.closed, self.edges * factor)


def gen_polygon(
    shape: str,
    edge_count: int,
    center=(0.0, 0.0),
    radius: float = 1.0,
    inner_radius: float | None = None,
) -> ControlPolygon:
    """Closed polygon with exactly edge_count edges.

    ngon / circle_approx: regular polygon with vertices at angles 2*pi*k/n
    starting at angle 0.  star: alternates radius and inner_radius.
    """
    if edge_count < 3:
        raise ValueError("edge_count must be >= 3")
    if radius <= 0:
        raise ValueError("radius must be positive")
    angles = 2.0 * math.pi * np.arange(edge_count) / edge_count
    if shape in ("ngon", "circle_approx"):
        r = np.full(edge_count, radius)
    elif shape == "star":
        inner = radius / 2.0 if inner_radius is None else inner_radius
        if inner <= 0:
            raise ValueError("inner_radius must be positive")
        r = np.where(np.arange(edge_count) % 2 == 0, radius, inner)
    else:
        raise ValueError(f"unknown shape {shape!r}")
    verts = np.stack(
        [center[0] + r * np.cos(angles), center[1] + r * np.sin(angles)], axis=1
    )
    return ControlPolygon.from_vertices(verts, closed=True)


def load_polygon(path) -> ControlPolygon:
    path = Path(path)
    lines = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            stripped = raw.strip()
            if stripped and not stripped.startswith("#"):
                lines.append(stripped.split())
    if not lines:
        raise FieldFormatError(f"{path}: empty polygon file")
    header = lines[0]
    if len(header) != 3 or header[0] != "poly" or header[2] not in ("closed", "open"):
        raise FieldFormatError(f"{path}: expected header 'poly <n> <closed|open>'")
    try:
        n = int(header[1])
    except ValueError as exc:
        raise FieldFormatError(f"{path}: bad vertex count") from exc
    if len(lines) != 1 + n:
        raise FieldFormatError(f"{path}: expected {n} vertex lines")
    try:
        verts = np.array([[float(t) for t in row] for row in lines[1:]])
    except ValueError as exc:
        raise FieldFormatError(f"{path}: bad vertex row") from exc
    if verts.ndim != 2 or verts.shape[1] != 2:
        raise FieldFormatError(f"{path}: vertex rows must have 2 columns")
    return ControlPolygon.from_vertices(verts, closed=header[2] == "closed")


def save_polygon(polygon: ControlPolygon, path) -> None:
    if polygon.vertices is None:
        raise ValueError("edge-list polygons have no vertex-file form")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"poly {len(polygon.vertices)} {'closed' if polygon.closed else 'open'}\n"
        )
        for x, y in polygon.vertices:
            fh.write(f"{x:.17g} {y:.17g}\n")


@dataclass(frozen=True)
class BvhNode:
    """Read-only view of one tree node."""

    box: Aabb
    height: int
    area: float
    left: int | None
    right: int | None
    start: int
    count: int

    @property
    def is_leaf(self) -> bool:
        return self.left is None


class Bvh:
    """Immutable binary AABB tree stored as contiguous node arrays.

    Node 0 is the root.  Leaves reference a contiguous slice of
    ``primitive_order``; internal nodes reference two children whose boxes
    union exactly to the parent box.
    """

    __slots__ = (
        "kind",
        "leaf_size",
        "n_primitives",
        "primitive_order",
        "min_x",
        "min_y",
        "max_x",
        "max_y",
        "left",
        "right",
        "start",
        "count",
        "height",
        "area",
    )

    def __init__(self, kind: str, leaf_size: int, boxes: np.ndarray):
        if leaf_size < 1:
            raise ValueError("leaf_size must be >= 1")
        n = len(boxes)
        if n == 0:
            raise ValueError("cannot build a BVH over zero primitives")
        self.kind = kind
        self.leaf_size = leaf_size
        self.n_primitives = n
        self._build(np.ascontiguousarray(boxes, dtype=np.float64))

    def _build(self, boxes: np.ndarray) -> None:
        n = self.n_primitives
        leaf_size = self.leaf_size
        centroids = 0.5 * (boxes[:, 0:2] + boxes[:, 2:4])
        order = np.arange(n, dtype=np.int64)

        cap = 2 * n  # <= 2n-1 nodes for any leaf size
        node_lo = np.zeros(cap, dtype=np.int64)
        node_hi = np.zeros(cap, dtype=np.int64)
        left = np.full(cap, -1, dtype=np.int32)
        right = np.full(cap, -1, dtype=np.int32)
        node_hi[0] = n
        n_nodes = 1
        levels: list[np.ndarray] = []  # node ids per depth, for bottom-up passes

        active = np.array([0], dtype=np.int64)
        while len(active):
            levels.append(active)
            lo = node_lo[active]
            hi = node_hi[active]
            counts = hi - lo
            split = counts > leaf_size
            if not split.any():
                break
            ids = active[split]
            lo = lo[split]
            counts = counts[split]

            # centroid bounds per range (ranges are disjoint, sorted by lo)
            seg_starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
            pos = np.repeat(lo, counts) + (
                np.arange(counts.sum()) - np.repeat(seg_starts, counts)
            )
            elems = order[pos]
            cx = centroids[elems, 0]
            cy = centroids[elems, 1]
            ext_x = np.maximum.reduceat(cx, seg_starts) - np.minimum.reduceat(cx, seg_starts)
            ext_y = np.maximum.reduceat(cy, seg_starts) - np.minimum.reduceat(cy, seg_starts)
            use_y = ext_y > ext_x  # longest axis, ties -> x
            key = np.where(np.repeat(use_y, counts), cy, cx)
            rid = np.repeat(np.arange(len(ids)), counts)
            perm = np.lexsort((elems, key, rid))
            order[pos] = elems[perm]

            mid = lo + counts // 2
            n_new = 2 * len(ids)
            child = np.arange(n_nodes, n_nodes + n_new, dtype=np.int64)
            lc = child[0::2]
            rc = child[1::2]
            left[ids] = lc
            right[ids] = rc
            node_lo[lc] = lo
            node_hi[lc] = mid
            node_lo[rc] = mid
            node_hi[rc] = node_hi[ids]
            n_nodes += n_new
            active = child  # id order == lo order: parents sorted, left.lo < right.lo

        self.primitive_order = order
        self.left = left[:n_nodes].copy()
        self.right = right[:n_nodes].copy()
        self.start = node_lo[:n_nodes].astype(np.int64)
        self.count = (node_hi[:n_nodes] - node_lo[:n_nodes]).astype(np.int64)

        # bottom-up boxes and heights
        min_x = np.empty(n_nodes)
        min_y = np.empty(n_nodes)
        max_x = np.empty(n_nodes)
        max_y = np.empty(n_nodes)
        height = np.zeros(n_nodes, dtype=np.int32)
        is_leaf = self.left < 0
        leaf_ids = np.flatnonzero(is_leaf)
        leaf_ids = leaf_ids[np.argsort(self.start[leaf_ids], kind="stable")]
        starts = self.start[leaf_ids]
        pb = boxes[order]
        min_x[leaf_ids] = np.minimum.reduceat(pb[:, 0], starts)
        min_y[leaf_ids] = np.minimum.reduceat(pb[:, 1], starts)
        max_x[leaf_ids] = np.maximum.reduceat(pb[:, 2], starts)
        max_y[leaf_ids] = np.maximum.reduceat(pb[:, 3], starts)
        for ids in reversed(levels):
            internal = ids[self.left[ids] >= 0]
            if not len(internal):
                continue
            lc = self.left[internal]
            rc = self.right[internal]
            min_x[internal] = np.minimum(min_x[lc], min_x[rc])
            min_y[internal] = np.minimum(min_y[lc], min_y[rc])
            max_x[internal] = np.maximum(max_x[lc], max_x[rc])
            max_y[internal] = np.maximum(max_y[lc], max_y[rc])
            height[internal] = 1 + np.maximum(height[lc], height[rc])
        self.min_x, self.min_y, self.max_x, self.max_y = min_x, min_y, max_x, max_y
        self.height = height
        self.area = (max_x - min_x) * (max_y - min_y)

    @property
    def n_nodes(self) -> int:
        return len(self.left)

    @property
    def root_box(self) -> Aabb:
        return self.node(0).box

    def node(self, i: int) -> BvhNode:
        if not 0 <= i < self.n_nodes:
            raise IndexError(f"node {i} out of range")
        leaf = self.left[i] < 0
        return BvhNode(
            box=Aabb(
                (float(self.min_x[i]), float(self.min_y[i])),
                (float(self.max_x[i]), float(self.max_y[i])),
            ),
            height=int(self.height[i]),
            area=float(self.area[i]),
            left=None if leaf else int(self.left[i]),
            right=None if leaf else int(self.right[i]),
            start=int(self.start[i]),
            count=int(self.count[i]),
        )

    def leaf_primitives(self, i: int) -> np.ndarray:
        s = int(self.start[i])
        return self.primitive_order[s : s + int(self.count[i])]


def build_cells(field: BivariateField, leaf_size: int = 1) -> Bvh:
    """BVH over the codomain AABBs of all cell images."""
    if field.n_cells == 0:
        raise ValueError("field has no cells")
    return Bvh("cells", leaf_size, field.cell_value_boxes)


def build_domain_cells(field: BivariateField, leaf_size: int = 1) -> Bvh:
    """BVH over the domain AABBs of all cells (used for domain-side clipping)."""
    if field.n_cells == 0:
        raise ValueError("field has no cells")
    return Bvh("cells", leaf_size, field.cell_domain_boxes)


def build_edges(polygon: ControlPolygon, leaf_size: int = 1) -> Bvh:
    """BVH over the AABBs of the polygon's (non-zero-length) edges."""
    if polygon.n_edges == 0:
        raise ValueError("polygon has no valid edges")
    e = polygon.edges
    boxes = np.concatenate([e.min(axis=1), e.max(axis=1)], axis=1)
    return Bvh("edges", leaf_size, boxes)
