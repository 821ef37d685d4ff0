"""Shared test utilities: field/polygon factories, brute-force candidate
oracles, and a plain recursive reference traversal used to cross-check the
vectorized searches (candidate sets and test counters alike)."""

from __future__ import annotations

import numpy as np

from fiberline import (
    BivariateField,
    Bvh,
    ControlPolygon,
    gen_double_gyre,
    gen_polygon,
    recursion_decide,
    sample_grid,
)
from fiberline.geometry import (
    aabb_overlap,
    boxes_overlap,
    segment_aabb_intersects,
    segments_hit_boxes,
)

FIELD_KINDS = ("identity", "constant", "noise", "smooth", "doublegyre")


def grid_shape_for_cells(cells: int, aspect: float = 1.0) -> tuple[int, int]:
    """nx, ny with 2*(nx-1)*(ny-1) roughly equal to the requested cell count."""
    quads = max(1, cells // 2)
    nx = max(2, int(round((quads * aspect) ** 0.5)) + 1)
    ny = max(2, quads // (nx - 1) + 1)
    return nx, ny


def make_field(kind: str, cells: int, rng: np.random.Generator) -> BivariateField:
    nx, ny = grid_shape_for_cells(cells)
    if kind == "doublegyre":
        nx, ny = grid_shape_for_cells(cells, aspect=2.0)
        return gen_double_gyre(nx, ny, t=float(rng.uniform(0, 10)))
    if kind == "identity":
        return sample_grid(nx, ny, 0, 0, 1 / (nx - 1), 1 / (ny - 1), lambda x, y: (x, y))
    if kind == "constant":
        cu, cv = rng.normal(size=2)
        return sample_grid(
            nx, ny, 0, 0, 1 / (nx - 1), 1 / (ny - 1),
            lambda x, y: (np.full_like(x, cu), np.full_like(x, cv)),
        )
    if kind == "noise":
        base = sample_grid(nx, ny, 0, 0, 1 / (nx - 1), 1 / (ny - 1), lambda x, y: (x, y))
        values = rng.normal(size=base.values.shape)
        return BivariateField(base.vertices, values, base.triangles)
    if kind == "smooth":
        a, b, c, d = rng.uniform(0.5, 3.0, size=4)
        return sample_grid(
            nx, ny, 0, 0, 1 / (nx - 1), 1 / (ny - 1),
            lambda x, y: (np.sin(a * x + b * y), np.cos(c * x - d * y) * y),
        )
    raise ValueError(kind)


def random_polygon(
    field: BivariateField, edge_count: int, rng: np.random.Generator
) -> ControlPolygon:
    """Polygon sized and placed relative to the field's codomain box; placement
    deliberately spills outside it part of the time."""
    box = field.codomain_bounds
    lo = np.array(box.min)
    span = np.maximum(np.array(box.max) - lo, 1e-6)
    center = lo + rng.uniform(-0.2, 1.2, 2) * span
    radius = float(rng.uniform(0.05, 0.6) * span.min())
    shape = "star" if rng.random() < 0.4 else "ngon"
    return gen_polygon(
        shape, edge_count, tuple(center), max(radius, 1e-6),
        inner_radius=max(radius * float(rng.uniform(0.3, 1.0)), 1e-7),
    )


def brute_force_pairs(field: BivariateField, polygon: ControlPolygon):
    """All-pairs candidate sets: (segment-vs-box set, box-vs-box set)."""
    boxes = field.cell_value_boxes
    e = polygon.edges
    n, m = field.n_cells, polygon.n_edges
    C, E = np.meshgrid(np.arange(n), np.arange(m), indexing="ij")
    C, E = C.ravel(), E.ravel()
    sb = segments_hit_boxes(
        e[E, 0, 0], e[E, 0, 1], e[E, 1, 0], e[E, 1, 1],
        boxes[C, 0], boxes[C, 1], boxes[C, 2], boxes[C, 3],
    )
    ebox = np.concatenate([e.min(axis=1), e.max(axis=1)], axis=1)
    bb = boxes_overlap(
        boxes[C, 0], boxes[C, 1], boxes[C, 2], boxes[C, 3],
        ebox[E, 0], ebox[E, 1], ebox[E, 2], ebox[E, 3],
    )
    seg_set = set(zip(C[sb].tolist(), E[sb].tolist()))
    box_set = set(zip(C[bb].tolist(), E[bb].tolist()))
    return seg_set, box_set


def reference_pair_search(
    polygon: ControlPolygon, tc: Bvh, te: Bvh, recursion: str, hybrid: bool
):
    """Plain recursive-style dual traversal with scalar predicates.

    Returns (pair set, box-box tests, seg-box tests); a node pair is emitted
    only after passing its own predicate.
    """
    counters = {"bb": 0, "sb": 0}

    def predicate(a: int, b: int) -> bool:
        if hybrid and te.node(b).is_leaf:
            hit = False
            for prim in te.leaf_primitives(b):
                counters["sb"] += 1
                if segment_aabb_intersects(polygon.edge_segment(int(prim)), tc.node(a).box):
                    hit = True
            return hit
        counters["bb"] += 1
        return aabb_overlap(tc.node(a).box, te.node(b).box)

    out: set[tuple[int, int]] = set()
    stack: list[tuple[int, int]] = []
    if tc.node(0).is_leaf and te.node(0).is_leaf:
        if predicate(0, 0):
            stack.append((0, 0))
    else:
        counters["bb"] += 1
        if aabb_overlap(tc.node(0).box, te.node(0).box):
            stack.append((0, 0))
    while stack:
        a, b = stack.pop()
        na, nb = tc.node(a), te.node(b)
        if na.is_leaf and nb.is_leaf:
            for c in tc.leaf_primitives(a):
                for e in te.leaf_primitives(b):
                    out.add((int(c), int(e)))
            continue
        if recursion_decide(recursion, na, nb) == "descend_cells":
            children = ((na.left, b), (na.right, b))
        else:
            children = ((a, nb.left), (a, nb.right))
        for pair in children:
            if predicate(*pair):
                stack.append(pair)
    return out, counters["bb"], counters["sb"]


def reference_single_search(polygon: ControlPolygon, tc: Bvh):
    """Per-edge scalar descent of the cell tree (the baseline method)."""
    tests = 0
    out: set[tuple[int, int]] = set()
    for e in range(polygon.n_edges):
        seg = polygon.edge_segment(e)
        stack = [0]
        while stack:
            i = stack.pop()
            node = tc.node(i)
            tests += 1
            if not segment_aabb_intersects(seg, node.box):
                continue
            if node.is_leaf:
                for c in tc.leaf_primitives(i):
                    out.add((int(c), e))
            else:
                stack.extend((node.left, node.right))
    return out, tests
