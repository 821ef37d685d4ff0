"""Candidate-pair search strategies: naive all-pairs, per-edge descent of the
cell BVH, simultaneous dual-BVH descent, and the hybrid that switches to
segment-vs-box tests at edge leaves.

All strategies are conservative: their candidate list is a superset of the
pairs with nonempty preimage.  At one primitive per leaf the semantics are
exact:

* single and hybrid report {(c, e) : segment e intersects the box of cell c},
* dual reports {(c, e) : box of e overlaps the box of cell c},

so hybrid's candidates are a subset of dual's on every instance.  A node pair
is only emitted after passing its own predicate; reaching a pair requires all
its ancestors to pass theirs, which is implied by the leaf-level test, so no
pair is lost.

Traversal uses a breadth-style work list of node pairs processed with
vectorized predicate batches; the set of tested pairs (and thus every counter)
is identical to a depth-first descent, and results are depth-independent.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from .bvh import Bvh, BvhNode, ControlPolygon, build_cells, build_edges
from .field import BivariateField
from .geometry import boxes_overlap, segments_hit_boxes

METHODS = ("naive", "single", "dual", "hybrid")
RECURSION_STRATEGIES = ("area", "height", "cells_first", "edges_first")


@dataclass
class QueryStats:
    """Counters and per-phase timings of one query.

    nit_* count intersection tests by predicate kind; tpap is the ratio of
    true positives to all reported candidates (1 when there are none).
    """

    nit_box_box: int = 0
    nit_seg_box: int = 0
    candidates: int = 0
    true_positives: int = 0
    degenerate_cells: int = 0
    build_cells_ms: float = 0.0
    build_edges_ms: float = 0.0
    search_ms: float = 0.0
    extract_ms: float = 0.0
    total_ms: float = 0.0

    @property
    def nit_total(self) -> int:
        return self.nit_box_box + self.nit_seg_box

    @property
    def tpap(self) -> float:
        if self.candidates == 0:
            return 1.0
        return self.true_positives / self.candidates

    def to_dict(self) -> dict:
        return {
            "nit_box_box": self.nit_box_box,
            "nit_seg_box": self.nit_seg_box,
            "nit_total": self.nit_total,
            "candidates": self.candidates,
            "true_positives": self.true_positives,
            "tpap": self.tpap,
            "degenerate_cells": self.degenerate_cells,
            "build_cells_ms": self.build_cells_ms,
            "build_edges_ms": self.build_edges_ms,
            "search_ms": self.search_ms,
            "extract_ms": self.extract_ms,
            "total_ms": self.total_ms,
        }


@dataclass(frozen=True)
class SearchConfig:
    """Method selection plus tree parameters.

    Leaf sizes default per method: 8 cells/leaf for single, otherwise 1 per
    leaf on both trees.
    """

    method: str = "hybrid"
    leaf_cells: int | None = None
    leaf_edges: int | None = None
    recursion: str = "area"

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.recursion not in RECURSION_STRATEGIES:
            raise ValueError(f"unknown recursion strategy {self.recursion!r}")
        for v in (self.leaf_cells, self.leaf_edges):
            if v is not None and v < 1:
                raise ValueError("leaf sizes must be >= 1")

    @property
    def resolved_leaf_cells(self) -> int:
        if self.leaf_cells is not None:
            return self.leaf_cells
        return 8 if self.method == "single" else 1

    @property
    def resolved_leaf_edges(self) -> int:
        return 1 if self.leaf_edges is None else self.leaf_edges


@dataclass
class CandidateList:
    """(cell, edge) pairs passed to the extraction kernel.

    Pairs are unique and sorted by (cell_id, edge_id).  The naive search
    returns the implicit all-pairs form (all_pairs=True with empty arrays);
    ``pairs()`` materializes either form.
    """

    n_cells: int
    n_edges: int
    cells: np.ndarray = dc_field(
        default_factory=lambda: np.empty(0, dtype=np.int64)
    )
    edges: np.ndarray = dc_field(
        default_factory=lambda: np.empty(0, dtype=np.int64)
    )
    all_pairs: bool = False

    def __len__(self) -> int:
        if self.all_pairs:
            return self.n_cells * self.n_edges
        return len(self.cells)

    def pairs(self) -> list[tuple[int, int]]:
        if self.all_pairs:
            return [
                (c, e) for c in range(self.n_cells) for e in range(self.n_edges)
            ]
        return [(int(c), int(e)) for c, e in zip(self.cells, self.edges)]

    def pair_set(self) -> set[tuple[int, int]]:
        return set(self.pairs())


def _sorted_unique(cells, edges, n_cells: int, n_edges: int) -> CandidateList:
    if len(cells) == 0:
        return CandidateList(n_cells, n_edges)
    code = np.asarray(cells, dtype=np.int64) * n_edges + np.asarray(
        edges, dtype=np.int64
    )
    code = np.unique(code)
    return CandidateList(n_cells, n_edges, code // n_edges, code % n_edges)


def search_naive(field: BivariateField, polygon: ControlPolygon) -> CandidateList:
    """All n*m pairs (after zero-length-edge removal); no intersection tests."""
    return CandidateList(field.n_cells, polygon.n_edges, all_pairs=True)


def _ragged_positions(starts: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Concatenated index ranges [starts_i, starts_i + counts_i)."""
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    heads = np.cumsum(counts) - counts
    return np.repeat(starts, counts) + (np.arange(total) - np.repeat(heads, counts))


def search_single(
    field: BivariateField,
    polygon: ControlPolygon,
    cells_bvh: Bvh,
    stats: QueryStats | None = None,
) -> tuple[CandidateList, QueryStats]:
    """Per-edge descent of the cell BVH with segment-vs-box tests at every
    visited node; a positive leaf test emits all of the leaf's cells."""
    if stats is None:
        stats = QueryStats()
    t = cells_bvh
    e = polygon.edges
    m = len(e)
    ax, ay = e[:, 0, 0], e[:, 0, 1]
    bx, by = e[:, 1, 0], e[:, 1, 1]

    E = np.arange(m, dtype=np.int64)
    N = np.zeros(m, dtype=np.int64)
    out_c: list[np.ndarray] = []
    out_e: list[np.ndarray] = []
    while len(E):
        hit = segments_hit_boxes(
            ax[E], ay[E], bx[E], by[E], t.min_x[N], t.min_y[N], t.max_x[N], t.max_y[N]
        )
        stats.nit_seg_box += len(E)
        E = E[hit]
        N = N[hit]
        leaf = t.left[N] < 0
        if leaf.any():
            Nl = N[leaf]
            counts = t.count[Nl]
            out_c.append(t.primitive_order[_ragged_positions(t.start[Nl], counts)])
            out_e.append(np.repeat(E[leaf], counts))
        inner = ~leaf
        Ni = N[inner]
        Ei = E[inner]
        E = np.concatenate([Ei, Ei])
        N = np.concatenate([t.left[Ni], t.right[Ni]])

    cells = np.concatenate(out_c) if out_c else np.empty(0, dtype=np.int64)
    edges = np.concatenate(out_e) if out_e else np.empty(0, dtype=np.int64)
    return _sorted_unique(cells, edges, field.n_cells, m), stats


def recursion_decide(
    strategy: str, cell_node: BvhNode, edge_node: BvhNode
) -> str:
    """Which tree to descend for one node pair: 'descend_cells' or
    'descend_edges'.  A leaf is never descended; the decision flips to the
    other side instead."""
    if strategy not in RECURSION_STRATEGIES:
        raise ValueError(f"unknown recursion strategy {strategy!r}")
    if cell_node.is_leaf and edge_node.is_leaf:
        raise ValueError("at least one node must be internal")
    if strategy == "area":
        cells = cell_node.area >= edge_node.area
    elif strategy == "height":
        cells = cell_node.height >= edge_node.height
    elif strategy == "cells_first":
        cells = True
    else:  # edges_first
        cells = False
    if cells and cell_node.is_leaf:
        cells = False
    elif not cells and edge_node.is_leaf:
        cells = True
    return "descend_cells" if cells else "descend_edges"


def _decide_batch(
    strategy: str, tc: Bvh, te: Bvh, A: np.ndarray, B: np.ndarray
) -> np.ndarray:
    """Vectorized recursion_decide for pairs (A, B); True = descend cells."""
    if strategy == "area":
        d = tc.area[A] >= te.area[B]
    elif strategy == "height":
        d = tc.height[A] >= te.height[B]
    elif strategy == "cells_first":
        d = np.ones(len(A), dtype=bool)
    else:
        d = np.zeros(len(A), dtype=bool)
    d = np.where(tc.left[A] < 0, False, d)  # cell leaf -> descend edges
    d = np.where(te.left[B] < 0, True, d)  # edge leaf -> descend cells
    return d


def _cross_emit(tc: Bvh, te: Bvh, A: np.ndarray, B: np.ndarray):
    """Cross products of the primitives in leaf pairs (A, B)."""
    ca = tc.count[A]
    cb = te.count[B]
    if ca.max(initial=0) == 1 and cb.max(initial=0) == 1:
        return tc.primitive_order[tc.start[A]], te.primitive_order[te.start[B]]
    tot = ca * cb
    total = int(tot.sum())
    P = np.repeat(np.arange(len(A)), tot)
    off = np.arange(total) - np.repeat(np.cumsum(tot) - tot, tot)
    cbp = cb[P]
    cells = tc.primitive_order[tc.start[A][P] + off // cbp]
    edges = te.primitive_order[te.start[B][P] + off % cbp]
    return cells, edges


def _pair_search(
    field: BivariateField,
    polygon: ControlPolygon,
    cells_bvh: Bvh,
    edges_bvh: Bvh,
    recursion: str,
    hybrid: bool,
    stats: QueryStats,
) -> CandidateList:
    if recursion not in RECURSION_STRATEGIES:
        raise ValueError(f"unknown recursion strategy {recursion!r}")
    tc, te = cells_bvh, edges_bvh
    e = polygon.edges
    m = len(e)
    ax, ay = e[:, 0, 0], e[:, 0, 1]
    bx, by = e[:, 1, 0], e[:, 1, 1]

    def predicate(A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Intersection strategy per pair: segment tests at edge leaves when
        hybrid, plain box overlap otherwise; every test is counted."""
        hit = np.empty(len(A), dtype=bool)
        if hybrid:
            seg = te.left[B] < 0
        else:
            seg = np.zeros(len(A), dtype=bool)
        bb = ~seg
        if bb.any():
            Ab, Bb = A[bb], B[bb]
            hit[bb] = boxes_overlap(
                tc.min_x[Ab], tc.min_y[Ab], tc.max_x[Ab], tc.max_y[Ab],
                te.min_x[Bb], te.min_y[Bb], te.max_x[Bb], te.max_y[Bb],
            )
            stats.nit_box_box += int(bb.sum())
        if seg.any():
            As, Bs = A[seg], B[seg]
            counts = te.count[Bs]
            if counts.max() == 1:
                prim = te.primitive_order[te.start[Bs]]
                hit[seg] = segments_hit_boxes(
                    ax[prim], ay[prim], bx[prim], by[prim],
                    tc.min_x[As], tc.min_y[As], tc.max_x[As], tc.max_y[As],
                )
                stats.nit_seg_box += len(prim)
            else:
                # multi-edge leaf: disjunction of per-edge tests, each counted
                rep = np.repeat(np.arange(len(Bs)), counts)
                prim = te.primitive_order[_ragged_positions(te.start[Bs], counts)]
                h = segments_hit_boxes(
                    ax[prim], ay[prim], bx[prim], by[prim],
                    tc.min_x[As][rep], tc.min_y[As][rep],
                    tc.max_x[As][rep], tc.max_y[As][rep],
                )
                heads = np.cumsum(counts) - counts
                hit[seg] = np.logical_or.reduceat(h, heads)
                stats.nit_seg_box += len(prim)
        return hit

    root = np.array([0], dtype=np.int64)
    if tc.left[0] < 0 and te.left[0] < 0:
        # both roots are leaves: the pair predicate doubles as the pre-test
        keep = predicate(root, root)
        A = root[keep]
        B = root[keep]
    else:
        stats.nit_box_box += 1
        if not boxes_overlap(
            tc.min_x[0], tc.min_y[0], tc.max_x[0], tc.max_y[0],
            te.min_x[0], te.min_y[0], te.max_x[0], te.max_y[0],
        ):
            return CandidateList(field.n_cells, m)
        A = root
        B = root

    out_c: list[np.ndarray] = []
    out_e: list[np.ndarray] = []
    while len(A):
        leaf_pair = (tc.left[A] < 0) & (te.left[B] < 0)
        if leaf_pair.any():
            c, ee = _cross_emit(tc, te, A[leaf_pair], B[leaf_pair])
            out_c.append(c)
            out_e.append(ee)
        A1 = A[~leaf_pair]
        B1 = B[~leaf_pair]
        if not len(A1):
            break
        down_cells = _decide_batch(recursion, tc, te, A1, B1)
        Ac, Bc = A1[down_cells], B1[down_cells]
        Ae, Be = A1[~down_cells], B1[~down_cells]
        A = np.concatenate([tc.left[Ac], tc.right[Ac], Ae, Ae])
        B = np.concatenate([Bc, Bc, te.left[Be], te.right[Be]])
        keep = predicate(A, B)
        A = A[keep]
        B = B[keep]

    cells = np.concatenate(out_c) if out_c else np.empty(0, dtype=np.int64)
    edges = np.concatenate(out_e) if out_e else np.empty(0, dtype=np.int64)
    return _sorted_unique(cells, edges, field.n_cells, m)


def search_dual(
    field: BivariateField,
    polygon: ControlPolygon,
    cells_bvh: Bvh,
    edges_bvh: Bvh,
    recursion: str = "area",
    stats: QueryStats | None = None,
) -> tuple[CandidateList, QueryStats]:
    """Simultaneous descent of both trees with box-vs-box tests everywhere."""
    if stats is None:
        stats = QueryStats()
    cands = _pair_search(
        field, polygon, cells_bvh, edges_bvh, recursion, hybrid=False, stats=stats
    )
    return cands, stats


def search_hybrid(
    field: BivariateField,
    polygon: ControlPolygon,
    cells_bvh: Bvh,
    edges_bvh: Bvh,
    recursion: str = "area",
    stats: QueryStats | None = None,
) -> tuple[CandidateList, QueryStats]:
    """Dual descent that switches to segment-vs-box tests once the edge-side
    node is a leaf holding control-polygon edges."""
    if stats is None:
        stats = QueryStats()
    cands = _pair_search(
        field, polygon, cells_bvh, edges_bvh, recursion, hybrid=True, stats=stats
    )
    return cands, stats


def run_search(
    field: BivariateField,
    polygon: ControlPolygon,
    config: SearchConfig,
    cells_bvh: Bvh | None = None,
    stats: QueryStats | None = None,
) -> tuple[CandidateList, QueryStats]:
    """Build whatever trees the configured method needs (timed into stats) and
    run it.  A supplied cells_bvh is reused at zero build cost."""
    if stats is None:
        stats = QueryStats()
    method = config.method
    if method != "naive" and cells_bvh is None:
        t0 = time.perf_counter()
        cells_bvh = build_cells(field, config.resolved_leaf_cells)
        stats.build_cells_ms += (time.perf_counter() - t0) * 1e3

    if method == "naive":
        t0 = time.perf_counter()
        cands = search_naive(field, polygon)
        stats.search_ms += (time.perf_counter() - t0) * 1e3
        return cands, stats
    if method == "single":
        t0 = time.perf_counter()
        cands, _ = search_single(field, polygon, cells_bvh, stats)
        stats.search_ms += (time.perf_counter() - t0) * 1e3
        return cands, stats

    t0 = time.perf_counter()
    edges_bvh = build_edges(polygon, config.resolved_leaf_edges)
    stats.build_edges_ms += (time.perf_counter() - t0) * 1e3
    t0 = time.perf_counter()
    if method == "dual":
        cands, _ = search_dual(
            field, polygon, cells_bvh, edges_bvh, config.recursion, stats
        )
    else:
        cands, _ = search_hybrid(
            field, polygon, cells_bvh, edges_bvh, config.recursion, stats
        )
    stats.search_ms += (time.perf_counter() - t0) * 1e3
    return cands, stats
