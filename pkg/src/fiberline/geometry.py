"""Low-level 2D primitives: closed AABBs, segments, signed distances, and the
two intersection tests the search strategies are built from.

All predicates use closed-set semantics: touching counts as intersecting. The
broad phase must never drop a true positive; exact clipping happens later in
the extraction kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Point = tuple[float, float]


def _check_finite(*coords: float) -> None:
    for c in coords:
        if not math.isfinite(c):
            raise ValueError(f"non-finite coordinate: {c!r}")


@dataclass(frozen=True)
class Aabb:
    """Closed axis-aligned box; zero width/height is allowed."""

    min: Point
    max: Point

    def __post_init__(self) -> None:
        _check_finite(*self.min, *self.max)
        if self.min[0] > self.max[0] or self.min[1] > self.max[1]:
            raise ValueError(f"inverted box: min={self.min} max={self.max}")

    @property
    def area(self) -> float:
        return (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])


@dataclass(frozen=True)
class Segment:
    """Directed segment from a to b; zero length is representable but callers
    filter zero-length control-polygon edges before any search."""

    a: Point
    b: Point

    def __post_init__(self) -> None:
        _check_finite(*self.a, *self.b)

    def length(self) -> float:
        return math.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1])


def aabb_of_triangle(p0: Point, p1: Point, p2: Point) -> Aabb:
    """Componentwise min/max box of three points."""
    xs = (p0[0], p1[0], p2[0])
    ys = (p0[1], p1[1], p2[1])
    return Aabb((min(xs), min(ys)), (max(xs), max(ys)))


def aabb_of_segment(s: Segment) -> Aabb:
    """Box of a segment; zero-width for axis-aligned segments."""
    return Aabb(
        (min(s.a[0], s.b[0]), min(s.a[1], s.b[1])),
        (max(s.a[0], s.b[0]), max(s.a[1], s.b[1])),
    )


def aabb_overlap(x: Aabb, y: Aabb) -> bool:
    """True iff the closed boxes intersect (touching counts)."""
    return (
        x.min[0] <= y.max[0]
        and y.min[0] <= x.max[0]
        and x.min[1] <= y.max[1]
        and y.min[1] <= x.max[1]
    )


def _axis_window(a, d, lo, hi):
    """Per-axis slab window (enter, exit) of segment parameters t with
    lo <= a + t*d <= hi.  Parallel axes yield (-inf, inf) when the fixed
    coordinate lies in the closed slab, an empty window otherwise."""
    par = d == 0.0
    safe = np.where(par, 1.0, d)
    t1 = (lo - a) / safe
    t2 = (hi - a) / safe
    enter = np.minimum(t1, t2)
    leave = np.maximum(t1, t2)
    inside = (a >= lo) & (a <= hi)
    enter = np.where(par, np.where(inside, -np.inf, np.inf), enter)
    leave = np.where(par, np.where(inside, np.inf, -np.inf), leave)
    return enter, leave


def segments_hit_boxes(ax, ay, bx, by, lox, loy, hix, hiy) -> np.ndarray:
    """Vectorized closed slab test; element i pairs segment i with box i.

    All arguments broadcast together; returns a boolean array.
    """
    ex, lx = _axis_window(ax, bx - ax, lox, hix)
    ey, ly = _axis_window(ay, by - ay, loy, hiy)
    enter = np.maximum(np.maximum(ex, ey), 0.0)
    leave = np.minimum(np.minimum(lx, ly), 1.0)
    return enter <= leave


def boxes_overlap(alox, aloy, ahix, ahiy, blox, bloy, bhix, bhiy) -> np.ndarray:
    """Vectorized closed box-vs-box overlap test."""
    return (alox <= bhix) & (blox <= ahix) & (aloy <= bhiy) & (bloy <= ahiy)


def segment_aabb_intersects(s: Segment, box: Aabb) -> bool:
    """True iff the closed segment intersects the closed box (slab test)."""
    hit = segments_hit_boxes(
        np.float64(s.a[0]),
        np.float64(s.a[1]),
        np.float64(s.b[0]),
        np.float64(s.b[1]),
        np.float64(box.min[0]),
        np.float64(box.min[1]),
        np.float64(box.max[0]),
        np.float64(box.max[1]),
    )
    return bool(hit)


def signed_distance(p: Point, line_a: Point, line_b: Point) -> float:
    """Perpendicular signed distance of p to the infinite line through
    line_a -> line_b, positive on the left of the direction line_b - line_a:

        d = cross(b - a, p - a) / |b - a|
    """
    dx = line_b[0] - line_a[0]
    dy = line_b[1] - line_a[1]
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        raise ValueError("zero-length line")
    return (dx * (p[1] - line_a[1]) - dy * (p[0] - line_a[0])) / norm


def edge_parameter(p: Point, s: Segment) -> float:
    """Projection parameter t of p onto s: t=0 at s.a, t=1 at s.b.

    t lies in [0, 1] exactly when the projection falls within the segment.
    """
    dx = s.b[0] - s.a[0]
    dy = s.b[1] - s.a[1]
    len2 = dx * dx + dy * dy
    if len2 == 0.0:
        raise ValueError("zero-length segment")
    return ((p[0] - s.a[0]) * dx + (p[1] - s.a[1]) * dy) / len2


def points_segment_distance(px, py, ax, ay, bx, by) -> np.ndarray:
    """Vectorized distance from points to closed segments (pairs element i
    with segment i; arguments broadcast)."""
    dx = bx - ax
    dy = by - ay
    len2 = dx * dx + dy * dy
    t = ((px - ax) * dx + (py - ay) * dy) / np.where(len2 == 0.0, 1.0, len2)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(ax + t * dx - px, ay + t * dy - py)
