"""Bivariate fields on triangular meshes: data model, generators, file I/O.

A field maps a 2D domain to a 2D value space ("codomain") by piecewise-linear
interpolation over a triangle mesh.  Domain triangles must be non-degenerate;
their codomain images may collapse to segments or points (constant fields are
valid data).

Text formats (whitespace-separated numbers, ``#`` starts a comment line):

* native:  ``bvf2 <nv> <nt>`` then nv lines ``x y u v`` and nt lines ``i j k``
  (zero-based vertex indices);
* grid:    ``grid <nx> <ny> <x0> <y0> <dx> <dy>`` then nx*ny lines ``u v`` in
  row-major order, x fastest.  Grids triangulate into 2*(nx-1)*(ny-1) cells
  with the fixed quad diagonal (i,j) -> (i+1,j+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

from .geometry import Aabb


class FieldFormatError(ValueError):
    """Malformed field file (bad header or row)."""


class FieldValidationError(ValueError):
    """Structurally invalid mesh (bad index, degenerate domain triangle, ...)."""


@dataclass(frozen=True)
class BivariateField:
    """Immutable triangular mesh with a 2D value per vertex.

    vertices:  (nv, 2) float64 domain positions
    values:    (nv, 2) float64 codomain values
    triangles: (nt, 3) int32 vertex indices
    """

    vertices: np.ndarray
    values: np.ndarray
    triangles: np.ndarray

    def __post_init__(self) -> None:
        vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        triangles = np.ascontiguousarray(self.triangles, dtype=np.int32)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "triangles", triangles)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise FieldValidationError("vertices must have shape (nv, 2)")
        if values.shape != vertices.shape:
            raise FieldValidationError("values must match vertices in shape")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise FieldValidationError("triangles must have shape (nt, 3)")
        if not np.isfinite(vertices).all() or not np.isfinite(values).all():
            raise FieldValidationError("non-finite coordinate or value")
        nv = len(vertices)
        if triangles.size and (triangles.min() < 0 or triangles.max() >= nv):
            raise FieldValidationError("triangle vertex index out of range")
        t = triangles
        if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
            raise FieldValidationError("triangle with repeated vertex")
        if np.any(self.domain_areas == 0.0):
            bad = int(np.flatnonzero(self.domain_areas == 0.0)[0])
            raise FieldValidationError(f"degenerate domain triangle {bad}")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.triangles)

    @cached_property
    def domain_areas(self) -> np.ndarray:
        """Signed area of every domain triangle."""
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def tri_vertices(self) -> np.ndarray:
        """(nt, 3, 2) domain positions of each cell's corners."""
        return self.vertices[self.triangles]

    @cached_property
    def tri_values(self) -> np.ndarray:
        """(nt, 3, 2) codomain values at each cell's corners (the cell image)."""
        return self.values[self.triangles]

    @cached_property
    def cell_value_boxes(self) -> np.ndarray:
        """(nt, 4) AABB of each cell image: min_x, min_y, max_x, max_y."""
        tv = self.tri_values
        return np.concatenate([tv.min(axis=1), tv.max(axis=1)], axis=1)

    @cached_property
    def cell_domain_boxes(self) -> np.ndarray:
        """(nt, 4) AABB of each domain triangle."""
        tp = self.tri_vertices
        return np.concatenate([tp.min(axis=1), tp.max(axis=1)], axis=1)

    @cached_property
    def codomain_bounds(self) -> Aabb:
        lo = self.values.min(axis=0)
        hi = self.values.max(axis=0)
        return Aabb((float(lo[0]), float(lo[1])), (float(hi[0]), float(hi[1])))

    @cached_property
    def domain_bounds(self) -> Aabb:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return Aabb((float(lo[0]), float(lo[1])), (float(hi[0]), float(hi[1])))


@dataclass(frozen=True)
class CellImage:
    """Codomain triangle formed by a cell's vertex values (may be degenerate)."""

    cell_id: int
    p0: tuple[float, float]
    p1: tuple[float, float]
    p2: tuple[float, float]


def cell_image(field: BivariateField, cell_id: int) -> CellImage:
    """Codomain triangle of one cell."""
    if not 0 <= cell_id < field.n_cells:
        raise IndexError(f"cell {cell_id} out of range")
    v = field.tri_values[cell_id]
    return CellImage(cell_id, tuple(v[0]), tuple(v[1]), tuple(v[2]))


def barycentric_weights(field: BivariateField, cell_ids, px, py):
    """Vectorized barycentric weights of points w.r.t. their cells.

    Computed as sub-triangle cross products over the cell's signed area, so a
    query at a corner yields that corner's weight exactly 1 and the others
    exactly 0.
    """
    tp = field.tri_vertices[cell_ids]
    ax, ay = tp[..., 0, 0], tp[..., 0, 1]
    bx, by = tp[..., 1, 0], tp[..., 1, 1]
    cx, cy = tp[..., 2, 0], tp[..., 2, 1]
    d = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    w0 = ((bx - px) * (cy - py) - (by - py) * (cx - px)) / d
    w1 = ((cx - px) * (ay - py) - (cy - py) * (ax - px)) / d
    w2 = ((ax - px) * (by - py) - (ay - py) * (bx - px)) / d
    return w0, w1, w2


def evaluate_in_cells(
    field: BivariateField, cell_ids, px, py, tol: float = 1e-9, check: bool = True
):
    """Vectorized field evaluation of points known to lie in given cells.

    Returns (u, v) arrays.  With check=True, raises if any barycentric weight
    falls below -tol.
    """
    w0, w1, w2 = barycentric_weights(field, cell_ids, px, py)
    if check:
        wmin = min(np.min(w0), np.min(w1), np.min(w2)) if np.size(w0) else 0.0
        if wmin < -tol:
            raise ValueError(f"point outside cell (barycentric {wmin} < -{tol})")
    tv = field.tri_values[cell_ids]
    u = w0 * tv[..., 0, 0] + w1 * tv[..., 1, 0] + w2 * tv[..., 2, 0]
    v = w0 * tv[..., 0, 1] + w1 * tv[..., 1, 1] + w2 * tv[..., 2, 1]
    return u, v


def evaluate(
    field: BivariateField, cell_id: int, point, tol: float = 1e-9
) -> tuple[float, float]:
    """Barycentric-linear interpolation of the vertex values at a point inside
    (or on the boundary of) one cell."""
    if not 0 <= cell_id < field.n_cells:
        raise IndexError(f"cell {cell_id} out of range")
    u, v = evaluate_in_cells(
        field,
        np.asarray([cell_id]),
        np.asarray([point[0]], dtype=np.float64),
        np.asarray([point[1]], dtype=np.float64),
        tol=tol,
    )
    return float(u[0]), float(v[0])


def triangulate_grid(nx: int, ny: int) -> np.ndarray:
    """Triangle index array for an nx-by-ny vertex grid (row-major, x fastest),
    splitting every quad along the (i,j) -> (i+1,j+1) diagonal."""
    if nx < 2 or ny < 2:
        raise FieldValidationError("grid needs nx >= 2 and ny >= 2")
    i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    v00 = (j * nx + i).ravel()
    v10 = v00 + 1
    v01 = v00 + nx
    v11 = v01 + 1
    tris = np.empty((2 * v00.size, 3), dtype=np.int32)
    tris[0::2] = np.stack([v00, v10, v11], axis=1)
    tris[1::2] = np.stack([v00, v11, v01], axis=1)
    return tris


def sample_grid(
    nx: int,
    ny: int,
    x0: float,
    y0: float,
    dx: float,
    dy: float,
    fn: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]],
) -> BivariateField:
    """Regular triangulated grid with per-vertex values fn(x, y) -> (u, v)."""
    if nx < 2 or ny < 2:
        raise FieldValidationError("grid needs nx >= 2 and ny >= 2")
    xs = x0 + dx * np.arange(nx)
    ys = y0 + dy * np.arange(ny)
    gx, gy = np.meshgrid(xs, ys)  # row-major: y slow, x fast
    px = gx.ravel()
    py = gy.ravel()
    u, v = fn(px, py)
    vertices = np.stack([px, py], axis=1)
    values = np.stack([np.broadcast_to(u, px.shape), np.broadcast_to(v, px.shape)], axis=1)
    return BivariateField(vertices, values, triangulate_grid(nx, ny))


def double_gyre_velocity(
    x: np.ndarray,
    y: np.ndarray,
    t: float = 0.0,
    amplitude: float = 0.1,
    eps: float = 0.25,
    omega: float = math.pi / 5.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Velocity (u, v) of the double-gyre stream function at time t.

    psi(x, y, t) = A sin(pi g(x, t)) sin(pi y) with
    g(x, t) = a x^2 + b x, a = eps sin(omega t), b = 1 - 2 eps sin(omega t);
    u = -dpsi/dy, v = dpsi/dx.
    """
    a = eps * math.sin(omega * t)
    b = 1.0 - 2.0 * eps * math.sin(omega * t)
    g = a * x * x + b * x
    dg = 2.0 * a * x + b
    u = -math.pi * amplitude * np.sin(math.pi * g) * np.cos(math.pi * y)
    v = math.pi * amplitude * np.cos(math.pi * g) * dg * np.sin(math.pi * y)
    return u, v


def gen_double_gyre(
    nx: int,
    ny: int,
    t: float = 0.0,
    amplitude: float = 0.1,
    eps: float = 0.25,
    omega: float = math.pi / 5.0,
) -> BivariateField:
    """Double-gyre velocity field sampled on an nx-by-ny grid over [0,2]x[0,1]."""
    return sample_grid(
        nx,
        ny,
        0.0,
        0.0,
        2.0 / (nx - 1),
        1.0 / (ny - 1),
        lambda x, y: double_gyre_velocity(x, y, t, amplitude, eps, omega),
    )


def identity_field(nx: int = 17, ny: int = 17, size: float = 1.0) -> BivariateField:
    """Grid field over [0,size]^2 whose values equal the vertex positions."""
    d = size / (nx - 1), size / (ny - 1)
    return sample_grid(nx, ny, 0.0, 0.0, d[0], d[1], lambda x, y: (x, y))


def _content_lines(path: Path) -> list[list[str]]:
    lines = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            stripped = raw.strip()
            if not stripped or stripped.startswith("#"):
                continue
            lines.append(stripped.split())
    if not lines:
        raise FieldFormatError(f"{path}: empty file")
    return lines


def _parse_rows(rows: list[list[str]], width: int, kind: str, cast) -> np.ndarray:
    try:
        arr = np.array([[cast(tok) for tok in row] for row in rows])
    except ValueError as exc:
        raise FieldFormatError(f"bad {kind} row: {exc}") from exc
    if arr.ndim != 2 or arr.shape[1] != width:
        raise FieldFormatError(f"{kind} rows must have {width} columns")
    return arr


def load_field(path, format: str = "auto") -> BivariateField:
    """Load a field from a native or grid text file.

    format='auto' dispatches on the header keyword.
    """
    path = Path(path)
    lines = _content_lines(path)
    header = lines[0]
    keyword = header[0]
    if format == "auto":
        format = {"bvf2": "native", "grid": "grid"}.get(keyword, keyword)
    if format == "native":
        if keyword != "bvf2" or len(header) != 3:
            raise FieldFormatError(f"{path}: expected header 'bvf2 <nv> <nt>'")
        try:
            nv, nt = int(header[1]), int(header[2])
        except ValueError as exc:
            raise FieldFormatError(f"{path}: bad counts in header") from exc
        if len(lines) != 1 + nv + nt:
            raise FieldFormatError(
                f"{path}: expected {nv}+{nt} data lines, found {len(lines) - 1}"
            )
        vv = _parse_rows(lines[1 : 1 + nv], 4, "vertex", float)
        tris = _parse_rows(lines[1 + nv :], 3, "triangle", int)
        return BivariateField(vv[:, 0:2], vv[:, 2:4], tris)
    if format == "grid":
        if keyword != "grid" or len(header) != 7:
            raise FieldFormatError(
                f"{path}: expected header 'grid <nx> <ny> <x0> <y0> <dx> <dy>'"
            )
        try:
            nx, ny = int(header[1]), int(header[2])
            x0, y0, dx, dy = (float(tok) for tok in header[3:7])
        except ValueError as exc:
            raise FieldFormatError(f"{path}: bad header numbers") from exc
        if nx < 2 or ny < 2:
            raise FieldValidationError(f"{path}: grid needs nx, ny >= 2")
        if len(lines) != 1 + nx * ny:
            raise FieldFormatError(
                f"{path}: expected {nx * ny} value lines, found {len(lines) - 1}"
            )
        uv = _parse_rows(lines[1:], 2, "value", float)
        xs = x0 + dx * np.arange(nx)
        ys = y0 + dy * np.arange(ny)
        gx, gy = np.meshgrid(xs, ys)
        vertices = np.stack([gx.ravel(), gy.ravel()], axis=1)
        return BivariateField(vertices, uv, triangulate_grid(nx, ny))
    raise FieldFormatError(f"{path}: unknown format {format!r}")


def save_field(field: BivariateField, path) -> None:
    """Write a field in the native text format at full double precision."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"bvf2 {field.n_vertices} {field.n_cells}\n")
        for (x, y), (u, v) in zip(field.vertices, field.values):
            fh.write(f"{x:.17g} {y:.17g} {u:.17g} {v:.17g}\n")
        for i, j, k in field.triangles:
            fh.write(f"{i} {j} {k}\n")
