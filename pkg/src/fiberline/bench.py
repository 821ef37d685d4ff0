"""Benchmark harness for the three evaluation cases:

I   prefabricated control polygons placed at random codomain positions,
II  control polygons generated by projecting isolines into the codomain,
III field equivalence (image of a moved domain polygon, then its preimage).

Placements derive from ``numpy.random.default_rng`` seeded per trial with
(seed, trial indices), so runs are bitwise reproducible.  Results serialize to
CSV with one row per trial plus a ``#summary``-prefixed block of per-config
means; summary lines are exact recomputations over the rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .bvh import Bvh, ControlPolygon, build_cells, build_domain_cells, gen_polygon
from .field import BivariateField
from .pipeline import field_equivalence, fiber_sets_equal, isoline_fscp, run_query
from .traversal import QueryStats, SearchConfig

STANDARD_POLYGON_EDGE_COUNTS = (3, 4, 8, 16, 38, 60, 126, 232, 2997)

CSV_COLUMNS = (
    "case",
    "dataset",
    "method",
    "recursion",
    "leaf_cells",
    "leaf_edges",
    "polygon_edges",
    "placement_index",
    "nit_box_box",
    "nit_seg_box",
    "candidates",
    "true_positives",
    "tpap",
    "build_cells_ms",
    "build_edges_ms",
    "search_ms",
    "extract_ms",
    "total_ms",
)
TIMING_COLUMNS = (
    "build_cells_ms",
    "build_edges_ms",
    "search_ms",
    "extract_ms",
    "total_ms",
)
_MEAN_COLUMNS = CSV_COLUMNS[8:]


def default_configs() -> list[SearchConfig]:
    """One configuration per method at its customary leaf sizes."""
    return [
        SearchConfig(method="naive"),
        SearchConfig(method="single", leaf_cells=8),
        SearchConfig(method="dual", leaf_cells=1, leaf_edges=1),
        SearchConfig(method="hybrid", leaf_cells=1, leaf_edges=1),
    ]


def default_polygons(field: BivariateField) -> list[ControlPolygon]:
    """Regular polygons of the standard edge counts, sized to the codomain."""
    box = field.codomain_bounds
    r = 0.25 * min(box.max[0] - box.min[0], box.max[1] - box.min[1])
    c = (0.5 * (box.min[0] + box.max[0]), 0.5 * (box.min[1] + box.max[1]))
    return [gen_polygon("ngon", n, c, max(r, 1e-6)) for n in STANDARD_POLYGON_EDGE_COUNTS]


def make_isovalues(field: BivariateField, component: str, count: int) -> np.ndarray:
    """Uniform isovalue grid over [min, max] of the component, ends included."""
    comp = {"u": 0, "v": 1}[component]
    vals = field.values[:, comp]
    return np.linspace(float(vals.min()), float(vals.max()), count)


@dataclass
class BenchRun:
    case: str
    dataset: str
    seed: int | None
    configs: list[SearchConfig]
    rows: list[dict] = dc_field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)


def _row(
    case: str,
    dataset: str,
    config: SearchConfig,
    polygon_edges: int,
    placement_index: int,
    stats: QueryStats,
) -> dict:
    return {
        "case": case,
        "dataset": dataset,
        "method": config.method,
        "recursion": config.recursion,
        "leaf_cells": config.resolved_leaf_cells,
        "leaf_edges": config.resolved_leaf_edges,
        "polygon_edges": polygon_edges,
        "placement_index": placement_index,
        "nit_box_box": stats.nit_box_box,
        "nit_seg_box": stats.nit_seg_box,
        "candidates": stats.candidates,
        "true_positives": stats.true_positives,
        "tpap": stats.tpap,
        "build_cells_ms": stats.build_cells_ms,
        "build_edges_ms": stats.build_edges_ms,
        "search_ms": stats.search_ms,
        "extract_ms": stats.extract_ms,
        "total_ms": stats.total_ms,
    }


def _cells_bvh_cache(field: BivariateField, configs: list[SearchConfig]) -> dict[int, Bvh]:
    """Cell BVHs shared across trials; built once so per-trial totals follow
    the only-the-polygon-changes interaction model."""
    cache: dict[int, Bvh] = {}
    for cfg in configs:
        if cfg.method != "naive":
            leaf = cfg.resolved_leaf_cells
            if leaf not in cache:
                cache[leaf] = build_cells(field, leaf)
    return cache


def _polygon_center(polygon: ControlPolygon) -> tuple[float, float]:
    box = polygon.bounds()
    return (0.5 * (box.min[0] + box.max[0]), 0.5 * (box.min[1] + box.max[1]))


def run_case1(
    field: BivariateField,
    polygons: list[ControlPolygon],
    placements: int,
    seed: int,
    configs: list[SearchConfig] | None = None,
    dataset_id: str = "dataset",
    verify: bool = False,
) -> BenchRun:
    """Place each polygon's center at uniform random points of the codomain
    root box and query with every configuration.

    With verify=True the fiber sets of all configurations are checked for
    set-equality within each placement.
    """
    if not polygons:
        raise ValueError("need at least one polygon")
    configs = default_configs() if configs is None else configs
    run = BenchRun("I", dataset_id, seed, configs)
    cache = _cells_bvh_cache(field, configs)
    box = field.codomain_bounds
    lo = np.array(box.min)
    span = np.array(box.max) - lo
    for pi, polygon in enumerate(polygons):
        center = _polygon_center(polygon)
        for k in range(placements):
            rng = np.random.default_rng((seed, pi, k))
            target = lo + rng.random(2) * span
            placed = polygon.translated(target[0] - center[0], target[1] - center[1])
            reference = None
            for cfg in configs:
                reuse = cache.get(cfg.resolved_leaf_cells) if cfg.method != "naive" else None
                result = run_query(field, placed, cfg, reuse_cells_bvh=reuse)
                run.rows.append(
                    _row("I", dataset_id, cfg, placed.n_edges, k, result.stats)
                )
                if verify:
                    if reference is None:
                        reference = result.fiber_lines
                    elif not fiber_sets_equal(reference, result.fiber_lines):
                        raise AssertionError(
                            f"method {cfg.method} disagrees at polygon {pi}, placement {k}"
                        )
    return run


def run_case2(
    field: BivariateField,
    isovalues,
    component: str = "u",
    configs: list[SearchConfig] | None = None,
    dataset_id: str = "dataset",
) -> BenchRun:
    """Project the isoline of each isovalue into the codomain and use it as
    the control polygon.  Empty isolines are recorded as skipped rows
    (polygon_edges = 0)."""
    isovalues = np.asarray(list(isovalues), dtype=float)
    if isovalues.size == 0:
        raise ValueError("need at least one isovalue")
    configs = default_configs() if configs is None else configs
    run = BenchRun("II", dataset_id, None, configs)
    cache = _cells_bvh_cache(field, configs)
    for k, iso in enumerate(isovalues):
        polygon = isoline_fscp(field, component, float(iso))
        for cfg in configs:
            if polygon is None:
                run.rows.append(_row("II", dataset_id, cfg, 0, k, QueryStats()))
                continue
            reuse = cache.get(cfg.resolved_leaf_cells) if cfg.method != "naive" else None
            result = run_query(field, polygon, cfg, reuse_cells_bvh=reuse)
            run.rows.append(
                _row("II", dataset_id, cfg, polygon.n_edges, k, result.stats)
            )
    return run


def run_case3(
    field: BivariateField,
    domain_positions: int,
    seed: int,
    base_polygon: ControlPolygon | None = None,
    configs: list[SearchConfig] | None = None,
    dataset_id: str = "dataset",
) -> BenchRun:
    """Field-equivalence trials: translate a base polygon (default: a 60-edge
    regular polygon scaled to a fifth of the domain) to random domain
    positions and extract the preimage of its image."""
    configs = default_configs() if configs is None else configs
    run = BenchRun("III", dataset_id, seed, configs)
    box = field.domain_bounds
    lo = np.array(box.min)
    span = np.array(box.max) - lo
    if base_polygon is None:
        base_polygon = gen_polygon("ngon", 60, (0.0, 0.0), 1.0)
    pb = base_polygon.bounds()
    extent = max(pb.max[0] - pb.min[0], pb.max[1] - pb.min[1])
    scale = 0.2 * min(span[0], span[1]) / max(extent, 1e-12)
    base = base_polygon.scaled(scale)
    center = _polygon_center(base)
    cache = _cells_bvh_cache(field, configs)
    domain_bvh = build_domain_cells(field, 1)
    for k in range(domain_positions):
        rng = np.random.default_rng((seed, k))
        target = lo + rng.random(2) * span
        placed = base.translated(target[0] - center[0], target[1] - center[1])
        for cfg in configs:
            reuse = cache.get(cfg.resolved_leaf_cells) if cfg.method != "naive" else None
            result = field_equivalence(
                field, placed, cfg, reuse_cells_bvh=reuse, reuse_domain_bvh=domain_bvh
            )
            run.rows.append(
                _row(
                    "III",
                    dataset_id,
                    cfg,
                    result.polygon_used.n_edges,
                    k,
                    result.stats,
                )
            )
    return run


def summarize(run: BenchRun) -> list[dict]:
    """Per-config means over non-skipped rows, in first-appearance order."""
    groups: dict[tuple, list[dict]] = {}
    order: list[tuple] = []
    for row in run.rows:
        if row["polygon_edges"] == 0:
            continue
        key = (row["method"], row["recursion"], row["leaf_cells"], row["leaf_edges"])
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    out = []
    for key in order:
        rows = groups[key]
        entry = {
            "case": run.case,
            "dataset": run.dataset,
            "method": key[0],
            "recursion": key[1],
            "leaf_cells": key[2],
            "leaf_edges": key[3],
            "trials": len(rows),
        }
        for col in _MEAN_COLUMNS:
            entry[col] = float(np.mean([r[col] for r in rows]))
        out.append(entry)
    return out


def report(run: BenchRun, out) -> list[dict]:
    """Write one CSV row per trial plus the ``#summary`` block; returns the
    summary entries."""
    summary = summarize(run)
    path = Path(out)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in run.rows:
            fh.write(",".join(_format(row[c]) for c in CSV_COLUMNS) + "\n")
        fh.write(
            "#summary,case,dataset,method,recursion,leaf_cells,leaf_edges,trials,"
            + ",".join(_MEAN_COLUMNS)
            + "\n"
        )
        for entry in summary:
            head = [
                entry["case"],
                entry["dataset"],
                entry["method"],
                entry["recursion"],
                entry["leaf_cells"],
                entry["leaf_edges"],
                entry["trials"],
            ]
            fh.write(
                "#summary,"
                + ",".join(_format(v) for v in head)
                + ","
                + ",".join(_format(entry[c]) for c in _MEAN_COLUMNS)
                + "\n"
            )
    return summary


def _format(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def load_report(path) -> tuple[list[dict], list[dict]]:
    """Parse a report back into (rows, summary) dicts of typed values."""
    rows: list[dict] = []
    summary: list[dict] = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    sum_cols = None
    for ln in lines[1:]:
        if ln.startswith("#summary,"):
            parts = ln.split(",")[1:]
            if parts[0] == "case":  # summary header line
                sum_cols = parts
                continue
            summary.append(_typed(dict(zip(sum_cols, parts))))
        else:
            rows.append(_typed(dict(zip(header, ln.split(",")))))
    return rows, summary


def _typed(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if k in ("case", "dataset", "method", "recursion"):
            out[k] = v
        else:
            try:
                out[k] = int(v)
            except ValueError:
                out[k] = float(v)  # summary rows hold means of count columns
    return out
