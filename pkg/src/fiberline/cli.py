"""Command-line entry point: dataset/polygon generation, one-shot extraction,
the benchmark harness, and the HTTP service.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import socket
import sys
from pathlib import Path

from . import bench as bench_mod
from .bvh import gen_polygon, load_polygon, save_polygon
from .field import gen_double_gyre, load_field, save_field
from .pipeline import field_equivalence, run_query
from .traversal import SearchConfig

_RECURSION_CHOICES = ("area", "height", "cells-first", "edges-first")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fiberline",
        description="Fiber-line extraction toolkit for bivariate 2D fields.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate datasets and polygons")
    gen_sub = gen.add_subparsers(dest="what", required=True)

    dg = gen_sub.add_parser("doublegyre", help="double-gyre velocity field")
    dg.add_argument("--nx", type=int, default=361)
    dg.add_argument("--ny", type=int, default=91)
    dg.add_argument("--t", type=float, default=0.0)
    dg.add_argument("--amplitude", type=float, default=0.1)
    dg.add_argument("--eps", type=float, default=0.25)
    dg.add_argument("--omega", type=float, default=math.pi / 5.0)
    dg.add_argument("--out", required=True)

    pg = gen_sub.add_parser("polygon", help="control polygon")
    pg.add_argument("--shape", choices=("ngon", "star", "circle_approx"), default="ngon")
    pg.add_argument("--edges", type=int, required=True)
    pg.add_argument("--center", type=float, nargs=2, default=(0.0, 0.0))
    pg.add_argument("--radius", type=float, default=1.0)
    pg.add_argument("--inner-radius", type=float, default=None)
    pg.add_argument("--out", required=True)

    ex = sub.add_parser("extract", help="extract fiber lines for one polygon")
    ex.add_argument("--field", required=True, help="mesh file (native or grid)")
    ex.add_argument("--polygon", required=True, help="polygon file")
    ex.add_argument(
        "--method", choices=("naive", "single", "dual", "hybrid"), default="hybrid"
    )
    ex.add_argument("--recursion", choices=_RECURSION_CHOICES, default="area")
    ex.add_argument("--leaf-cells", type=int, default=None)
    ex.add_argument("--leaf-edges", type=int, default=None)
    ex.add_argument(
        "--equivalence",
        action="store_true",
        help="treat the polygon as a domain polyline and extract the preimage of its image",
    )
    ex.add_argument("--out", required=True, help="fiber-line CSV path")
    ex.add_argument("--stats-out", default=None, help="optional stats JSON path")

    be = sub.add_parser("bench", help="run an evaluation case")
    be.add_argument("--case", required=True, choices=("1", "2", "3"))
    be.add_argument("--field", default=None, help="mesh file; default: generated double gyre")
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--placements", type=int, default=None, help="cases 1 and 3")
    be.add_argument("--isovalues", type=int, default=101, help="case 2")
    be.add_argument("--component", choices=("u", "v"), default="u", help="case 2")
    be.add_argument(
        "--polygon-edges",
        default=None,
        help="case 1: comma-separated edge counts (default: the standard nine)",
    )
    be.add_argument("--out", required=True, help="report CSV path")

    sv = sub.add_parser("serve", help="run the HTTP service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8040)
    sv.add_argument(
        "--data",
        default=None,
        help="directory of mesh files (default: $FIBERLINE_DATA)",
    )
    return parser


def _cmd_gen(args) -> int:
    if args.what == "doublegyre":
        field = gen_double_gyre(
            args.nx, args.ny, args.t, args.amplitude, args.eps, args.omega
        )
        save_field(field, args.out)
        print(f"wrote {args.out}: {field.n_vertices} vertices, {field.n_cells} cells")
    else:
        polygon = gen_polygon(
            args.shape, args.edges, tuple(args.center), args.radius, args.inner_radius
        )
        save_polygon(polygon, args.out)
        print(f"wrote {args.out}: {polygon.n_edges} edges")
    return 0


def _cmd_extract(args) -> int:
    field = load_field(args.field)
    polygon = load_polygon(args.polygon)
    config = SearchConfig(
        method=args.method,
        leaf_cells=args.leaf_cells,
        leaf_edges=args.leaf_edges,
        recursion=args.recursion.replace("-", "_"),
    )
    if args.equivalence:
        result = field_equivalence(field, polygon, config)
    else:
        result = run_query(field, polygon, config)
    result.fiber_lines.to_csv(args.out)
    stats = result.stats.to_dict()
    for key, value in stats.items():
        print(f"{key}={value}")
    print(f"segments={len(result.fiber_lines)}")
    if args.stats_out:
        with open(args.stats_out, "w", encoding="utf-8") as fh:
            json.dump(stats, fh, indent=2)
    return 0


def _cmd_bench(args) -> int:
    if args.field:
        field = load_field(args.field)
        dataset_id = Path(args.field).stem
    else:
        field = gen_double_gyre(128, 64)
        dataset_id = "double-gyre-128x64"
    if args.case == "1":
        if args.polygon_edges:
            try:
                sizes = [int(tok) for tok in args.polygon_edges.split(",")]
            except ValueError:
                print("error: --polygon-edges must be comma-separated integers",
                      file=sys.stderr)
                return 2
            box = field.codomain_bounds
            r = 0.25 * min(box.max[0] - box.min[0], box.max[1] - box.min[1])
            polygons = [gen_polygon("ngon", n, (0.0, 0.0), max(r, 1e-6)) for n in sizes]
        else:
            polygons = bench_mod.default_polygons(field)
        run = bench_mod.run_case1(
            field,
            polygons,
            args.placements if args.placements is not None else 20,
            args.seed,
            dataset_id=dataset_id,
        )
    elif args.case == "2":
        isovalues = bench_mod.make_isovalues(field, args.component, args.isovalues)
        run = bench_mod.run_case2(
            field, isovalues, args.component, dataset_id=dataset_id
        )
    else:
        run = bench_mod.run_case3(
            field,
            args.placements if args.placements is not None else 101,
            args.seed,
            dataset_id=dataset_id,
        )
    summary = bench_mod.report(run, args.out)
    print(f"wrote {args.out}: {len(run.rows)} trial rows, {len(summary)} summary rows")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    data_dir = args.data or os.environ.get("FIBERLINE_DATA")
    if not data_dir:
        print("error: --data or $FIBERLINE_DATA required", file=sys.stderr)
        return 2
    app = create_app(data_dir=data_dir)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((args.host, args.port))
    except OSError as exc:
        sock.close()
        print(f"error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 1
    host, port = sock.getsockname()[:2]
    print(f"serving on http://{host}:{port}", flush=True)
    config = uvicorn.Config(app, log_level="warning")
    uvicorn.Server(config).run(sockets=[sock])
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "extract":
            return _cmd_extract(args)
        if args.command == "bench":
            return _cmd_bench(args)
        return _cmd_serve(args)
    except (OSError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
