import numpy as np
import pytest

from fiberline import (
    ControlPolygon,
    SearchConfig,
    build_cells,
    build_domain_cells,
    field_equivalence,
    fiber_round_trip_max_distance,
    fiber_sets_equal,
    gen_double_gyre,
    gen_polygon,
    identity_field,
    image_of_domain_polyline,
    isoline_fscp,
    run_query,
)
from fiberline.field import BivariateField, evaluate_in_cells
from fiberline.geometry import points_segment_distance
from helpers import FIELD_KINDS, make_field, random_polygon

METHOD_CONFIGS = [
    SearchConfig(method="naive"),
    SearchConfig(method="single", leaf_cells=8),
    SearchConfig(method="single", leaf_cells=1),
    SearchConfig(method="dual"),
    SearchConfig(method="hybrid"),
    SearchConfig(method="hybrid", recursion="height"),
    SearchConfig(method="dual", recursion="edges_first"),
]


def test_method_independence_randomized():
    rng = np.random.default_rng(99)
    for trial in range(12):
        f = make_field(FIELD_KINDS[trial % len(FIELD_KINDS)], int(rng.integers(20, 600)), rng)
        poly = random_polygon(f, int(rng.integers(3, 64)), rng)
        results = [run_query(f, poly, cfg) for cfg in METHOD_CONFIGS]
        base = results[0].fiber_lines
        for r in results[1:]:
            assert fiber_sets_equal(base, r.fiber_lines)
        assert fiber_round_trip_max_distance(f, base, poly, 4) <= 1e-9


def test_run_query_reuses_bvh():
    f = gen_double_gyre(21, 11)
    poly = gen_polygon("ngon", 16, (0.0, 0.0), 0.2)
    tc = build_cells(f, 1)
    r = run_query(f, poly, SearchConfig(method="hybrid"), reuse_cells_bvh=tc)
    assert r.stats.build_cells_ms == 0.0
    r2 = run_query(f, poly, SearchConfig(method="hybrid"))
    assert r2.stats.build_cells_ms > 0.0
    assert fiber_sets_equal(r.fiber_lines, r2.fiber_lines)


def test_run_query_empty_overlap():
    f = identity_field(9, 9)
    poly = gen_polygon("ngon", 8, (40.0, 40.0), 1.0)
    r = run_query(f, poly, SearchConfig(method="hybrid"))
    assert len(r.fiber_lines) == 0
    assert r.stats.search_ms > 0.0
    assert r.stats.extract_ms < 5.0
    assert r.stats.tpap == 1.0  # no candidates


def test_run_query_rejects_edgeless_polygon():
    f = identity_field(5, 5)
    poly = ControlPolygon.from_vertices([[1.0, 1.0], [1.0, 1.0]], closed=False)
    with pytest.raises(ValueError):
        run_query(f, poly, SearchConfig())


def test_timing_decomposition():
    f = gen_double_gyre(41, 21)
    poly = gen_polygon("ngon", 126, (0.0, 0.0), 0.15)
    for cfg in METHOD_CONFIGS[:5]:
        s = run_query(f, poly, cfg).stats
        parts = s.build_cells_ms + s.build_edges_ms + s.search_ms + s.extract_ms
        assert s.total_ms >= parts - 1e-6
        assert min(s.build_cells_ms, s.build_edges_ms, s.search_ms, s.extract_ms) >= 0.0


def test_query_result_invariant():
    rng = np.random.default_rng(44)
    f = make_field("doublegyre", 300, rng)
    poly = random_polygon(f, 38, rng)
    r = run_query(f, poly, SearchConfig(method="hybrid"))
    pairs = set(zip(r.fiber_lines.cell_ids.tolist(), r.fiber_lines.edge_ids.tolist()))
    assert r.stats.true_positives == len(pairs) == len(r.fiber_lines)


def test_isoline_fscp_identity():
    f = identity_field(9, 9)
    p = isoline_fscp(f, "u", 0.5)
    assert p is not None
    assert not p.closed and p.vertices is None
    # all edges lie on the codomain line u = 0.5
    assert np.allclose(p.edges[:, :, 0], 0.5, atol=1e-12)
    assert isoline_fscp(f, "u", 2.0) is None


def test_isoline_fscp_round_trip():
    f = gen_double_gyre(41, 21)
    p = isoline_fscp(f, "u", 0.0)
    assert p is not None
    assert np.abs(p.edges[:, :, 0]).max() <= 1e-9
    # chaining preserved every projected segment
    from fiberline.extraction import extract_isoline_arrays

    cells, _, _ = extract_isoline_arrays(f, "u", 0.0)
    assert p.n_edges == len(cells)
    # chained edges connect: each interior junction shared with the next edge
    joins = np.hypot(*(p.edges[1:, 0] - p.edges[:-1, 1]).T)
    assert np.count_nonzero(joins > 1e-9) <= max(1, p.n_edges // 10)


def test_image_of_domain_polyline_identity():
    f = identity_field(9, 9)
    dp = ControlPolygon.from_vertices([[0.2, 0.2], [0.8, 0.5]], closed=False)
    img = image_of_domain_polyline(f, dp)
    assert len(img) > 0
    # identity: image equals the clipped input; endpoints chain continuously
    total = np.hypot(*(img.b - img.a).T).sum()
    assert total == pytest.approx(np.hypot(0.6, 0.3), abs=1e-9)
    gaps = np.hypot(*(img.a[1:] - img.b[:-1]).T)
    assert gaps.max() <= 1e-9


def test_image_single_cell_segment():
    f = BivariateField(
        [[0, 0], [1, 0], [0, 1]], [[2, 2], [3, 2], [2, 4]], [[0, 1, 2]]
    )
    dp = ControlPolygon.from_vertices([[0.1, 0.1], [0.3, 0.2]], closed=False)
    img = image_of_domain_polyline(f, dp)
    assert len(img) == 1
    u, v = evaluate_in_cells(f, np.array([0]), np.array([0.1]), np.array([0.1]))
    assert img.a[0] == pytest.approx([u[0], v[0]])


def test_image_outside_mesh_empty():
    f = identity_field(5, 5)
    dp = ControlPolygon.from_vertices([[5.0, 5.0], [6.0, 6.0]], closed=False)
    img = image_of_domain_polyline(f, dp)
    assert len(img) == 0


def test_image_continuity_across_cells():
    rng = np.random.default_rng(13)
    f = make_field("smooth", 200, rng)
    for _ in range(5):
        a = rng.uniform(0.05, 0.95, 2)
        b = rng.uniform(0.05, 0.95, 2)
        dp = ControlPolygon.from_vertices([a, b], closed=False)
        img = image_of_domain_polyline(f, dp)
        if len(img) < 2:
            continue
        gaps = np.hypot(*(img.a[1:] - img.b[:-1]).T)
        assert gaps.max() <= 1e-9


def test_field_equivalence_identity_square():
    f = identity_field(17, 17)
    # square deliberately off the mesh lattice so no edge rides a cell boundary
    lo, hi = 0.26, 0.615
    dp = ControlPolygon.from_vertices(
        [[lo, lo], [hi, lo], [hi, hi], [lo, hi]], closed=True
    )
    res = field_equivalence(f, dp)
    # injective field: the preimage of the image is the square itself
    assert res.fiber_lines.total_length() == pytest.approx(4 * (hi - lo), abs=1e-9)
    mids = 0.5 * (res.fiber_lines.p + res.fiber_lines.q)
    on_boundary = (
        np.isclose(mids[:, 0], lo, atol=1e-9) | np.isclose(mids[:, 0], hi, atol=1e-9)
        | np.isclose(mids[:, 1], lo, atol=1e-9) | np.isclose(mids[:, 1], hi, atol=1e-9)
    )
    assert on_boundary.all()


def test_field_equivalence_round_trip():
    rng = np.random.default_rng(23)
    f = make_field("doublegyre", 500, rng)
    box = f.domain_bounds
    span = np.array(box.max) - np.array(box.min)
    dp = gen_polygon(
        "ngon", 12, tuple(np.array(box.min) + 0.5 * span), 0.15 * span.min()
    )
    res = field_equivalence(f, dp, SearchConfig(method="hybrid"))
    fl = res.fiber_lines
    assert len(fl) > 0
    img = res.image
    for t in (0.0, 0.5, 1.0):
        x = fl.p + t * (fl.q - fl.p)
        u, v = evaluate_in_cells(f, fl.cell_ids, x[:, 0], x[:, 1], check=False)
        d = np.full(len(fl), np.inf)
        for k in range(len(img)):
            d = np.minimum(
                d,
                points_segment_distance(
                    u, v, img.a[k, 0], img.a[k, 1], img.b[k, 0], img.b[k, 1]
                ),
            )
        assert d.max() <= 1e-9


def test_field_equivalence_constant_field():
    f0 = identity_field(5, 5)
    f = BivariateField(f0.vertices, np.full_like(f0.values, 2.0), f0.triangles)
    dp = ControlPolygon.from_vertices([[0.2, 0.2], [0.8, 0.8]], closed=False)
    res = field_equivalence(f, dp)
    # the image degenerates to a point: no codomain edges survive
    assert len(res.fiber_lines) == 0


def test_field_equivalence_stats_aggregate_phases():
    f = gen_double_gyre(21, 11)
    dp = gen_polygon("ngon", 8, (1.0, 0.5), 0.1)
    tc = build_cells(f, 1)
    dc = build_domain_cells(f, 1)
    res = field_equivalence(f, dp, reuse_cells_bvh=tc, reuse_domain_bvh=dc)
    s = res.stats
    assert s.build_cells_ms == 0.0
    assert s.total_ms >= s.build_edges_ms + s.search_ms + s.extract_ms - 1e-6
    assert s.true_positives == len(res.fiber_lines)
    assert res.image is not None and len(res.image) > 0
