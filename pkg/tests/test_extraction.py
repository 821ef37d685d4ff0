import numpy as np
import pytest

from fiberline import (
    BivariateField,
    ControlPolygon,
    Segment,
    extract_all,
    extract_isoline,
    extract_pair,
    gen_double_gyre,
    gen_polygon,
    identity_field,
    search_naive,
)
from fiberline.extraction import extract_isoline_arrays
from fiberline.field import evaluate_in_cells
from fiberline.geometry import edge_parameter, points_segment_distance
from helpers import make_field, random_polygon

UNIT_TRI = BivariateField(
    [[0, 0], [1, 0], [0, 1]], [[0, 0], [1, 0], [0, 1]], [[0, 1, 2]]
)


def test_extract_pair_identity_inside():
    seg = extract_pair(UNIT_TRI, 0, Segment((0.5, 0.0), (0.5, 0.5)))
    assert seg is not None
    assert seg.p == pytest.approx((0.5, 0.0))
    assert seg.q == pytest.approx((0.5, 0.5))


def test_extract_pair_truncated_by_triangle():
    seg = extract_pair(UNIT_TRI, 0, Segment((0.5, -1.0), (0.5, 2.0)))
    assert seg is not None
    ys = sorted((seg.p[1], seg.q[1]))
    assert seg.p[0] == pytest.approx(0.5) and seg.q[0] == pytest.approx(0.5)
    assert ys == pytest.approx([0.0, 0.5])


def test_extract_pair_misses():
    assert extract_pair(UNIT_TRI, 0, Segment((2.0, 0.0), (2.0, 1.0))) is None
    # crossing interval outside the edge range: line hits, segment does not
    assert extract_pair(UNIT_TRI, 0, Segment((0.5, 2.0), (0.5, 3.0))) is None


def test_extract_pair_zero_length_edge_rejected():
    with pytest.raises(ValueError):
        extract_pair(UNIT_TRI, 0, Segment((0.5, 0.5), (0.5, 0.5)))


def test_extract_pair_round_trip_double_gyre():
    f = gen_double_gyre(41, 21)
    rng = np.random.default_rng(12)
    found = 0
    while found < 50:
        c = int(rng.integers(f.n_cells))
        tv = f.tri_values[c]
        center = tv.mean(axis=0)
        d = rng.normal(size=2)
        d /= np.hypot(*d)
        r = float(rng.uniform(0.01, 0.2))
        edge = Segment(tuple(center - r * d), tuple(center + r * d))
        seg = extract_pair(f, c, edge)
        if seg is None:
            continue
        found += 1
        for pt in (seg.p, seg.q):
            u, v = evaluate_in_cells(
                f, np.array([c]), np.array([pt[0]]), np.array([pt[1]]), check=False
            )
            dist = points_segment_distance(
                u, v,
                np.array([edge.a[0]]), np.array([edge.a[1]]),
                np.array([edge.b[0]]), np.array([edge.b[1]]),
            )
            assert dist[0] <= 1e-9
            t = edge_parameter((float(u[0]), float(v[0])), edge)
            assert -1e-9 <= t <= 1 + 1e-9


def test_extract_pair_edge_reversal_symmetry():
    f = make_field("smooth", 200, np.random.default_rng(3))
    rng = np.random.default_rng(4)
    checked = 0
    while checked < 40:
        c = int(rng.integers(f.n_cells))
        tv = f.tri_values[c]
        a = tv.mean(axis=0) + rng.normal(size=2) * 0.1
        b = tv.mean(axis=0) + rng.normal(size=2) * 0.1
        if np.allclose(a, b):
            continue
        fwd = extract_pair(f, c, Segment(tuple(a), tuple(b)))
        rev = extract_pair(f, c, Segment(tuple(b), tuple(a)))
        assert (fwd is None) == (rev is None)
        if fwd is None:
            continue
        checked += 1
        direct = max(
            abs(fwd.p[0] - rev.p[0]), abs(fwd.p[1] - rev.p[1]),
            abs(fwd.q[0] - rev.q[0]), abs(fwd.q[1] - rev.q[1]),
        )
        swapped = max(
            abs(fwd.p[0] - rev.q[0]), abs(fwd.p[1] - rev.q[1]),
            abs(fwd.q[0] - rev.p[0]), abs(fwd.q[1] - rev.p[1]),
        )
        assert min(direct, swapped) <= 1e-12


def test_extract_pair_clipping_monotone():
    f = make_field("smooth", 150, np.random.default_rng(6))
    rng = np.random.default_rng(7)
    grown = 0
    while grown < 30:
        c = int(rng.integers(f.n_cells))
        center = f.tri_values[c].mean(axis=0)
        d = rng.normal(size=2)
        d /= np.hypot(*d)
        r = float(rng.uniform(0.005, 0.05))
        small = extract_pair(f, c, Segment(tuple(center - r * d), tuple(center + r * d)))
        big = extract_pair(
            f, c, Segment(tuple(center - 3 * r * d), tuple(center + 3 * r * d))
        )
        if small is None:
            continue
        grown += 1
        assert big is not None
        ls = np.hypot(small.q[0] - small.p[0], small.q[1] - small.p[1])
        lb = np.hypot(big.q[0] - big.p[0], big.q[1] - big.p[1])
        assert lb >= ls - 1e-12


def test_degenerate_cell_image_emits_nothing():
    f0 = identity_field(3, 3)
    const = BivariateField(f0.vertices, np.full_like(f0.values, 1.0), f0.triangles)
    assert extract_pair(const, 0, Segment((0.0, 1.0), (2.0, 1.0))) is None


def test_extract_all_identity_square():
    f = identity_field(9, 9)
    poly = ControlPolygon.from_vertices(
        [[0.25, 0.25], [0.75, 0.25], [0.75, 0.75], [0.25, 0.75]], closed=True
    )
    fibers = extract_all(f, poly, search_naive(f, poly))
    assert fibers.total_length() == pytest.approx(4 * 0.5, abs=1e-9)
    # provenance pairs unique
    pairs = list(zip(fibers.cell_ids.tolist(), fibers.edge_ids.tolist()))
    assert len(pairs) == len(set(pairs))
    assert fibers.stats.true_positives == len(fibers)


def test_extract_all_empty_candidates():
    f = identity_field(5, 5)
    poly = gen_polygon("ngon", 4, (0.5, 0.5), 0.25)
    fibers = extract_all(f, poly, [])
    assert len(fibers) == 0
    assert fibers.stats.true_positives == 0
    assert fibers.stats.candidates == 0


def test_extract_all_order_and_duplicates_irrelevant():
    f = make_field("doublegyre", 128, np.random.default_rng(8))
    poly = random_polygon(f, 16, np.random.default_rng(9))
    all_pairs = [(c, e) for c in range(f.n_cells) for e in range(poly.n_edges)]
    a = extract_all(f, poly, all_pairs)
    rng = np.random.default_rng(10)
    shuffled = list(all_pairs)
    rng.shuffle(shuffled)
    b = extract_all(f, poly, shuffled + shuffled[:100])
    assert np.array_equal(a.cell_ids, b.cell_ids)
    assert np.array_equal(a.edge_ids, b.edge_ids)
    assert np.array_equal(a.p, b.p)
    # lazy all-pairs path agrees with the materialized path exactly
    c = extract_all(f, poly, search_naive(f, poly))
    assert np.array_equal(a.cell_ids, c.cell_ids)
    assert np.array_equal(a.p, c.p)
    assert np.array_equal(a.q, c.q)
    assert a.stats.degenerate_cells == c.stats.degenerate_cells


def test_interior_samples_stay_on_edge():
    f = gen_double_gyre(31, 16)
    poly = gen_polygon("star", 38, (0.0, 0.05), 0.15, inner_radius=0.06)
    fibers = extract_all(f, poly, search_naive(f, poly))
    assert len(fibers) > 0
    e = poly.edges[fibers.edge_ids]
    for t in np.linspace(0, 1, 18):
        x = fibers.p + t * (fibers.q - fibers.p)
        u, v = evaluate_in_cells(f, fibers.cell_ids, x[:, 0], x[:, 1], check=False)
        dist = points_segment_distance(
            u, v, e[:, 0, 0], e[:, 0, 1], e[:, 1, 0], e[:, 1, 1]
        )
        assert dist.max() <= 1e-9


def test_fiber_csv_output(tmp_path):
    f = identity_field(5, 5)
    poly = gen_polygon("ngon", 4, (0.5, 0.5), 0.25)
    fibers = extract_all(f, poly, search_naive(f, poly))
    path = tmp_path / "fibers.csv"
    fibers.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "cell_id,edge_id,px,py,qx,qy"
    assert len(lines) == 1 + len(fibers)
    cols = lines[1].split(",")
    assert float(cols[2]) == fibers.p[0, 0]  # 17 significant digits round-trip


def test_isoline_identity_vertical_line():
    f = identity_field(9, 9)
    segs = extract_isoline(f, "u", 0.5)
    total = sum(np.hypot(s.q[0] - s.p[0], s.q[1] - s.p[1]) for s in segs)
    assert total == pytest.approx(1.0, abs=1e-9)
    for s in segs:
        assert s.p[0] == pytest.approx(0.5, abs=1e-12)
        assert s.q[0] == pytest.approx(0.5, abs=1e-12)
        assert s.edge_id == -1


def test_isoline_outside_range_empty():
    f = identity_field(5, 5)
    assert extract_isoline(f, "u", -0.5) == []
    assert extract_isoline(f, "v", 1.5) == []


def test_isoline_round_trip_double_gyre():
    f = gen_double_gyre(41, 21)
    cells, p, q = extract_isoline_arrays(f, "u", 0.0)
    assert len(cells) > 0
    for pts in (p, q):
        u, _ = evaluate_in_cells(f, cells, pts[:, 0], pts[:, 1], check=False)
        assert np.abs(u).max() <= 1e-9
