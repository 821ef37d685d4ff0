import base64

import numpy as np
import pytest
from fastapi.testclient import TestClient

from fiberline import BivariateField, identity_field, gen_double_gyre, save_field
from fiberline.service import create_app

SQUARE = {
    "vertices": [[0.3, 0.3], [0.7, 0.3], [0.7, 0.7], [0.3, 0.7]],
    "closed": True,
}


@pytest.fixture(scope="module")
def client():
    app = create_app(
        datasets={
            "identity": identity_field(9, 9),
            "gyre": gen_double_gyre(21, 11),
        }
    )
    return TestClient(app)


def test_list_datasets(client):
    r = client.get("/datasets")
    assert r.status_code == 200
    data = r.json()
    assert [d["id"] for d in data] == ["gyre", "identity"]  # stable id order
    ident = data[1]
    assert ident["cells"] == 128
    assert ident["vertices"] == 81
    assert ident["codomain_box"] == {"min": [0.0, 0.0], "max": [1.0, 1.0]}


def test_list_datasets_empty(tmp_path):
    app = create_app(data_dir=tmp_path)
    assert TestClient(app).get("/datasets").json() == []


def test_datasets_from_directory(tmp_path):
    save_field(identity_field(3, 3), tmp_path / "a.bvf2")
    save_field(gen_double_gyre(5, 4), tmp_path / "b.bvf2")
    (tmp_path / "notes.txt").write_text("ignored")
    app = create_app(data_dir=tmp_path)
    r = TestClient(app).get("/datasets")
    assert [d["id"] for d in r.json()] == ["a", "b"]


def test_density_deterministic_and_bounded(client):
    r1 = client.get("/datasets/identity/density", params={"res": 16})
    r2 = client.get("/datasets/identity/density", params={"res": 16})
    assert r1.status_code == 200
    assert r1.json()["pixels"] == r2.json()["pixels"]
    raster = np.frombuffer(
        base64.b64decode(r1.json()["pixels"]), dtype=np.uint8
    ).reshape(16, 16)
    assert raster.max() == 255
    assert raster.min() >= 0


def test_density_single_cell_coverage():
    field = BivariateField(
        [[0, 0], [1, 0], [0, 1], [1, 1]],
        [[0, 0], [0.5, 0], [0, 0.5], [0.5, 0.5]],
        [[0, 1, 3], [0, 3, 2]],
    )
    app = create_app(datasets={"two": field})
    r = TestClient(app).get("/datasets/two/density", params={"res": 16})
    raster = np.frombuffer(
        base64.b64decode(r.json()["pixels"]), dtype=np.uint8
    ).reshape(16, 16)
    assert (raster > 0).all()  # both cell-image boxes span the whole codomain


def test_density_errors(client):
    assert client.get("/datasets/missing/density").status_code == 404
    assert client.get("/datasets/identity/density", params={"res": 8}).status_code == 400
    assert (
        client.get("/datasets/identity/density", params={"res": 4096}).status_code
        == 400
    )
    body = client.get("/datasets/missing/density").json()
    assert "error" in body


def test_extract_identity_square(client):
    r = client.post("/datasets/identity/extract", json={"polygon": SQUARE})
    assert r.status_code == 200
    body = r.json()
    assert body["polygon_edges"] == 4
    segs = body["segments"]
    total = sum(
        np.hypot(s["q"][0] - s["p"][0], s["q"][1] - s["p"][1]) for s in segs
    )
    assert total == pytest.approx(1.6, abs=1e-9)
    stats = body["stats"]
    assert 0 < stats["tpap"] <= 1
    assert stats["nit_total"] == stats["nit_box_box"] + stats["nit_seg_box"]
    assert stats["true_positives"] == len(segs)


def test_extract_methods_agree(client):
    bodies = {}
    for method in ("naive", "single", "dual", "hybrid"):
        r = client.post(
            "/datasets/gyre/extract",
            json={"polygon": {"vertices": [[0.0, -0.1], [0.25, 0.0], [0.0, 0.1]], "closed": True}, "method": method},
        )
        assert r.status_code == 200
        bodies[method] = r.json()
    base = [(s["cell_id"], s["edge_id"], s["p"], s["q"]) for s in bodies["naive"]["segments"]]
    for m in ("single", "dual", "hybrid"):
        other = [(s["cell_id"], s["edge_id"], s["p"], s["q"]) for s in bodies[m]["segments"]]
        assert other == base


def test_extract_same_request_stable(client):
    req = {"polygon": SQUARE, "method": "hybrid"}
    a = client.post("/datasets/identity/extract", json=req).json()
    b = client.post("/datasets/identity/extract", json=req).json()
    assert a["segments"] == b["segments"]


def test_extract_errors(client):
    r = client.post("/datasets/nope/extract", json={"polygon": SQUARE})
    assert r.status_code == 404
    degenerate = {"vertices": [[0.5, 0.5], [0.5, 0.5]], "closed": False}
    r = client.post("/datasets/identity/extract", json={"polygon": degenerate})
    assert r.status_code == 422
    assert "error" in r.json()
    r = client.post("/datasets/identity/extract", json={})
    assert r.status_code == 422
    r = client.post("/datasets/identity/extract", json={"polygon": SQUARE, "method": "warp"})
    assert r.status_code == 422
    r = client.post("/datasets/identity/extract", json={"equivalence": True})
    assert r.status_code == 422


def test_extract_equivalence_mode(client):
    req = {
        "equivalence": True,
        "domain_polygon": {
            "vertices": [[0.3, 0.3], [0.6, 0.3], [0.6, 0.6], [0.3, 0.6]],
            "closed": True,
        },
    }
    r = client.post("/datasets/identity/extract", json=req)
    assert r.status_code == 200
    body = r.json()
    assert body["image_polyline"]
    assert len(body["segments"]) > 0
    # identity: every fiber endpoint lies on the square boundary
    for s in body["segments"]:
        for pt in (s["p"], s["q"]):
            on = (
                abs(pt[0] - 0.3) < 1e-9 or abs(pt[0] - 0.6) < 1e-9
                or abs(pt[1] - 0.3) < 1e-9 or abs(pt[1] - 0.6) < 1e-9
            )
            assert on


def test_isoline_endpoint(client):
    r = client.post(
        "/datasets/identity/isoline", json={"component": "u", "isovalue": 0.5}
    )
    assert r.status_code == 200
    edges = r.json()["edges"]
    assert len(edges) == 8
    for e in edges:
        assert e[0][0] == pytest.approx(0.5, abs=1e-12)
    r = client.post(
        "/datasets/identity/isoline", json={"component": "u", "isovalue": 9.0}
    )
    assert r.json()["edges"] == []
    r = client.post("/datasets/gone/isoline", json={"component": "u", "isovalue": 0.0})
    assert r.status_code == 404


def test_concurrent_requests_consistent(client):
    # the service never mutates datasets: stress identical concurrent queries
    import concurrent.futures

    req = {"polygon": SQUARE, "method": "hybrid"}

    def call(_):
        return client.post("/datasets/identity/extract", json=req).json()["segments"]

    with concurrent.futures.ThreadPoolExecutor(8) as pool:
        results = list(pool.map(call, range(16)))
    assert all(r == results[0] for r in results)
