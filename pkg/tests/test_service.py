"""HTTP endpoints: payload shapes, error mapping, transport-stable rows."""
import json

import pytest
from fastapi.testclient import TestClient

from markovlab import __version__
from markovlab.graphs import cycle, graph_to_edgelist, path
from markovlab.service import create_app
from markovlab.spaces import (complete_graph_space, space_to_float,
                              space_to_json)


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def _space_doc(s) -> dict:
    return json.loads(space_to_json(s))


K2 = _space_doc(complete_graph_space(2))
K3F = _space_doc(space_to_float(complete_graph_space(3)))
C4_TEXT = graph_to_edgelist(cycle(4))


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok", "version": __version__}


def test_experiments_catalog(client):
    resp = client.get("/experiments")
    entries = resp.json()["experiments"]
    assert len(entries) == 6
    assert {"name", "description", "defaults"} <= set(entries[0])
    assert any(e["name"] == "sphere-k22" for e in entries)


def test_run_endpoint(client):
    resp = client.post("/experiments/run", json={
        "experiment": "cycle-spectral",
        "params": {"n": 4, "trials": 2, "k_max": 4}, "seed": 3})
    assert resp.status_code == 200
    doc = resp.json()
    assert doc["all_passed"] is True
    assert doc["header"] == ["trial", "n", "k", "spectral", "contraction",
                             "abs_diff"]
    assert len(doc["rows"]) == 4
    assert all(isinstance(cell, str) for row in doc["rows"] for cell in row)
    assert doc["assertions"][0]["pass"] is True


def test_run_endpoint_unknown_experiment(client):
    resp = client.post("/experiments/run", json={"experiment": "nope"})
    assert resp.status_code == 422
    assert "nope" in resp.json()["detail"]


def test_run_endpoint_rejects_huge_seed(client):
    resp = client.post("/experiments/run", json={
        "experiment": "cycle-spectral", "seed": 2**64})
    assert resp.status_code == 422  # pydantic range check


def test_density_rational(client):
    resp = client.post("/density", json={"graph": C4_TEXT, "space": K2})
    assert resp.status_code == 200
    assert resp.json() == {"t": "2", "width": 2, "mode": "rational"}


def test_density_float_and_normalized(client):
    resp = client.post("/density", json={
        "graph": C4_TEXT, "space": K3F, "normalized": True})
    doc = resp.json()
    assert doc["mode"] == "f64"
    assert doc["t"] == pytest.approx(9 / 8, abs=1e-12)


def test_density_bigraph(client):
    big = json.dumps({"left": 2, "right": 2,
                      "edges": [[0, 0], [0, 1], [1, 0], [1, 1]]})
    resp = client.post("/density", json={
        "graph": big, "space": K2, "bigraph": True})
    assert resp.json()["t"] == "2"


def test_density_parse_error_is_400(client):
    resp = client.post("/density", json={"graph": "0 not-a-vertex",
                                         "space": K2})
    assert resp.status_code == 400
    assert "detail" in resp.json()


def test_density_invalid_space_is_422(client):
    bad = {"n": 2, "eta": [["1/2", "1/4"], ["0", "1/4"]], "mode": "rational"}
    resp = client.post("/density", json={"graph": C4_TEXT, "space": bad})
    assert resp.status_code == 422


def test_spectrum_endpoint(client):
    resp = client.post("/spectrum", json={"space": K2})
    doc = resp.json()
    assert doc["eigenvalues"][0] == pytest.approx(1.0, abs=1e-12)
    assert doc["eigenvalues"][-1] == pytest.approx(-1.0, abs=1e-12)
    assert doc["residual"] <= 1e-12


def test_convolution_endpoint(client):
    resp = client.post("/convolution", json={"k_max": 20, "powers": [2]})
    doc = resp.json()
    assert doc["header"] == ["k", "lambda", "lower_bound", "ratio"]
    assert len(doc["rows"]) == 21
    assert doc["rows"][0][:2] == ["0", "0.5"]
    assert doc["partial_sums"]["2"]
    assert doc["strictly_increasing"]["2"] is True


def test_seq_endpoint(client):
    resp = client.post("/seq", json={
        "graph": C4_TEXT, "space": K2, "orders": 3, "seed": 11})
    doc = resp.json()
    assert doc["orders_tested"] == 5
    assert doc["max_deviation"] == 0.0  # rational arithmetic is exact
    assert doc["header"] == ["order_index", "order", "deviation"]
    assert len(doc["rows"]) == 5
    assert doc["rows"][0][1] == "0 1 2 3"


def test_seq_rejects_triangles(client):
    tri = "0 1\n1 2\n0 2\n"
    resp = client.post("/seq", json={
        "graph": tri, "space": K2, "orders": 1, "seed": 0})
    assert resp.status_code == 422


def test_sphere_k22_endpoint(client):
    resp = client.post("/sphere-k22", json={"samples": 1000, "seed": 3})
    doc = resp.json()
    assert len(doc["rows"]) == 2000
    assert doc["rows"][0][0] == "A"
    assert doc["mass_at_one"] >= 0.999
    assert doc["ks_vs_uniform"] < 0.05


def test_sphere_k22_rejects_wrong_dimension(client):
    resp = client.post("/sphere-k22", json={"d": 4, "samples": 1000,
                                            "seed": 0})
    assert resp.status_code == 422


def test_sphere_k22_requires_enough_samples(client):
    resp = client.post("/sphere-k22", json={"samples": 10, "seed": 0})
    assert resp.status_code == 422


def test_path_density_fixture(client):
    # a single edge measures the total mass, which is 1 for any valid space
    resp = client.post("/density", json={
        "graph": graph_to_edgelist(path(1)), "space": K2})
    assert resp.json()["t"] == "1"
