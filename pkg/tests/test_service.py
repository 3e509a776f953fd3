import pytest
from fastapi.testclient import TestClient

from lorp import __version__
from lorp.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


DEMO_SELECT = {
    "data": {"x": [[1.0], [2.0]], "y": [1.0, 2.0]},
    "families": [{"family": "poly", "values": [0, 1, 2]}],
}


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok", "version": __version__}


def test_select_demo(client):
    resp = client.post("/select", json=DEMO_SELECT)
    assert resp.status_code == 200
    body = resp.json()
    assert body["schema"] == 1
    assert body["version"] == __version__
    assert body["winners"]["lorp"] == 1  # the mean
    assert len(body["candidates"]) == 3
    assert body["candidates"][1]["label"] == "poly(d=1)"
    assert body["dataset"] == {"n": 2, "m": 1, "sha256": body["dataset"]["sha256"]}
    assert [p["param"] for p in body["curves"][0]["points"]] == [0.0, 1.0, 2.0]


def test_select_echoes_config(client):
    resp = client.post("/select", json={**DEMO_SELECT, "seed": 77})
    assert resp.json()["config"]["seed"] == 77


def test_select_ragged_data_is_data_error(client):
    bad = {"data": {"x": [[1.0], [2.0, 3.0]], "y": [1.0, 2.0]}, "families": DEMO_SELECT["families"]}
    resp = client.post("/select", json=bad)
    assert resp.status_code == 400
    assert resp.json()["detail"]["kind"] == "data"


def test_select_all_failed_is_selection_error(client):
    bad = {
        "data": {"x": [[1.0, 2.0], [2.0, 3.0], [3.0, 5.0]], "y": [1.0, 2.0, 3.0]},
        "families": [{"family": "poly", "values": [1]}],  # needs univariate x
    }
    resp = client.post("/select", json=bad)
    assert resp.status_code == 422
    assert resp.json()["detail"]["kind"] == "selection"


def test_select_validation_is_fastapi_shaped(client):
    resp = client.post("/select", json={"data": DEMO_SELECT["data"], "families": []})
    assert resp.status_code == 422
    assert isinstance(resp.json()["detail"], list)  # pydantic, not a lorp failure


def test_synth(client):
    resp = client.post("/synth", json={"kind": "poly", "coeffs": [1.0, 0.0, 2.0], "n": 10, "noise_sd": 0.0})
    assert resp.status_code == 200
    body = resp.json()
    assert body["columns"] == ["x", "y"]
    assert len(body["x"]) == 10
    assert body["y"][0] == pytest.approx(1.0)
    assert body["y"][-1] == pytest.approx(3.0)


def test_synth_poly_without_coeffs_is_invalid(client):
    resp = client.post("/synth", json={"kind": "poly", "n": 10})
    assert resp.status_code == 400
    assert resp.json()["detail"]["kind"] == "invalid"


def test_oracle_exact(client):
    resp = client.post("/oracle/exact-rank", json={})
    assert resp.status_code == 200
    body = resp.json()
    assert {k: v["rank"] for k, v in body["entries"].items()} == {"d0": 8, "d1": 7, "d2": 9}
    assert body["selected"] == "d1"
    assert body["total_points"] == 9


def test_oracle_grid(client):
    resp = client.post("/oracle/grid-rank", json={"d": 1, "eps": 0.01})
    assert resp.status_code == 200
    body = resp.json()
    assert set(body["entries"]) == {"d1"}
    assert abs(body["entries"]["d1"]["volume"] - 3.0) < 0.06


def test_oracle_mc(client):
    resp = client.post("/oracle/mc-volume", json={"d": 2, "samples": 2000})
    assert resp.status_code == 200
    body = resp.json()
    assert body["entries"]["d2"]["estimate"] == 4.0
    resp_all = client.post("/oracle/mc-volume", json={"samples": 20000})
    assert resp_all.json()["selected"] == "d1"
