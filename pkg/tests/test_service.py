import time

import pytest
from fastapi.testclient import TestClient

from fastfal.service import create_app

CONFIG = """
data.synthetic.classes = 3
data.synthetic.per_class = 40
data.synthetic.dim = 8
data.synthetic.sigma = 0.2
data.test_fraction = 0.25
partition.mode = iid
partition.clients = 3
al.method = fast
al.budget_fraction = 0.2
al.initial_fraction = 0.05
fl.rounds = 4
fl.eta = 0.1
seed = 2
"""


@pytest.fixture
def client():
    return TestClient(create_app())


def wait_for_run(client, run_id, timeout=30.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        status = client.get(f"/runs/{run_id}").json()
        if status["state"] != "running":
            return status
        time.sleep(0.05)
    raise TimeoutError(f"run {run_id} did not finish")


def test_health(client):
    assert client.get("/health").json() == {"status": "ok"}


def test_synthetic_and_inspect(client, tmp_path):
    out = str(tmp_path / "api.femb")
    resp = client.post("/synthetic", json={
        "classes": 3, "per_class": 12, "dim": 4, "sigma": 0.1,
        "seed": 9, "out": out,
    })
    assert resp.status_code == 200
    info = resp.json()
    assert info["n"] == 36 and info["d"] == 4 and info["c"] == 3
    assert sum(info["class_histogram"]) == 36

    resp = client.post("/inspect", json={"path": out})
    assert resp.status_code == 200
    assert resp.json()["class_histogram"] == info["class_histogram"]


def test_inspect_missing_path(client, tmp_path):
    resp = client.post("/inspect", json={"path": str(tmp_path / "none.femb")})
    assert resp.status_code == 404


def test_inspect_corrupt_file(client, tmp_path):
    bad = tmp_path / "bad.femb"
    bad.write_bytes(b"garbage!" + b"\x00" * 16)
    resp = client.post("/inspect", json={"path": str(bad)})
    assert resp.status_code == 400


def test_run_lifecycle(client, tmp_path):
    resp = client.post("/runs", json={
        "config_text": CONFIG, "out_dir": str(tmp_path / "run"),
    })
    assert resp.status_code == 202
    run_id = resp.json()["run_id"]

    status = wait_for_run(client, run_id)
    assert status["state"] == "done", status
    summary = status["summary"]
    assert summary["rounds"] == 4
    assert 0.0 <= summary["final_acc"] <= 1.0
    assert summary["budget_consumed"] > 0

    metrics = client.get(f"/runs/{run_id}/metrics")
    assert metrics.status_code == 200
    lines = metrics.text.splitlines()
    assert lines[0] == "round,test_acc,cum_mb,phase"
    assert len(lines) == 5


def test_run_rejects_bad_config(client):
    resp = client.post("/runs", json={"config_text": "al.bogus = 1\n"})
    assert resp.status_code == 422


def test_unknown_run_is_404(client):
    assert client.get("/runs/deadbeef").status_code == 404
    assert client.get("/runs/deadbeef/metrics").status_code == 404


def test_sweep_endpoint(client, tmp_path):
    resp = client.post("/sweep", json={
        "config_text": CONFIG, "param": "fl.rounds",
        "values": ["2", "3"], "out_dir": str(tmp_path / "sweep"),
    })
    assert resp.status_code == 200
    points = resp.json()
    assert [p["value"] for p in points] == ["2", "3"]
    assert points[0]["rounds"] == 2 and points[1]["rounds"] == 3
