# tests/test_api.py

import pytest
from fastapi.testclient import TestClient

from app.dependencies import to_http
from app.errors import NotLumpableError
from main import app

from tests.conftest import DEFICIENT, read_sample

client = TestClient(app)


@pytest.fixture(scope="module")
def compiled():
    response = client.post("/api/models/compile", json={"source": read_sample("si.piff")})
    assert response.status_code == 200, response.text
    return response.json()


@pytest.fixture(scope="module")
def reduced(compiled):
    response = client.post("/api/models/reduce", json={"matrix": compiled["matrix"], "labels": read_sample("si.lbl")})
    assert response.status_code == 200, response.text
    return response.json()


def test_root():
    response = client.get("/")
    assert response.status_code == 200
    assert response.json() == {"message": "PiFF compiler is running"}


def test_compile(compiled):
    assert compiled["states"] == 42
    assert compiled["matrix"]["population"] == 100
    assert "init S@loc=A@init*40;" in compiled["flyfast"]


def test_compile_upload():
    files = {"file": ("si.piff", read_sample("si.piff").encode("utf-8"), "text/plain")}
    response = client.post("/api/models/compile/upload", files=files, params={"prune": "false"})
    assert response.status_code == 200, response.text
    assert response.json()["states"] == 110


def test_compile_error_carries_position():
    response = client.post("/api/models/compile", json={"source": "const H = ;"})
    assert response.status_code == 422
    detail = response.json()["detail"]
    assert (detail[0]["line"], detail[0]["column"]) == (1, 11)


def test_non_stochastic_model_is_rejected():
    response = client.post("/api/models/compile", json={"source": DEFICIENT})
    assert response.status_code == 422
    assert all("row sums to" in d["message"] for d in response.json()["detail"])


def test_reduce(reduced):
    assert [b["name"] for b in reduced["partition"]["blocks"]] == ["QSh", "QSl", "QIh", "QIl"]
    assert reduced["matrix"]["labels"]["QIl"] == ["Il"]
    assert "action QIl_QIh: 12/25;" in reduced["flyfast"]


def test_reduce_by_pairs(compiled):
    response = client.post("/api/models/reduce", json={"matrix": compiled["matrix"], "pair_labels": True})
    assert response.status_code == 200
    assert len(response.json()["partition"]["blocks"]) == 8


def test_reduce_needs_labels(compiled):
    response = client.post("/api/models/reduce", json={"matrix": compiled["matrix"]})
    assert response.status_code == 400


def test_reduce_bad_label_file(compiled):
    response = client.post("/api/models/reduce", json={"matrix": compiled["matrix"], "labels": "h := "})
    assert response.status_code == 422


def test_inconsistent_matrix_document(compiled):
    matrix = dict(compiled["matrix"], states=compiled["matrix"]["states"][:3])
    response = client.post("/api/analysis/meanfield", json={"matrix": matrix, "steps": 1})
    assert response.status_code == 422


def test_not_lumpable_maps_to_conflict():
    assert to_http(NotLumpableError("differ", (0, 0))).status_code == 409


def test_meanfield(reduced):
    body = {"matrix": reduced["matrix"], "init": "QSh:1/2,QIh:1/2", "steps": 2}
    response = client.post("/api/analysis/meanfield", json=body)
    assert response.status_code == 200
    data = response.json()
    assert data["states"] == ["QSh", "QSl", "QIh", "QIl"]
    assert data["rows"][1] == pytest.approx([0.21, 0.14, 0.39, 0.26], abs=1e-12)


def test_fastsim(reduced):
    body = {"matrix": reduced["matrix"], "init": "QSh:1/2,QIh:1/2", "steps": 1, "start": "QSh"}
    response = client.post("/api/analysis/fastsim", json=body)
    assert response.status_code == 200
    assert response.json()["rows"][1] == pytest.approx([0.3, 0.2, 0.3, 0.2], abs=1e-12)


def test_check(reduced):
    body = {"matrix": reduced["matrix"], "init": "QSh:1/2,QIh:1/2", "state": "QSh", "formula": "P>=0.25 [X Ih]"}
    response = client.post("/api/analysis/check", json=body)
    assert response.status_code == 200
    data = response.json()
    assert data["verdict"] is True
    assert data["probability"] == pytest.approx(0.3)


def test_check_bad_formula(reduced):
    body = {"matrix": reduced["matrix"], "state": "QSh", "formula": "P>=2 [X Ih]"}
    response = client.post("/api/analysis/check", json=body)
    assert response.status_code == 422


def test_simulate(reduced):
    body = {"matrix": reduced["matrix"], "N": 100, "steps": 3, "replicas": 2, "seed": 1}
    response = client.post("/api/analysis/simulate", json=body)
    assert response.status_code == 200
    data = response.json()
    assert data["seed"] == 1
    assert len(data["mean"]) == 4
    assert all(sum(row) == pytest.approx(1.0) for row in data["mean"])
