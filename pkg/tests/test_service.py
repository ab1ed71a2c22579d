import pytest
from fastapi.testclient import TestClient

from dpcipi import __version__
from dpcipi.service import app

from test_pipeline import make_config

client = TestClient(app)


@pytest.fixture()
def run_config(tmp_path, corpus_files):
    fasta, csv = corpus_files
    return make_config(tmp_path, fasta, csv)


def test_health():
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok", "version": __version__}


def test_full_cycle_over_http(run_config):
    payload = run_config.model_dump()

    response = client.post("/preprocess", json=payload)
    assert response.status_code == 200
    body = response.json()
    assert body["pairs"] == 40
    assert body["binary_counts"]["positive"] + body["binary_counts"]["negative"] == 40

    response = client.post("/train", json=payload)
    assert response.status_code == 200
    assert response.json()["kind"] == "dpcipi"

    response = client.post("/evaluate", json=payload)
    assert response.status_code == 200
    metrics = response.json()
    assert set(metrics) >= {"accuracy", "weighted_precision", "weighted_recall", "weighted_f1"}

    response = client.post(
        "/predict",
        json={"config": payload, "reference": "ACGTACGTACGT", "test": "ACGTACGTACGT"},
    )
    assert response.status_code == 200
    probs = response.json()["probabilities"]
    assert sum(probs) == pytest.approx(1.0)


def test_ablate_endpoint(run_config):
    client.post("/preprocess", json=run_config.model_dump())
    response = client.post(
        "/ablate",
        json={"config": run_config.model_copy(update={"epochs": 1}).model_dump(), "tasks": ["binary"]},
    )
    assert response.status_code == 200
    assert len(response.json()["cells"]) == 4


def test_input_errors_return_400(run_config):
    broken = run_config.model_copy(deep=True)
    broken.paths.fasta = "/does/not/exist.fasta"
    response = client.post("/preprocess", json=broken.model_dump())
    assert response.status_code == 400
    assert "exist.fasta" in response.json()["detail"]


def test_validation_errors_return_422(run_config):
    payload = run_config.model_dump()
    payload["task"] = "ternary"
    response = client.post("/preprocess", json=payload)
    assert response.status_code == 422
