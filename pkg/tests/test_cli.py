import json
import subprocess
import sys
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from dpcipi import cli
from dpcipi.service import app

from conftest import write_corpus_files


def run_cli(*args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "dpcipi.cli", *args],
        capture_output=True,
        text=True,
        env=env,
    )


def write_config(tmp_path, fasta, csv, **overrides) -> Path:
    data = {
        "paths": {
            "fasta": str(fasta),
            "hi_csv": str(csv),
            "workdir": str(tmp_path / "work"),
        },
        "task": "binary",
        "k": 3,
        "embed_init": "random",
        "embedding_dim": 16,
        "epochs": 2,
        "batch_size": 10,
        "learning_rate": 3e-3,
        "seed": 5,
        "hidden_dim": 16,
        "mlp_hidden": 16,
    }
    data.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


@pytest.fixture()
def config_path(tmp_path, corpus_files):
    fasta, csv = corpus_files
    return write_config(tmp_path, fasta, csv)


def test_cli_pipeline_end_to_end(config_path):
    result = run_cli("preprocess", "--config", str(config_path))
    assert result.returncode == 0, result.stderr
    summary = json.loads(result.stdout)
    assert summary["pairs"] == 40

    result = run_cli("train", "--config", str(config_path))
    assert result.returncode == 0, result.stderr
    assert json.loads(result.stdout)["kind"] == "dpcipi"

    result = run_cli("evaluate", "--config", str(config_path))
    assert result.returncode == 0, result.stderr
    metrics = json.loads(result.stdout)
    assert 0.0 <= metrics["accuracy"] <= 1.0

    result = run_cli(
        "predict", "--config", str(config_path), "--reference", "ACGTACGTACGT", "--test", "ACGTACGTACGT"
    )
    assert result.returncode == 0, result.stderr
    assert sum(json.loads(result.stdout)["probabilities"]) == pytest.approx(1.0)


def test_cli_missing_fasta_exits_2(tmp_path, corpus_files):
    _, csv = corpus_files
    config = write_config(tmp_path, tmp_path / "missing.fasta", csv)
    result = run_cli("preprocess", "--config", str(config))
    assert result.returncode == 2
    assert "missing.fasta" in result.stderr


def test_cli_missing_config_file_exits_2(tmp_path):
    result = run_cli("preprocess", "--config", str(tmp_path / "none.json"))
    assert result.returncode == 2


def test_cli_invalid_override_exits_2(config_path):
    result = run_cli("train", "--config", str(config_path), "--epochs", "-3")
    assert result.returncode == 2
    assert "invalid configuration" in result.stderr


def test_cli_invalid_base_exits_2(config_path):
    run_cli("preprocess", "--config", str(config_path))
    run_cli("train", "--config", str(config_path))
    result = run_cli(
        "predict", "--config", str(config_path), "--reference", "ACGX", "--test", "ACGT"
    )
    assert result.returncode == 2


def test_cli_flag_overrides_config(config_path, tmp_path):
    result = run_cli("preprocess", "--config", str(config_path))
    assert result.returncode == 0
    result = run_cli("train", "--config", str(config_path), "--epochs", "1")
    assert result.returncode == 0
    assert json.loads(result.stdout)["epochs"] == 1


def test_cli_remote_mode_uses_server(monkeypatch, config_path):
    """--server routes through HTTP; exercised via the in-process test client."""
    test_client = TestClient(app)

    def fake_post(url, json=None, timeout=None):
        path = url.replace("http://testserver", "")
        return test_client.post(path, json=json)

    monkeypatch.setattr(cli.httpx, "post", fake_post)
    args = cli.build_parser().parse_args(
        ["preprocess", "--config", str(config_path), "--server", "http://testserver"]
    )
    result = cli.run_command(args)
    assert result["pairs"] == 40


def test_cli_remote_mode_maps_400_to_input_error(monkeypatch, tmp_path, corpus_files):
    _, csv = corpus_files
    config = write_config(tmp_path, tmp_path / "missing.fasta", csv)
    test_client = TestClient(app)

    def fake_post(url, json=None, timeout=None):
        return test_client.post(url.replace("http://testserver", ""), json=json)

    monkeypatch.setattr(cli.httpx, "post", fake_post)
    args = cli.build_parser().parse_args(
        ["preprocess", "--config", str(config), "--server", "http://testserver"]
    )
    from dpcipi.errors import InputError

    with pytest.raises(InputError):
        cli.run_command(args)
