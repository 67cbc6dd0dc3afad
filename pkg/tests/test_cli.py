"""CLI end to end against a live local stack served over real HTTP."""

import json
import threading
import time

import pytest
import uvicorn

import importlib

cli = importlib.import_module("dlaas.cli.main")

from dlaas.api.server import create_app
from tests.stack_helpers import (
    definition_text,
    make_stack,
    manifest_text,
    seed_separable,
    wait_terminal,
)


@pytest.fixture(scope="module")
def live(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli-stack")
    stack = make_stack(tmp)
    seed_separable(stack, 1500)
    app = create_app(stack)
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 15
    while not server.started and time.monotonic() < deadline:
        time.sleep(0.02)
    assert server.started
    port = server.servers[0].sockets[0].getsockname()[1]
    yield stack, f"http://127.0.0.1:{port}", tmp
    server.should_exit = True
    thread.join(timeout=5)
    stack.shutdown()


def run_cli(endpoint, *argv, output=None):
    args = ["--endpoint", endpoint]
    if output:
        args += ["--output", output]
    return cli.main(args + list(argv))


def deployed_model(live, tmp_name="m") -> str:
    stack, endpoint, tmp = live
    manifest_file = tmp / f"{tmp_name}.yml"
    manifest_file.write_text(manifest_text())
    definition_file = tmp / f"{tmp_name}-def.txt"
    definition_file.write_bytes(definition_text(epochs=2, batch_size=25, learning_rate=0.5))
    import io
    from contextlib import redirect_stdout

    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = run_cli(endpoint, "model", "deploy", str(manifest_file), str(definition_file))
    assert code == 0
    return buffer.getvalue().strip()


def test_model_deploy_prints_id(live, capsys):
    stack, endpoint, tmp = live
    model_id = deployed_model(live, "deploy-test")
    assert model_id.startswith("model-")


def test_train_and_monitor_roundtrip(live, capsys):
    stack, endpoint, _ = live
    model_id = deployed_model(live, "train-test")
    code = run_cli(endpoint, "train", model_id, "--learners", "2")
    out = capsys.readouterr().out.strip()
    assert code == 0
    training_id = out.splitlines()[-1]
    assert training_id.startswith("training-")
    wait_terminal(stack, training_id)
    code = run_cli(endpoint, "jobs", "get", training_id)
    out = capsys.readouterr().out
    assert code == 0
    assert "COMPLETED" in out

    code = run_cli(endpoint, "jobs", "list")
    out = capsys.readouterr().out
    assert code == 0 and training_id in out


def test_unknown_subcommand_exit_3(live, capsys):
    stack, endpoint, _ = live
    code = run_cli(endpoint, "frobnicate")
    err = capsys.readouterr().err
    assert code == 3
    assert "usage" in err.lower()


def test_logs_replay_completed_job(live, capsys):
    stack, endpoint, _ = live
    model_id = deployed_model(live, "logs-test")
    code = run_cli(endpoint, "train", model_id)
    training_id = capsys.readouterr().out.strip().splitlines()[-1]
    wait_terminal(stack, training_id)
    code = run_cli(endpoint, "logs", training_id, "--follow")
    out = capsys.readouterr().out
    assert code == 0
    assert "ITER" in out
    # without --follow the replay also lands and exits promptly
    code = run_cli(endpoint, "logs", training_id)
    out = capsys.readouterr().out
    assert code == 0 and "ITER" in out


def test_download_unpacks_results(live, capsys, tmp_path):
    stack, endpoint, _ = live
    model_id = deployed_model(live, "dl-test")
    run_cli(endpoint, "train", model_id)
    training_id = capsys.readouterr().out.strip().splitlines()[-1]
    wait_terminal(stack, training_id)
    code = run_cli(endpoint, "download", training_id, str(tmp_path / "out"))
    capsys.readouterr()
    assert code == 0
    assert (tmp_path / "out" / "model.bin").exists()
    assert (tmp_path / "out" / "training-log.txt").exists()


def test_json_output_single_document(live, capsys):
    stack, endpoint, _ = live
    for argv in (["model", "list"], ["jobs", "list"]):
        code = run_cli(endpoint, *argv, output="json")
        out = capsys.readouterr().out
        assert code == 0
        json.loads(out)  # exactly one valid JSON document
    model_id = deployed_model(live, "json-test")
    code = run_cli(endpoint, "train", model_id, output="json")
    out = capsys.readouterr().out
    doc = json.loads(out)
    assert doc["training_id"].startswith("training-")
    wait_terminal(stack, doc["training_id"])
    code = run_cli(endpoint, "logs", doc["training_id"], output="json")
    out = capsys.readouterr().out
    assert code == 0
    assert isinstance(json.loads(out)["lines"], list)


def test_api_error_exit_1(live, capsys):
    stack, endpoint, _ = live
    code = run_cli(endpoint, "jobs", "get", "training-000000000000")
    err = capsys.readouterr().err
    assert code == 1
    assert "404" in err


def test_endpoint_parity_update_delete_metrics(live, capsys, tmp_path):
    """Every REST endpoint is reachable through the CLI."""
    stack, endpoint, _ = live
    model_id = deployed_model(live, "parity-test")
    # PUT /v1/models/{id}
    updated = tmp_path / "updated.yml"
    updated.write_text(manifest_text(learners=2))
    assert run_cli(endpoint, "model", "update", model_id, str(updated)) == 0
    capsys.readouterr()
    assert run_cli(endpoint, "model", "get", model_id) == 0
    assert "learners: 2" in capsys.readouterr().out
    # run a job to exercise metrics + jobs delete
    run_cli(endpoint, "train", model_id, "--learners", "1")
    training_id = capsys.readouterr().out.strip().splitlines()[-1]
    wait_terminal(stack, training_id)
    assert run_cli(endpoint, "metrics", training_id, output="json") == 0
    records = json.loads(capsys.readouterr().out)["records"]
    assert records and all("iteration" in json.loads(r) for r in records)
    # DELETE /v1/trainings/{id}
    assert run_cli(endpoint, "jobs", "delete", training_id) == 0
    capsys.readouterr()
    assert run_cli(endpoint, "jobs", "get", training_id) == 1
    capsys.readouterr()
    # DELETE /v1/models/{id}
    assert run_cli(endpoint, "model", "delete", model_id) == 0
    capsys.readouterr()


def test_connectivity_error_exit_2(capsys):
    code = run_cli("http://127.0.0.1:1", "model", "list")
    assert code == 2


def test_config_file_and_env_precedence(live, capsys, tmp_path, monkeypatch):
    stack, endpoint, _ = live
    config_file = tmp_path / "config"
    config_file.write_text(f"endpoint = http://127.0.0.1:1\noutput = json\n")
    monkeypatch.setattr(cli, "CONFIG_PATH", config_file)
    # file alone points at a dead endpoint -> exit 2
    assert cli.main(["model", "list"]) == 2
    capsys.readouterr()
    # env overrides file
    monkeypatch.setenv("DLAAS_ENDPOINT", endpoint)
    assert cli.main(["model", "list"]) == 0
    json.loads(capsys.readouterr().out)  # output=json came from the file
    # flag overrides env
    monkeypatch.setenv("DLAAS_ENDPOINT", "http://127.0.0.1:1")
    assert cli.main(["--endpoint", endpoint, "model", "list"]) == 0
    capsys.readouterr()
