"""REST + websocket control plane against an in-process stack."""

import io
import json
import re
import tarfile
import time

import pytest
from fastapi.testclient import TestClient

from dlaas.api.server import create_app
from tests.conftest import STOCK_MANIFEST
from tests.stack_helpers import (
    definition_text,
    make_stack,
    manifest_text,
    seed_separable,
    wait_terminal,
)


@pytest.fixture
def api(tmp_path):
    stack = make_stack(tmp_path)
    app = create_app(stack)
    with TestClient(app) as client:
        yield client, stack
    stack.shutdown()


def deploy_model(client, manifest=None, **settings):
    import base64

    defaults = dict(epochs=2, batch_size=25, learning_rate=0.5)
    defaults.update(settings)
    definition = base64.b64encode(definition_text(**defaults)).decode()
    response = client.post(
        "/v1/models",
        json={"manifest": manifest or manifest_text(), "definition_b64": definition},
    )
    assert response.status_code == 201, response.text
    return response.json()["model_id"]


def run_job(client, stack, **settings):
    seed_separable(stack, settings.pop("dataset_size", 1500))
    model_id = deploy_model(client, **settings)
    response = client.post("/v1/trainings", json={"model_id": model_id, "overrides": {}})
    assert response.status_code == 201
    training_id = response.json()["training_id"]
    wait_terminal(stack, training_id)
    return training_id


def test_deploy_stock_manifest_returns_model_id(api):
    client, stack = api
    model_id = deploy_model(client, manifest=STOCK_MANIFEST)
    assert re.fullmatch(r"model-[0-9a-f]{12}", model_id)


def test_model_crud_round_trip(api):
    client, _ = api
    model_id = deploy_model(client)
    assert model_id in client.get("/v1/models").json()["models"]
    record = client.get(f"/v1/models/{model_id}").json()
    assert "learners: 1" in record["manifest"]
    updated = manifest_text(learners=2)
    assert client.put(f"/v1/models/{model_id}", json={"manifest": updated}).status_code == 200
    assert "learners: 2" in client.get(f"/v1/models/{model_id}").json()["manifest"]
    assert client.delete(f"/v1/models/{model_id}").status_code == 204
    assert client.get(f"/v1/models/{model_id}").status_code == 404


def test_bad_manifest_400(api):
    client, _ = api
    response = client.post("/v1/models", json={"manifest": "???", "definition_b64": ""})
    assert response.status_code == 400
    assert response.json()["code"] == "SYNTAX_ERROR"


def test_unknown_training_404(api):
    client, _ = api
    assert client.get("/v1/trainings/training-000000000000").status_code == 404


def test_delete_model_in_use_409(api):
    client, stack = api
    seed_separable(stack, 3000)
    model_id = deploy_model(client, epochs=20, batch_size=5)
    training_id = client.post(
        "/v1/trainings", json={"model_id": model_id, "overrides": {}}
    ).json()["training_id"]
    response = client.delete(f"/v1/models/{model_id}")
    assert response.status_code == 409
    assert response.json()["code"] == "MODEL_IN_USE"
    wait_terminal(stack, training_id)


def test_result_archive_has_exactly_two_entries(api):
    client, stack = api
    training_id = run_job(client, stack)
    response = client.get(f"/v1/trainings/{training_id}/result")
    assert response.status_code == 200
    with tarfile.open(fileobj=io.BytesIO(response.content)) as tar:
        names = tar.getnames()
        assert names == ["model.bin", "training-log.txt"]
        log = tar.extractfile("training-log.txt").read().decode()
        assert "ITER" in log
    # deterministic bytes
    again = client.get(f"/v1/trainings/{training_id}/result")
    assert again.content == response.content


def test_job_view_and_delete_lifecycle(api):
    client, stack = api
    training_id = run_job(client, stack)
    doc = client.get(f"/v1/trainings/{training_id}").json()
    assert doc["state"] == "COMPLETED"
    assert doc["learner_statuses"]["0"]["phase"] == "DONE"
    trainings = client.get("/v1/trainings").json()["trainings"]
    assert any(t["training_id"] == training_id for t in trainings)
    assert client.delete(f"/v1/trainings/{training_id}").status_code == 204
    assert client.get(f"/v1/trainings/{training_id}").status_code == 404


def test_halt_endpoint_202(api):
    client, stack = api
    seed_separable(stack, 3000)
    model_id = deploy_model(client, epochs=40, batch_size=5, metric_every=5)
    training_id = client.post(
        "/v1/trainings", json={"model_id": model_id, "overrides": {}}
    ).json()["training_id"]
    deadline = time.monotonic() + 30
    while time.monotonic() < deadline:
        doc = client.get(f"/v1/trainings/{training_id}").json()
        if doc["state"] == "RUNNING" and int(
            doc["learner_statuses"]["0"].get("iteration", 0)
        ) >= 20:
            break
        time.sleep(0.05)
    response = client.post(f"/v1/trainings/{training_id}/halt")
    assert response.status_code == 202
    job = wait_terminal(stack, training_id)
    assert job.state.value == "HALTED"


def test_ws_replay_completed_log_then_close(api):
    client, stack = api
    training_id = run_job(client, stack)
    lines = []
    with client.websocket_connect(f"/v1/trainings/{training_id}/logs?follow=false") as ws:
        while True:
            try:
                lines.append(ws.receive_text())
            except Exception:
                break
    assert lines, "no replayed lines"
    iters = [int(m.group(1)) for m in
             (re.match(r"learner-0 \| ITER (\d+) ", line) for line in lines) if m]
    assert iters == sorted(iters)


def test_ws_metrics_frames_shape(api):
    client, stack = api
    training_id = run_job(client, stack)
    frames = []
    with client.websocket_connect(f"/v1/trainings/{training_id}/metrics?follow=false") as ws:
        while True:
            try:
                frames.append(json.loads(ws.receive_text()))
            except Exception:
                break
    assert frames
    for frame in frames:
        assert set(frame) == {
            "iteration", "loss", "accuracy", "learning_rate", "wallclock_ms", "learner_id",
        }


def test_ws_unknown_job_closes_with_reason(api):
    client, _ = api
    with pytest.raises(Exception):
        with client.websocket_connect("/v1/trainings/training-0000/logs") as ws:
            ws.receive_text()


def test_two_ws_subscribers_identical_sequences(api):
    client, stack = api
    training_id = run_job(client, stack)

    def collect():
        lines = []
        with client.websocket_connect(
            f"/v1/trainings/{training_id}/logs?follow=false"
        ) as ws:
            while True:
                try:
                    lines.append(ws.receive_text())
                except Exception:
                    return lines

    assert collect() == collect()


def test_metrics_loss_series_eventually_decreases(api):
    """Statistical check on a seeded converging run: last-quarter mean loss
    below first-quarter mean loss."""
    client, stack = api
    training_id = run_job(client, stack, dataset_size=3000, epochs=3,
                          batch_size=10, metric_every=5)
    losses = []
    with client.websocket_connect(f"/v1/trainings/{training_id}/metrics?follow=false") as ws:
        while True:
            try:
                frame = json.loads(ws.receive_text())
            except Exception:
                break
            if frame["learner_id"] == 0:
                losses.append(frame["loss"])
    assert len(losses) >= 20
    quarter = len(losses) // 4
    assert sum(losses[-quarter:]) / quarter < sum(losses[:quarter]) / quarter


def test_submission_retried_on_transient_failure(api, monkeypatch):
    """Internal calls behind POST /v1/trainings retry up to 3 times."""
    client, stack = api
    seed_separable(stack, 500)
    model_id = deploy_model(client, epochs=1)
    from dlaas.objectstore.store import IoFailureError

    real_submit = stack.lcm.submit
    attempts = {"n": 0}

    def flaky_submit(mid, overrides=None):
        attempts["n"] += 1
        if attempts["n"] <= 2:
            raise IoFailureError("injected transient failure")
        return real_submit(mid, overrides)

    monkeypatch.setattr(stack.lcm, "submit", flaky_submit)
    response = client.post("/v1/trainings", json={"model_id": model_id, "overrides": {}})
    assert response.status_code == 201
    assert attempts["n"] == 3
    wait_terminal(stack, response.json()["training_id"])


def test_auth_token_enforced(tmp_path):
    stack = make_stack(tmp_path)
    app = create_app(stack, token="sekrit")
    try:
        with TestClient(app) as client:
            assert client.get("/v1/models").status_code == 401
            ok = client.get("/v1/models", headers={"Authorization": "Bearer sekrit"})
            assert ok.status_code == 200
            by_query = client.get("/v1/models?token=sekrit")
            assert by_query.status_code == 200
    finally:
        stack.shutdown()


def test_api_restart_loses_no_job_state(tmp_path):
    """Stateless API: a fresh app over the same stores sees the same jobs."""
    stack = make_stack(tmp_path)
    try:
        with TestClient(create_app(stack)) as client:
            training_id = run_job(client, stack)
        with TestClient(create_app(stack)) as fresh:
            doc = fresh.get(f"/v1/trainings/{training_id}").json()
            assert doc["state"] == "COMPLETED"
            archive = fresh.get(f"/v1/trainings/{training_id}/result")
            assert archive.status_code == 200
    finally:
        stack.shutdown()
