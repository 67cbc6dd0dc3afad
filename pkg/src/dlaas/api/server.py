"""REST control plane and websocket streaming layer.

Endpoints (all under /v1, bearer-token auth when a token is configured):

    POST   /v1/models                        create model (manifest + definition)
    GET    /v1/models                        list model ids
    GET    /v1/models/{id}                   model record
    PUT    /v1/models/{id}                   update manifest
    DELETE /v1/models/{id}                   delete (409 while a job runs)
    POST   /v1/trainings                     create training job
    GET    /v1/trainings                     list jobs
    GET    /v1/trainings/{id}                job view
    DELETE /v1/trainings/{id}                delete terminal job
    POST   /v1/trainings/{id}/halt           halt a running job (202)
    GET    /v1/trainings/{id}/result         tar archive of model + log
    WS     /v1/trainings/{id}/logs           raw log lines (?follow=false to
                                             close after replay)
    WS     /v1/trainings/{id}/metrics        parsed MetricRecord JSON frames

The process holds no job state of its own: everything is read back from
the coordination store and object store, so an API restart mid-job loses
nothing.
"""

from __future__ import annotations

import asyncio
import base64
import binascii
import logging
import time

from fastapi import Depends, FastAPI, HTTPException, Request, Response, WebSocket
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel
from starlette.websockets import WebSocketDisconnect

from dlaas.api.archive import build_result_archive
from dlaas.api.logstream import CLOSE, LogBroker, StreamParser
from dlaas.errors import DlaasError
from dlaas.lcm.manager import INTERNAL_CONTAINER
from dlaas.objectstore.store import IoFailureError
from dlaas.coordstore.store import StoreClosedError
from dlaas.stack import LocalStack

logger = logging.getLogger(__name__)

SUBMIT_RETRIES = 3

_STATUS_BY_CODE = {
    "NOT_FOUND": 404,
    "MODEL_IN_USE": 409,
    "INVALID_STATE": 409,
    "ILLEGAL_TRANSITION": 409,
    "SYNTAX_ERROR": 400,
    "SCHEMA_ERROR": 400,
    "UNKNOWN_FRAMEWORK": 400,
    "INVALID_OVERRIDE": 400,
    "INVALID_JOB_CONFIG": 400,
    "BAD_CONTAINER": 400,
    "DATASET_MALFORMED": 400,
    "AUTH_FAILED": 400,
}


class CreateModelBody(BaseModel):
    manifest: str
    definition_b64: str = ""


class UpdateModelBody(BaseModel):
    manifest: str


class CreateTrainingBody(BaseModel):
    model_id: str
    overrides: dict = {}


def _http_error(exc: DlaasError) -> HTTPException:
    status = _STATUS_BY_CODE.get(exc.code, 500)
    return HTTPException(status_code=status, detail={"code": exc.code, "message": str(exc)})


def _job_view(job) -> dict:
    return {
        "training_id": job.training_id,
        "model_id": job.model_id,
        "state": job.state.value,
        "learners": job.config.learners,
        "gpus": job.config.gpus,
        "memory_mib": job.config.memory_mib,
        "solver": job.config.solver,
        "epochs": job.config.epochs,
        "created_at": job.created_at,
        "completed_at": job.completed_at,
        "recoveries": job.recoveries,
        "failure_reason": job.failure_reason,
        "ps_endpoints": job.ps_endpoints,
        "learner_statuses": job.learner_statuses,
    }


def create_app(stack: LocalStack, token: str | None = None) -> FastAPI:
    app = FastAPI(title="dlaas", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    broker = LogBroker(stack.store, stack.coord, INTERNAL_CONTAINER)
    app.state.stack = stack
    app.state.broker = broker

    def check_auth(request: Request) -> None:
        if token is None:
            return
        header = request.headers.get("authorization", "")
        if header == f"Bearer {token}" or request.query_params.get("token") == token:
            return
        raise HTTPException(status_code=401, detail={"code": "UNAUTHORIZED", "message": "bad token"})

    def ws_authorized(ws: WebSocket) -> bool:
        if token is None:
            return True
        header = ws.headers.get("authorization", "")
        return header == f"Bearer {token}" or ws.query_params.get("token") == token

    @app.exception_handler(DlaasError)
    async def dlaas_error_handler(request, exc: DlaasError):
        http = _http_error(exc)
        return JSONResponse(status_code=http.status_code, content=http.detail)

    # -- models ------------------------------------------------------------

    @app.post("/v1/models", status_code=201)
    def create_model(body: CreateModelBody, _=Depends(check_auth)):
        try:
            definition = base64.b64decode(body.definition_b64 or "")
        except (binascii.Error, ValueError):
            raise HTTPException(
                status_code=400,
                detail={"code": "SCHEMA_ERROR", "message": "definition_b64 is not base64"},
            )
        model_id = stack.registry.create_model(body.manifest, definition)
        return {"model_id": model_id}

    @app.get("/v1/models")
    def list_models(_=Depends(check_auth)):
        return {"models": stack.registry.list_models()}

    @app.get("/v1/models/{model_id}")
    def get_model(model_id: str, _=Depends(check_auth)):
        from dlaas.registry.manifest import serialize_manifest

        record = stack.registry.get_model(model_id)
        return {
            "model_id": record.model_id,
            "manifest": serialize_manifest(record.manifest),
            "created_at": record.created_at,
            "definition_size": len(record.definition_blob),
        }

    @app.put("/v1/models/{model_id}")
    def update_model(model_id: str, body: UpdateModelBody, _=Depends(check_auth)):
        stack.registry.update_model(model_id, body.manifest)
        return {"model_id": model_id}

    @app.delete("/v1/models/{model_id}", status_code=204)
    def delete_model(model_id: str, _=Depends(check_auth)):
        stack.registry.delete_model(model_id)
        return Response(status_code=204)

    # -- trainings -------------------------------------------------------------

    @app.post("/v1/trainings", status_code=201)
    def create_training(body: CreateTrainingBody, _=Depends(check_auth)):
        last_error: DlaasError | None = None
        for attempt in range(SUBMIT_RETRIES):
            try:
                return {"training_id": stack.lcm.submit(body.model_id, body.overrides)}
            except (IoFailureError, StoreClosedError) as exc:
                last_error = exc  # transient backend failure: retry
                time.sleep(0.05 * (attempt + 1))
        raise last_error

    @app.get("/v1/trainings")
    def list_trainings(_=Depends(check_auth)):
        jobs = []
        for training_id in stack.lcm.list_jobs():
            try:
                jobs.append(_job_view(stack.lcm.get_job(training_id)))
            except DlaasError:
                continue
        return {"trainings": jobs}

    @app.get("/v1/trainings/{training_id}")
    def get_training(training_id: str, _=Depends(check_auth)):
        return _job_view(stack.lcm.get_job(training_id))

    @app.delete("/v1/trainings/{training_id}", status_code=204)
    def delete_training(training_id: str, _=Depends(check_auth)):
        stack.lcm.delete_job(training_id)
        return Response(status_code=204)

    @app.post("/v1/trainings/{training_id}/halt", status_code=202)
    def halt_training(training_id: str, _=Depends(check_auth)):
        stack.lcm.halt(training_id)
        return {"training_id": training_id, "state": "HALTING"}

    @app.get("/v1/trainings/{training_id}/result")
    def get_result(training_id: str, _=Depends(check_auth)):
        stack.lcm.get_job(training_id)  # 404 on unknown id
        archive = build_result_archive(stack.store, INTERNAL_CONTAINER, training_id)
        if archive is None:
            raise HTTPException(
                status_code=404,
                detail={"code": "NOT_FOUND", "message": "no results stored for this job"},
            )
        return Response(
            content=archive,
            media_type="application/x-tar",
            headers={"Content-Disposition": f'attachment; filename="{training_id}.tar"'},
        )

    # -- streaming ----------------------------------------------------------------

    async def _stream(ws: WebSocket, training_id: str, as_metrics: bool) -> None:
        await ws.accept()
        if not ws_authorized(ws):
            await ws.close(code=4401, reason="UNAUTHORIZED")
            return
        if not broker.job_exists(training_id):
            await ws.close(code=4404, reason="NOT_FOUND")
            return
        follow = ws.query_params.get("follow", "true").lower() != "false"
        sub = broker.subscribe(training_id)
        parser = StreamParser(monotone=True)
        loop = asyncio.get_event_loop()
        try:
            while True:
                try:
                    item = await loop.run_in_executor(None, sub.poll, 0.2)
                except TimeoutError:
                    if not follow:
                        break
                    continue
                if item is CLOSE:
                    break
                if as_metrics:
                    record = parser.feed(item)
                    if record is not None:
                        await ws.send_text(record.to_json())
                else:
                    await ws.send_text(item)
        except (WebSocketDisconnect, RuntimeError):
            return
        try:
            await ws.close(code=1000, reason="stream complete")
        except RuntimeError:
            pass

    @app.websocket("/v1/trainings/{training_id}/logs")
    async def stream_logs(ws: WebSocket, training_id: str):
        await _stream(ws, training_id, as_metrics=False)

    @app.websocket("/v1/trainings/{training_id}/metrics")
    async def stream_metrics(ws: WebSocket, training_id: str):
        await _stream(ws, training_id, as_metrics=True)

    return app
