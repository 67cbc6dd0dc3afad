"""Command-line client over the REST API.

    dlaas model deploy <manifest.yml> <definition>   -> model id
    dlaas model list | get <id> | update <id> <manifest.yml> | delete <id>
    dlaas train <model_id> [--learners N] [--gpus G] [--memory M]
    dlaas jobs list | get <tid> | halt <tid> | delete <tid>
    dlaas logs <tid> [--follow]
    dlaas metrics <tid> [--follow]
    dlaas download <tid> <dir>

Exit codes: 0 success, 1 API error, 2 connectivity/config, 3 usage.
Configuration precedence: flags > DLAAS_* environment > ~/.dlaas/config
(key=value lines). ``--output json`` makes stdout a single JSON document.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tarfile
from pathlib import Path

import requests

DEFAULT_ENDPOINT = "http://127.0.0.1:8320"
CONFIG_PATH = Path.home() / ".dlaas" / "config"

EXIT_OK = 0
EXIT_API = 1
EXIT_CONNECT = 2
EXIT_USAGE = 3


class UsageError(Exception):
    pass


class ApiCallError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; the contract is 3
        raise UsageError(message)


def load_file_config(path: Path | None = None) -> dict[str, str]:
    config: dict[str, str] = {}
    try:
        for line in (path or CONFIG_PATH).read_text(encoding="utf-8").splitlines():
            line = line.split("#", 1)[0].strip()
            if "=" in line:
                key, value = line.split("=", 1)
                config[key.strip()] = value.strip()
    except OSError:
        pass
    return config


def resolve_settings(args) -> dict:
    file_config = load_file_config()
    endpoint = (
        args.endpoint
        or os.environ.get("DLAAS_ENDPOINT")
        or os.environ.get("DLAAS_LISTEN_ADDR")
        or file_config.get("endpoint")
        or DEFAULT_ENDPOINT
    )
    if not endpoint.startswith("http"):
        endpoint = "http://" + endpoint
    token = args.token or os.environ.get("DLAAS_TOKEN") or file_config.get("token")
    output = args.output or file_config.get("output") or "table"
    return {"endpoint": endpoint.rstrip("/"), "token": token, "output": output}


class Client:
    def __init__(self, settings: dict):
        self.endpoint = settings["endpoint"]
        self.token = settings["token"]
        self.session = requests.Session()
        if self.token:
            self.session.headers["Authorization"] = f"Bearer {self.token}"

    def call(self, method: str, path: str, **kwargs):
        response = self.session.request(method, self.endpoint + path, timeout=60, **kwargs)
        if response.status_code >= 400:
            code, message = "HTTP_ERROR", response.text
            try:
                detail = response.json()
                if isinstance(detail, dict):
                    detail = detail.get("detail", detail)
                code = detail.get("code", code)
                message = detail.get("message", message)
            except (ValueError, AttributeError):
                pass
            raise ApiCallError(response.status_code, code, message)
        return response

    def ws_url(self, path: str, follow: bool = True) -> str:
        base = self.endpoint.replace("http://", "ws://").replace("https://", "wss://")
        url = f"{base}{path}?follow={'true' if follow else 'false'}"
        if self.token:
            url += f"&token={self.token}"
        return url


def emit(settings, doc: dict, table: str) -> None:
    if settings["output"] == "json":
        print(json.dumps(doc))
    else:
        print(table)


def job_table(jobs: list[dict]) -> str:
    header = f"{'TRAINING ID':<26} {'STATE':<10} {'LEARNERS':<8} {'SOLVER':<14} MODEL"
    rows = [
        f"{j['training_id']:<26} {j['state']:<10} {j['learners']:<8} {j['solver']:<14} {j['model_id']}"
        for j in jobs
    ]
    return "\n".join([header, *rows]) if rows else header + "\n(no jobs)"


# -- commands ---------------------------------------------------------------------


def cmd_model_deploy(client, settings, args) -> int:
    manifest = Path(args.manifest).read_text(encoding="utf-8")
    definition = Path(args.definition).read_bytes() if args.definition else b""
    import base64

    doc = client.call(
        "POST",
        "/v1/models",
        json={"manifest": manifest, "definition_b64": base64.b64encode(definition).decode()},
    ).json()
    emit(settings, doc, doc["model_id"])
    return EXIT_OK


def cmd_model_list(client, settings, args) -> int:
    doc = client.call("GET", "/v1/models").json()
    emit(settings, doc, "\n".join(doc["models"]) or "(no models)")
    return EXIT_OK


def cmd_model_get(client, settings, args) -> int:
    doc = client.call("GET", f"/v1/models/{args.model_id}").json()
    emit(settings, doc, doc["manifest"])
    return EXIT_OK


def cmd_model_update(client, settings, args) -> int:
    manifest = Path(args.manifest).read_text(encoding="utf-8")
    doc = client.call("PUT", f"/v1/models/{args.model_id}", json={"manifest": manifest}).json()
    emit(settings, doc, f"updated {args.model_id}")
    return EXIT_OK


def cmd_model_delete(client, settings, args) -> int:
    client.call("DELETE", f"/v1/models/{args.model_id}")
    emit(settings, {"deleted": args.model_id}, f"deleted {args.model_id}")
    return EXIT_OK


def cmd_train(client, settings, args) -> int:
    overrides = {}
    if args.learners is not None:
        overrides["learners"] = args.learners
    if args.gpus is not None:
        overrides["gpus"] = args.gpus
    if args.memory is not None:
        overrides["memory_mib"] = args.memory
    doc = client.call(
        "POST", "/v1/trainings", json={"model_id": args.model_id, "overrides": overrides}
    ).json()
    emit(settings, doc, doc["training_id"])
    return EXIT_OK


def cmd_jobs_list(client, settings, args) -> int:
    doc = client.call("GET", "/v1/trainings").json()
    emit(settings, doc, job_table(doc["trainings"]))
    return EXIT_OK


def cmd_jobs_get(client, settings, args) -> int:
    doc = client.call("GET", f"/v1/trainings/{args.training_id}").json()
    phases = {k: v.get("phase") for k, v in doc.get("learner_statuses", {}).items()}
    table = (
        f"id:      {doc['training_id']}\n"
        f"state:   {doc['state']}\n"
        f"model:   {doc['model_id']}\n"
        f"learners:{doc['learners']} solver:{doc['solver']}\n"
        f"phases:  {phases}\n"
        f"reason:  {doc.get('failure_reason') or '-'}"
    )
    emit(settings, doc, table)
    return EXIT_OK


def cmd_jobs_halt(client, settings, args) -> int:
    doc = client.call("POST", f"/v1/trainings/{args.training_id}/halt").json()
    emit(settings, doc, f"halting {args.training_id}")
    return EXIT_OK


def cmd_jobs_delete(client, settings, args) -> int:
    client.call("DELETE", f"/v1/trainings/{args.training_id}")
    emit(settings, {"deleted": args.training_id}, f"deleted {args.training_id}")
    return EXIT_OK


def _stream_ws(client, settings, args, endpoint: str, key: str) -> int:
    from websockets.sync.client import connect as ws_connect

    url = client.ws_url(f"/v1/trainings/{args.training_id}/{endpoint}", follow=args.follow)
    frames = []
    with ws_connect(url) as ws:
        while True:
            try:
                frame = ws.recv()
            except Exception:
                break
            if settings["output"] == "json":
                frames.append(frame)
            else:
                print(frame, flush=True)
    if settings["output"] == "json":
        print(json.dumps({"training_id": args.training_id, key: frames}))
    return EXIT_OK


def cmd_logs(client, settings, args) -> int:
    return _stream_ws(client, settings, args, "logs", "lines")


def cmd_metrics(client, settings, args) -> int:
    return _stream_ws(client, settings, args, "metrics", "records")


def cmd_download(client, settings, args) -> int:
    response = client.call("GET", f"/v1/trainings/{args.training_id}/result")
    dest = Path(args.dir)
    dest.mkdir(parents=True, exist_ok=True)
    names = []
    with tarfile.open(fileobj=io.BytesIO(response.content)) as tar:
        for member in tar.getmembers():
            tar.extract(member, dest)
            names.append(member.name)
    emit(
        settings,
        {"training_id": args.training_id, "files": names, "dir": str(dest)},
        "\n".join(str(dest / name) for name in names),
    )
    return EXIT_OK


# -- wiring ----------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="dlaas", description="training service client")
    parser.add_argument("--endpoint", help="API base URL")
    parser.add_argument("--token", help="bearer token")
    parser.add_argument("--output", choices=["table", "json"], default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    model = sub.add_parser("model", help="model registry operations")
    model_sub = model.add_subparsers(dest="subcommand", required=True)
    deploy = model_sub.add_parser("deploy")
    deploy.add_argument("manifest")
    deploy.add_argument("definition", nargs="?", default=None)
    deploy.set_defaults(fn=cmd_model_deploy)
    model_sub.add_parser("list").set_defaults(fn=cmd_model_list)
    get = model_sub.add_parser("get")
    get.add_argument("model_id")
    get.set_defaults(fn=cmd_model_get)
    update = model_sub.add_parser("update")
    update.add_argument("model_id")
    update.add_argument("manifest")
    update.set_defaults(fn=cmd_model_update)
    delete = model_sub.add_parser("delete")
    delete.add_argument("model_id")
    delete.set_defaults(fn=cmd_model_delete)

    train = sub.add_parser("train", help="create a training job")
    train.add_argument("model_id")
    train.add_argument("--learners", type=int)
    train.add_argument("--gpus", type=int)
    train.add_argument("--memory", type=int, help="memory per learner, MiB")
    train.set_defaults(fn=cmd_train)

    jobs = sub.add_parser("jobs", help="training job operations")
    jobs_sub = jobs.add_subparsers(dest="subcommand", required=True)
    jobs_sub.add_parser("list").set_defaults(fn=cmd_jobs_list)
    jget = jobs_sub.add_parser("get")
    jget.add_argument("training_id")
    jget.set_defaults(fn=cmd_jobs_get)
    jhalt = jobs_sub.add_parser("halt")
    jhalt.add_argument("training_id")
    jhalt.set_defaults(fn=cmd_jobs_halt)
    jdel = jobs_sub.add_parser("delete")
    jdel.add_argument("training_id")
    jdel.set_defaults(fn=cmd_jobs_delete)

    logs = sub.add_parser("logs", help="stream a job's raw log")
    logs.add_argument("training_id")
    logs.add_argument("--follow", action="store_true")
    logs.set_defaults(fn=cmd_logs)

    metrics = sub.add_parser("metrics", help="stream parsed metric records (JSON lines)")
    metrics.add_argument("training_id")
    metrics.add_argument("--follow", action="store_true")
    metrics.set_defaults(fn=cmd_metrics)

    download = sub.add_parser("download", help="download results into a directory")
    download.add_argument("training_id")
    download.add_argument("dir")
    download.set_defaults(fn=cmd_download)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    settings = resolve_settings(args)
    client = Client(settings)
    try:
        return args.fn(client, settings, args)
    except ApiCallError as exc:
        print(f"error {exc.status} {exc.code}: {exc}", file=sys.stderr)
        return EXIT_API
    except (requests.ConnectionError, requests.Timeout, ConnectionError, OSError) as exc:
        print(f"cannot reach {settings['endpoint']}: {exc}", file=sys.stderr)
        return EXIT_CONNECT


if __name__ == "__main__":
    sys.exit(main())
