"""Subprocess task entry point: ``python -m dlaas.taskmain <config.json>``.

Rebuilds the runtime services from the task config (TCP coordination
endpoint plus the shared filesystem store root) and runs the same body a
thread-mode task would. SIGTERM maps to an orderly kill; the cluster
signals abrupt faults with SIGKILL, which needs no handling here.
"""

from __future__ import annotations

import json
import logging
import signal
import sys

from dlaas.cluster.sim import ENDPOINT_SENTINEL, STARTED_SENTINEL, TaskContext
from dlaas.learner.runner import LearnerConfig
from dlaas.taskctl import TaskControl, TaskKilled
from dlaas.tasks import (
    PSShardTaskConfig,
    RuntimeServices,
    learner_task_body,
    ps_shard_task_body,
)


class _Spec:
    """Duck-typed stand-in for TaskSpec: bodies only read these fields."""

    def __init__(self, doc: dict):
        self.task_id = doc["task_id"]
        self.job_id = doc["job_id"]
        self.config_blob = doc["config"].encode("utf-8")


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr)
    argv = argv if argv is not None else sys.argv[1:]
    if len(argv) != 1:
        print("usage: python -m dlaas.taskmain <config.json>", file=sys.stderr)
        return 2
    with open(argv[0], encoding="utf-8") as fh:
        doc = json.load(fh)

    control = TaskControl()
    signal.signal(signal.SIGTERM, lambda *_: control.request_kill())

    def started(endpoint: str | None) -> None:
        if endpoint is not None:
            print(f"{ENDPOINT_SENTINEL}{endpoint}", flush=True)
        else:
            print(STARTED_SENTINEL, flush=True)

    ctx = TaskContext(
        task_id=doc["task_id"],
        job_id=doc["job_id"],
        node_id=doc.get("node_id", ""),
        assigned_gpus=doc.get("assigned_gpus", 0),
        control=control,
        _started_cb=started,
    )
    spec = _Spec(doc)
    kind = doc["kind"]
    if kind == "LEARNER":
        config = LearnerConfig.from_json(doc["config"])
        services = RuntimeServices.from_config(config.coord_addr, config.store_root)
        body = learner_task_body
    elif kind == "PS_SHARD":
        config = PSShardTaskConfig.from_json(doc["config"])
        services = RuntimeServices.from_config(config.coord_addr, config.store_root)
        body = ps_shard_task_body
    else:
        print(f"unknown task kind {kind}", file=sys.stderr)
        return 2
    try:
        body(spec, ctx, services)
    except TaskKilled:
        return 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
