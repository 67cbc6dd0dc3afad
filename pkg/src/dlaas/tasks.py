"""Task bodies: what actually runs inside a cluster task.

The same two bodies serve both run modes. In thread mode the stack
registers them as cluster runners with in-process service handles; in
subprocess mode ``dlaas.taskmain`` rebuilds the services from the task
config (TCP coordination endpoint + filesystem store root) and calls the
same functions.
"""

from __future__ import annotations

import base64
import json
import logging
from dataclasses import dataclass

import numpy as np

from dlaas.coordstore.client import CoordClient, LocalCoordClient
from dlaas.coordstore.store import CoordError, CoordStore, NodeMode
from dlaas.coordstore.tcp import TcpCoordClient
from dlaas.layout import live_path
from dlaas.learner.runner import LearnerConfig, run_learner
from dlaas.learner.watchdog import heartbeat_interval
from dlaas.objectstore.store import BlobStore, FilesystemStore
from dlaas.pserver.aggregation import AggregationPolicy, PolicyKind
from dlaas.pserver.shard import PSShard, PSShardServer
from dlaas.pserver.wire import job_wire_id
from dlaas.taskctl import TaskCrashed

logger = logging.getLogger(__name__)


@dataclass
class RuntimeServices:
    """Service handles a task body needs, for either run mode."""

    store: BlobStore
    coord_store: CoordStore | None = None
    coord_addr: str | None = None

    def coord_client(self, ttl_ms: int) -> CoordClient:
        if self.coord_store is not None:
            return LocalCoordClient(self.coord_store, ttl_ms)
        if self.coord_addr:
            return TcpCoordClient(self.coord_addr, ttl_ms)
        raise CoordError("no coordination store configured", code="NO_COORD")

    @classmethod
    def from_config(cls, coord_addr: str | None, store_root: str | None) -> "RuntimeServices":
        if not coord_addr or not store_root:
            raise CoordError(
                "subprocess tasks need coord_addr and store_root", code="NO_COORD"
            )
        return cls(store=FilesystemStore(store_root), coord_addr=coord_addr)


@dataclass
class PSShardTaskConfig:
    training_id: str
    partition_id: int
    offset: int
    initial_values_b64: str
    policy_kind: str
    expected_learners: int
    learning_rate: float = 0.1
    moving_rate: float = 0.5
    session_ttl_ms: int = 2000
    coord_addr: str | None = None
    store_root: str | None = None

    def to_json(self) -> str:
        return json.dumps(self.__dict__)

    @classmethod
    def from_json(cls, text: str) -> "PSShardTaskConfig":
        return cls(**json.loads(text))

    def initial_values(self) -> np.ndarray:
        return np.frombuffer(base64.b64decode(self.initial_values_b64), dtype="<f8").copy()

    @staticmethod
    def encode_values(values: np.ndarray) -> str:
        return base64.b64encode(
            np.ascontiguousarray(values, dtype="<f8").tobytes()
        ).decode("ascii")


def learner_task_body(spec, ctx, services: RuntimeServices) -> None:
    """Cluster runner body for LEARNER tasks."""
    config = LearnerConfig.from_json(spec.config_blob.decode("utf-8"))
    config.assigned_gpus = ctx.assigned_gpus
    coord = services.coord_client(config.session_ttl_ms)
    watchdog_coord = services.coord_client(config.session_ttl_ms)
    ctx.started()
    run_learner(config, coord, watchdog_coord, services.store, ctx.control, ctx.task_id)


def ps_shard_task_body(spec, ctx, services: RuntimeServices) -> None:
    """Cluster runner body for PS_SHARD tasks.

    Serves the shard until stopped, holding its own ephemeral live node
    and heartbeating like any other container's watchdog.
    """
    config = PSShardTaskConfig.from_json(spec.config_blob.decode("utf-8"))
    policy = AggregationPolicy(
        kind=PolicyKind(config.policy_kind),
        expected_learners=config.expected_learners,
        learning_rate=config.learning_rate,
        moving_rate=config.moving_rate,
    )
    shard = PSShard(
        job_wire_id(config.training_id),
        config.partition_id,
        config.offset,
        config.initial_values(),
        policy,
    )
    server = PSShardServer(shard).start()
    coord = services.coord_client(config.session_ttl_ms)
    try:
        coord.create(live_path(config.training_id, ctx.task_id), b"", NodeMode.EPHEMERAL)
    except CoordError as exc:
        logger.warning("ps shard %s live node: %s", ctx.task_id, exc)
    ctx.started(server.endpoint)
    graceful = True
    beat = heartbeat_interval(config.session_ttl_ms)
    try:
        while not ctx.control.wait_stop(beat):
            try:
                coord.heartbeat()
            except CoordError:
                pass
        ctx.check()  # raises TaskKilled / TaskCrashed per the injected flag
    except TaskCrashed:
        graceful = False
        raise
    finally:
        server.stop()
        if graceful:
            coord.close()
        else:
            coord.abandon()


def make_thread_runners(services: RuntimeServices):
    """Runner factories for ClusterSim.register_runner in thread mode."""

    def learner_runner(spec, ctx):
        learner_task_body(spec, ctx, services)

    def ps_runner(spec, ctx):
        ps_shard_task_body(spec, ctx, services)

    return {"LEARNER": learner_runner, "PS_SHARD": ps_runner}
