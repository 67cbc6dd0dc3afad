"""Local platform assembly: every service wired into one process.

Boot order: object store, coordination store (plus its TCP front when
tasks run as subprocesses), cluster simulator with task runners, model
registry, lifecycle manager. ``restart_lcm`` swaps in a fresh LCM over
the same stores (the statelessness path); ``shutdown`` snapshots the
coordination store into the object store before closing.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from dlaas.cluster.sim import ClusterSim, NodeSpec, TaskKind
from dlaas.cluster.topology import default_topology
from dlaas.coordstore.store import CoordStore
from dlaas.coordstore.tcp import CoordTcpServer
from dlaas.lcm.manager import LcmConfig, LifecycleManager
from dlaas.objectstore.store import FilesystemStore, ObjectNotFoundError
from dlaas.registry.models import META_CONTAINER, ModelRegistry
from dlaas.tasks import RuntimeServices, learner_task_body, ps_shard_task_body

logger = logging.getLogger(__name__)

COORD_SNAPSHOT_KEY = "coordstore.snapshot"


@dataclass
class StackConfig:
    data_dir: str | os.PathLike
    nodes: list[NodeSpec] = field(default_factory=default_topology)
    token: str | None = None
    run_mode: str = "thread"  # thread | subprocess
    session_ttl_ms: int = 2000
    tick_interval: float = 0.5
    restore_coord_snapshot: bool = False
    lcm_overrides: dict = field(default_factory=dict)


class LocalStack:
    def __init__(self, config: StackConfig):
        self.config = config
        data_dir = Path(config.data_dir)
        self.store = FilesystemStore(data_dir / "objects")
        self.coord = CoordStore()
        if config.restore_coord_snapshot:
            try:
                self.coord.load_snapshot(self.store.get(META_CONTAINER, COORD_SNAPSHOT_KEY))
            except ObjectNotFoundError:
                pass
        self.coord_server: CoordTcpServer | None = None
        coord_addr = None
        if config.run_mode == "subprocess":
            self.coord_server = CoordTcpServer(self.coord).start()
            coord_addr = self.coord_server.address
        self.cluster = ClusterSim(config.nodes)
        services = RuntimeServices(store=self.store, coord_store=self.coord)
        self.cluster.register_runner(
            TaskKind.LEARNER, lambda spec, ctx: learner_task_body(spec, ctx, services)
        )
        self.cluster.register_runner(
            TaskKind.PS_SHARD, lambda spec, ctx: ps_shard_task_body(spec, ctx, services)
        )
        self.registry = ModelRegistry(self.store)
        self._lcm_config = LcmConfig(
            tick_interval=config.tick_interval,
            session_ttl_ms=config.session_ttl_ms,
            run_mode=config.run_mode,
            coord_addr=coord_addr,
            store_root=str(data_dir / "objects") if coord_addr else None,
            work_dir=str(data_dir / "work"),
            **config.lcm_overrides,
        )
        self.lcm = LifecycleManager(
            self.coord, self.store, self.cluster, self.registry, self._lcm_config
        )
        self.registry.set_in_use_probe(self.lcm.jobs_referencing)

    def restart_lcm(self, abrupt: bool = True) -> None:
        """Kill the LCM and attach a fresh instance to the same stores."""
        self.lcm.shutdown(abrupt=abrupt)
        self.lcm = LifecycleManager(
            self.coord, self.store, self.cluster, self.registry, self._lcm_config
        )
        self.registry.set_in_use_probe(self.lcm.jobs_referencing)
        self.lcm.recover_jobs()

    def shutdown(self) -> None:
        self.lcm.shutdown()
        self.cluster.shutdown()
        try:
            self.store.put(META_CONTAINER, COORD_SNAPSHOT_KEY, self.coord.dump_snapshot())
        except Exception as exc:  # snapshot is best effort
            logger.warning("coordstore snapshot failed: %s", exc)
        if self.coord_server is not None:
            self.coord_server.stop()
        self.coord.close()
