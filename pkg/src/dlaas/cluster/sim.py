"""Simulated cluster manager: placement, restarts, fault injection.

Nodes are resource vectors (cpus / gpus / memory); tasks are placed
first-fit over nodes sorted by id, with a health guard that never puts a
GPU-demanding task on a node whose GPUs are marked unresponsive. Tasks
that do not fit wait in a FIFO queue (PENDING) instead of failing.
Crashed tasks are restarted automatically up to their restart budget,
preferring a different node. Task bodies run on threads by default; the
subprocess mode runs the same config through ``python -m dlaas.taskmain``.
"""

from __future__ import annotations

import json
import logging
import queue
import subprocess
import sys
import tempfile
import threading
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from dlaas.errors import DlaasError
from dlaas.taskctl import TaskControl, TaskCrashed, TaskKilled

logger = logging.getLogger(__name__)

ENDPOINT_SENTINEL = "DLAAS-ENDPOINT "
STARTED_SENTINEL = "DLAAS-STARTED"
DEFAULT_MAX_RESTARTS = 3
STARTUP_TIMEOUT_S = 30.0


class ClusterError(DlaasError):
    code = "CLUSTER_ERROR"


class TaskNotFoundError(ClusterError):
    code = "NOT_FOUND"


class DuplicateTaskError(ClusterError):
    code = "DUPLICATE_TASK"


class TaskState(str, Enum):
    PENDING = "PENDING"
    STAGING = "STAGING"
    RUNNING = "RUNNING"
    EXITED_OK = "EXITED_OK"
    CRASHED = "CRASHED"
    KILLED = "KILLED"


TERMINAL_STATES = {TaskState.EXITED_OK, TaskState.CRASHED, TaskState.KILLED}


class TaskKind(str, Enum):
    PS_SHARD = "PS_SHARD"
    LEARNER = "LEARNER"


@dataclass
class Demand:
    cpus: int = 1
    gpus: int = 0
    memory_mib: int = 256


@dataclass
class NodeSpec:
    node_id: str
    cpus: int
    gpus: int
    memory_mib: int
    gpu_healthy: bool = True

    def capacity(self) -> Demand:
        return Demand(self.cpus, self.gpus, self.memory_mib)


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    job_id: str
    kind: TaskKind
    demand: Demand
    config_blob: bytes = b""
    max_restarts: int = DEFAULT_MAX_RESTARTS
    run_mode: str = "thread"  # thread | subprocess


@dataclass
class TaskHandle:
    task_id: str
    job_id: str
    kind: TaskKind
    state: TaskState = TaskState.PENDING
    node_id: str | None = None
    endpoint: str | None = None
    restarts: int = 0


@dataclass(frozen=True)
class TaskEvent:
    task_id: str
    job_id: str
    state: TaskState
    node_id: str | None
    endpoint: str | None
    restarts: int


@dataclass
class TaskContext:
    """What a task body sees of its placement."""

    task_id: str
    job_id: str
    node_id: str
    assigned_gpus: int
    control: TaskControl
    _started_cb: object = None

    def check(self) -> None:
        self.control.check()

    def started(self, endpoint: str | None = None) -> None:
        if self._started_cb is not None:
            self._started_cb(endpoint)


class _Task:
    def __init__(self, spec: TaskSpec, handle: TaskHandle):
        self.spec = spec
        self.handle = handle
        self.control = TaskControl()
        self.thread: threading.Thread | None = None
        self.process: subprocess.Popen | None = None
        self.previous_node: str | None = None


class Subscription:
    def __init__(self):
        self._queue: "queue.Queue[TaskEvent]" = queue.Queue()

    def poll(self, timeout: float | None = None) -> TaskEvent | None:
        try:
            return self._queue.get(timeout=timeout)
        except queue.Empty:
            return None

    def drain(self) -> list[TaskEvent]:
        events = []
        while True:
            try:
                events.append(self._queue.get_nowait())
            except queue.Empty:
                return events


class ClusterSim:
    def __init__(self, nodes: list[NodeSpec]):
        self._mu = threading.RLock()
        self._nodes = {n.node_id: n for n in nodes}
        self._free = {n.node_id: replace(n.capacity()) for n in nodes}
        self._tasks: dict[str, _Task] = {}
        self._pending: list[str] = []
        self._runners: dict[TaskKind, object] = {}
        self._subs: dict[str, list[Subscription]] = {}
        self._closed = False

    # -- wiring --------------------------------------------------------------

    def register_runner(self, kind: TaskKind, factory) -> None:
        """factory(spec: TaskSpec, ctx: TaskContext) -> None, runs the body."""
        self._runners[kind] = factory

    # -- queries ---------------------------------------------------------------

    def get_task(self, task_id: str) -> TaskHandle:
        with self._mu:
            task = self._tasks.get(task_id)
            if task is None:
                raise TaskNotFoundError(task_id)
            return replace(task.handle)

    def tasks_for_job(self, job_id: str) -> list[TaskHandle]:
        with self._mu:
            return [
                replace(t.handle) for t in self._tasks.values() if t.handle.job_id == job_id
            ]

    def nodes(self) -> list[NodeSpec]:
        with self._mu:
            return [replace(n) for n in self._nodes.values()]

    def subscribe(self, job_id: str) -> Subscription:
        sub = Subscription()
        with self._mu:
            self._subs.setdefault(job_id, []).append(sub)
        return sub

    def assert_accounting(self) -> None:
        """Resource conservation: reservations equal live demand, within capacity."""
        with self._mu:
            for node_id, node in self._nodes.items():
                used = Demand(0, 0, 0)
                for task in self._tasks.values():
                    if (
                        task.handle.node_id == node_id
                        and task.handle.state in (TaskState.STAGING, TaskState.RUNNING)
                    ):
                        used.cpus += task.spec.demand.cpus
                        used.gpus += task.spec.demand.gpus
                        used.memory_mib += task.spec.demand.memory_mib
                free = self._free[node_id]
                assert used.cpus + free.cpus == node.cpus, node_id
                assert used.gpus + free.gpus == node.gpus, node_id
                assert used.memory_mib + free.memory_mib == node.memory_mib, node_id
                assert min(free.cpus, free.gpus, free.memory_mib) >= 0, node_id

    # -- lifecycle ---------------------------------------------------------------

    def launch(self, spec: TaskSpec) -> TaskHandle:
        with self._mu:
            if self._closed:
                raise ClusterError("cluster is shut down")
            if spec.task_id in self._tasks:
                raise DuplicateTaskError(spec.task_id)
            if spec.kind not in self._runners and spec.run_mode == "thread":
                raise ClusterError(f"no runner registered for {spec.kind}")
            task = _Task(spec, TaskHandle(spec.task_id, spec.job_id, spec.kind))
            self._tasks[spec.task_id] = task
            self._pending.append(spec.task_id)
            self._emit(task)
            self._dispatch()
            return replace(task.handle)

    def kill(self, task_id: str) -> None:
        with self._mu:
            task = self._require(task_id)
            if task.handle.state in TERMINAL_STATES:
                return
            if task.handle.state is TaskState.PENDING:
                self._pending.remove(task_id)
                self._set_state(task, TaskState.KILLED)
                return
            task.control.request_kill()
            if task.process is not None:
                task.process.terminate()

    def crash(self, task_id: str) -> None:
        """Fault injection: abrupt task death (restartable)."""
        with self._mu:
            task = self._require(task_id)
            if task.handle.state in TERMINAL_STATES or task.handle.state is TaskState.PENDING:
                return
            task.control.request_crash()
            if task.process is not None:
                task.process.kill()

    def crash_node(self, node_id: str) -> None:
        """Machine crash = every task on the node dies at once."""
        with self._mu:
            if node_id not in self._nodes:
                raise TaskNotFoundError(node_id)
            for task in list(self._tasks.values()):
                if task.handle.node_id == node_id and task.handle.state in (
                    TaskState.STAGING,
                    TaskState.RUNNING,
                ):
                    self.crash(task.handle.task_id)

    def mark_gpu_unhealthy(self, node_id: str) -> None:
        with self._mu:
            if node_id not in self._nodes:
                raise TaskNotFoundError(node_id)
            self._nodes[node_id].gpu_healthy = False

    def mark_gpu_healthy(self, node_id: str) -> None:
        with self._mu:
            if node_id not in self._nodes:
                raise TaskNotFoundError(node_id)
            self._nodes[node_id].gpu_healthy = True
            self._dispatch()

    def shutdown(self) -> None:
        with self._mu:
            self._closed = True
            for task_id in list(self._tasks):
                self.kill(task_id)
        for task in list(self._tasks.values()):
            if task.thread is not None:
                task.thread.join(timeout=5.0)

    # -- internals -----------------------------------------------------------------

    def _require(self, task_id: str) -> _Task:
        task = self._tasks.get(task_id)
        if task is None:
            raise TaskNotFoundError(task_id)
        return task

    def _fits(self, node_id: str, demand: Demand) -> bool:
        node = self._nodes[node_id]
        free = self._free[node_id]
        if demand.gpus > 0 and not node.gpu_healthy:
            return False
        return (
            free.cpus >= demand.cpus
            and free.gpus >= demand.gpus
            and free.memory_mib >= demand.memory_mib
        )

    def _dispatch(self) -> None:
        """Place as many pending tasks as capacity allows (FIFO)."""
        placed_any = True
        while placed_any:
            placed_any = False
            for task_id in list(self._pending):
                task = self._tasks[task_id]
                candidates = sorted(self._nodes)
                if task.previous_node in candidates and len(candidates) > 1:
                    # prefer a different node after a crash
                    candidates.remove(task.previous_node)
                    candidates.append(task.previous_node)
                target = next(
                    (n for n in candidates if self._fits(n, task.spec.demand)), None
                )
                if target is None:
                    continue
                self._pending.remove(task_id)
                self._reserve(target, task.spec.demand)
                task.handle.node_id = target
                task.handle.endpoint = None
                self._set_state(task, TaskState.STAGING)
                task.control = TaskControl()
                task.thread = threading.Thread(
                    target=self._run_task, args=(task,), name=f"task-{task_id}", daemon=True
                )
                task.thread.start()
                placed_any = True

    def _reserve(self, node_id: str, demand: Demand) -> None:
        free = self._free[node_id]
        free.cpus -= demand.cpus
        free.gpus -= demand.gpus
        free.memory_mib -= demand.memory_mib

    def _release(self, node_id: str, demand: Demand) -> None:
        free = self._free[node_id]
        free.cpus += demand.cpus
        free.gpus += demand.gpus
        free.memory_mib += demand.memory_mib

    def _set_state(self, task: _Task, state: TaskState) -> None:
        task.handle.state = state
        self._emit(task)

    def _emit(self, task: _Task) -> None:
        subs = self._subs.get(task.handle.job_id)
        if not subs:
            return
        event = TaskEvent(
            task.handle.task_id,
            task.handle.job_id,
            task.handle.state,
            task.handle.node_id,
            task.handle.endpoint,
            task.handle.restarts,
        )
        for sub in subs:
            sub._queue.put(event)

    def _run_task(self, task: _Task) -> None:
        spec = task.spec
        started = threading.Event()

        def on_started(endpoint: str | None) -> None:
            with self._mu:
                if endpoint is not None:
                    task.handle.endpoint = endpoint
                if task.handle.state is TaskState.STAGING:
                    self._set_state(task, TaskState.RUNNING)
            started.set()

        outcome = TaskState.EXITED_OK
        try:
            if spec.run_mode == "subprocess":
                outcome = self._run_subprocess(task, on_started)
            else:
                ctx = TaskContext(
                    task_id=spec.task_id,
                    job_id=spec.job_id,
                    node_id=task.handle.node_id,
                    assigned_gpus=spec.demand.gpus,
                    control=task.control,
                    _started_cb=on_started,
                )
                self._runners[spec.kind](spec, ctx)
        except TaskKilled:
            outcome = TaskState.KILLED
        except TaskCrashed:
            outcome = TaskState.CRASHED
        except BaseException as exc:  # body bug or injected fault
            logger.warning("task %s crashed: %s", spec.task_id, exc, exc_info=True)
            outcome = TaskState.CRASHED
        # kill/crash requested while the body exited normally still counts
        if task.control.crash_requested:
            outcome = TaskState.CRASHED
        elif task.control.kill_requested and outcome is TaskState.EXITED_OK:
            outcome = TaskState.KILLED

        with self._mu:
            self._release(task.handle.node_id, spec.demand)
            self._set_state(task, outcome)
            if outcome is TaskState.CRASHED and task.handle.restarts < spec.max_restarts:
                task.previous_node = task.handle.node_id
                task.handle.restarts += 1
                task.handle.node_id = None
                task.handle.state = TaskState.PENDING
                self._pending.append(spec.task_id)
                self._emit(task)
            self._dispatch()

    def _run_subprocess(self, task: _Task, on_started) -> TaskState:
        spec = task.spec
        doc = {
            "task_id": spec.task_id,
            "job_id": spec.job_id,
            "kind": spec.kind.value,
            "node_id": task.handle.node_id,
            "assigned_gpus": spec.demand.gpus,
            "config": spec.config_blob.decode("utf-8"),
        }
        with tempfile.NamedTemporaryFile(
            "w", suffix=".json", prefix=f"{spec.task_id}-", delete=False
        ) as fh:
            json.dump(doc, fh)
            config_path = fh.name
        process = subprocess.Popen(
            [sys.executable, "-m", "dlaas.taskmain", config_path],
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            text=True,
        )
        with self._mu:
            task.process = process
        for line in process.stdout:
            line = line.rstrip("\n")
            if line.startswith(ENDPOINT_SENTINEL):
                on_started(line[len(ENDPOINT_SENTINEL) :])
            elif line == STARTED_SENTINEL:
                on_started(None)
            else:
                logger.info("[%s] %s", spec.task_id, line)
        code = process.wait()
        Path(config_path).unlink(missing_ok=True)
        if task.control.crash_requested:
            return TaskState.CRASHED
        if task.control.kill_requested:
            return TaskState.KILLED
        return TaskState.EXITED_OK if code == 0 else TaskState.CRASHED
