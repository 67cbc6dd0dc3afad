"""Lifecycle manager: job state machine from submission to garbage collection.

The LCM deploys the parameter server first, reads its endpoints from the
cluster, publishes them in the coordination store, then launches the
learners. A monitor loop per job reads learner status znodes and counts
live ephemeral nodes to decide: completion, user-error termination
(JOB_FAILED), in-place cluster restarts, or full checkpoint recovery when
too few learners remain. All job state lives in the coordination store,
so destroying the LCM and recovering on a fresh instance resumes every
non-terminal job.
"""

from __future__ import annotations

import json
import logging
import math
import secrets
import threading
import time

from dlaas.cluster.sim import (
    ClusterSim,
    Demand,
    DuplicateTaskError,
    TaskKind,
    TaskSpec,
    TaskState,
    TERMINAL_STATES,
)
from dlaas.coordstore.store import (
    AlreadyExistsError,
    CoordStore,
    NotFoundError,
    StoreClosedError,
)
from dlaas.errors import DlaasError
from dlaas.layout import (
    JOBS_ROOT,
    control_path,
    cursor_path,
    cursor_root,
    job_root,
    learner_root,
    learner_status_path,
    learners_root,
    live_root,
    meta_path,
    ps_endpoint_path,
    ps_root,
    ps_shard_root,
    status_path,
)
from dlaas.learner.checkpoint import latest_complete_clock, load_global_weights
from dlaas.learner.cursor import default_chunk_size
from dlaas.learner.plugins import TrainerSpec, create_trainer, resolve_trainer_name
from dlaas.learner.runner import LearnerConfig, log_key, model_key
from dlaas.learner.watchdog import PHASE_DONE, PHASE_JOB_FAILED
from dlaas.lcm.jobs import (
    InvalidJobConfigError,
    InvalidOverrideError,
    InvalidStateError,
    JobConfig,
    JobNotFoundError,
    JobState,
    TERMINAL_JOB_STATES,
    TrainingJob,
    check_transition,
)
from dlaas.objectstore.dataset import dataset_info, store_results
from dlaas.objectstore.store import BlobStore, ObjectNotFoundError, StoreError
from dlaas.pserver.aggregation import PolicyKind
from dlaas.pserver.partition import default_shard_count, partition_model
from dlaas.registry.manifest import parse_manifest, serialize_manifest
from dlaas.registry.models import ModelRegistry
from dlaas.tasks import PSShardTaskConfig

logger = logging.getLogger(__name__)

INTERNAL_CONTAINER = "_dlaas_int"
OVERRIDABLE = {"learners", "gpus", "memory_mib"}

# definition-blob / framework.arguments keys that configure the job itself;
# everything else passes through to the trainer plugin as a hyperparam
_JOB_KEYS = {
    "epochs",
    "batch_size",
    "sync_every",
    "chunk_size",
    "learning_rate",
    "solver",
    "server_lr",
    "moving_rate",
    "seed",
    "deterministic_chunks",
    "checkpoint_every",
    "metric_every",
    "eval_samples",
    "shards",
}


def parse_job_settings(definition_blob: bytes, arguments: dict[str, str]) -> dict[str, str]:
    """Tolerant key=value / key: value extraction from the model definition
    text, overlaid with the manifest's framework arguments."""
    settings: dict[str, str] = {}
    try:
        text = definition_blob.decode("utf-8")
    except UnicodeDecodeError:
        text = ""
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, value = line.split(sep, 1)
                if key.strip() and " " not in key.strip():
                    settings[key.strip()] = value.strip()
                break
    settings.update(arguments)
    return settings


class LcmConfig:
    def __init__(
        self,
        tick_interval: float = 0.5,
        session_ttl_ms: int = 2000,
        recovery_budget: int = 3,
        learner_max_restarts: int = 3,
        run_mode: str = "thread",
        coord_addr: str | None = None,
        store_root: str | None = None,
        deploy_timeout_s: float = 60.0,
        halt_grace_s: float = 10.0,
        liveness_grace_s: float = 2.0,
        learner_cpus: int = 1,
        ps_cpus: int = 1,
        ps_memory_mib: int = 256,
        work_dir: str = "/tmp/dlaas-work",
    ):
        self.tick_interval = tick_interval
        self.session_ttl_ms = session_ttl_ms
        self.recovery_budget = recovery_budget
        self.learner_max_restarts = learner_max_restarts
        self.run_mode = run_mode
        self.coord_addr = coord_addr
        self.store_root = store_root
        self.deploy_timeout_s = deploy_timeout_s
        self.halt_grace_s = halt_grace_s
        self.liveness_grace_s = liveness_grace_s
        self.learner_cpus = learner_cpus
        self.ps_cpus = ps_cpus
        self.ps_memory_mib = ps_memory_mib
        self.work_dir = work_dir


class LifecycleManager:
    def __init__(
        self,
        coord: CoordStore,
        store: BlobStore,
        cluster: ClusterSim,
        registry: ModelRegistry,
        config: LcmConfig | None = None,
    ):
        self.coord = coord
        self.store = store
        self.cluster = cluster
        self.registry = registry
        self.config = config or LcmConfig()
        self._mu = threading.Lock()
        self._monitors: dict[str, threading.Thread] = {}
        self._stop = threading.Event()
        self._running_since: dict[str, float] = {}
        if not coord.exists(JOBS_ROOT):
            try:
                coord.create(JOBS_ROOT, b"")
            except AlreadyExistsError:
                pass

    # -- public API --------------------------------------------------------

    def submit(self, model_id: str, overrides: dict | None = None) -> str:
        overrides = dict(overrides or {})
        bad = set(overrides) - OVERRIDABLE
        if bad:
            raise InvalidOverrideError(f"only {sorted(OVERRIDABLE)} may be overridden, got {sorted(bad)}")
        record = self.registry.get_model(model_id)  # raises MODEL_NOT_FOUND
        config = self._build_job_config(record, overrides)
        training_id = "training-" + secrets.token_hex(6)
        job = TrainingJob(training_id, model_id, JobState.PENDING, config)
        self._create_job_nodes(job)
        self._save(job)
        self._spawn_deploy(job.training_id)
        return training_id

    def get_job(self, training_id: str) -> TrainingJob:
        job = self._load(training_id)
        job.learner_statuses = self._read_statuses(job)
        job.ps_endpoints = self._read_endpoints(job)
        return job

    def list_jobs(self) -> list[str]:
        try:
            return self.coord.list_children(JOBS_ROOT)
        except NotFoundError:
            return []

    def halt(self, training_id: str) -> None:
        job = self._load(training_id)
        if job.state is not JobState.RUNNING:
            raise InvalidStateError(f"halt requires RUNNING, job is {job.state.value}")
        self.coord.write(control_path(training_id), b"HALT")
        job.halt_requested_at = time.time()
        self._save(job)

    def delete_job(self, training_id: str) -> None:
        job = self._load(training_id)
        if job.state not in TERMINAL_JOB_STATES:
            raise InvalidStateError(f"delete requires a terminal job, got {job.state.value}")
        self.coord.delete_tree(job_root(training_id))

    def jobs_referencing(self, model_id: str) -> bool:
        for training_id in self.list_jobs():
            try:
                job = self._load(training_id)
            except JobNotFoundError:
                continue
            if job.model_id == model_id and job.state not in TERMINAL_JOB_STATES:
                return True
        return False

    def recover_jobs(self) -> list[str]:
        """Re-attach to every non-terminal job after an LCM restart."""
        resumed = []
        for training_id in self.list_jobs():
            try:
                job = self._load(training_id)
            except JobNotFoundError:
                continue
            if job.state in TERMINAL_JOB_STATES:
                continue
            resumed.append(training_id)
            if job.state is JobState.PENDING or job.state is JobState.DEPLOYING:
                self._spawn_deploy(training_id)
            else:
                self._running_since.setdefault(training_id, time.time())
                self._spawn_monitor(training_id)
        return resumed

    def shutdown(self, abrupt: bool = False) -> None:
        """abrupt=True models an LCM crash: monitors stop, jobs keep running."""
        self._stop.set()
        if not abrupt:
            for thread in list(self._monitors.values()):
                thread.join(timeout=5.0)

    # -- job config -------------------------------------------------------------

    def _build_job_config(self, record, overrides: dict) -> JobConfig:
        manifest = record.manifest
        learners = int(overrides.get("learners", manifest.learners))
        gpus = int(overrides.get("gpus", manifest.gpus))
        memory = int(overrides.get("memory_mib", manifest.memory_mib))
        if learners < 1:
            raise InvalidOverrideError("learners must be >= 1")
        if gpus < 0 or memory <= 0:
            raise InvalidOverrideError("gpus must be >= 0 and memory_mib > 0")

        settings = parse_job_settings(record.definition_blob, manifest.framework.arguments)
        hyperparams = {k: v for k, v in settings.items() if k not in _JOB_KEYS}

        def setting(key, default, cast):
            raw = settings.get(key)
            if raw is None:
                return default
            try:
                return cast(raw)
            except ValueError:
                raise InvalidJobConfigError(f"{key}={raw!r}") from None

        batch_size = setting("batch_size", 32, int)
        epochs = setting("epochs", 3, int)
        solver = setting("solver", PolicyKind.PSGD.value, str).upper()
        if solver not in {k.value for k in PolicyKind}:
            raise InvalidJobConfigError(f"solver={solver!r}")
        seed = setting("seed", 1234, int)

        count = dim = model_size = 0
        trainer_name = manifest.framework.name
        resolved = resolve_trainer_name(trainer_name)
        try:
            desc = dataset_info(self.store, manifest)
            count, dim = desc.count, desc.dim
        except (StoreError, DlaasError) as exc:
            logger.warning("dataset not inspectable at submit: %s", exc)
        if resolved is not None and dim:
            plugin = create_trainer(TrainerSpec(trainer_name, hyperparams))
            model_size = plugin.model_size(dim)

        chunk = setting("chunk_size", 0, int)
        if chunk <= 0:
            chunk = (
                default_chunk_size(count, learners, batch_size, gpus)
                if count
                else batch_size
            )
        deterministic = setting("deterministic_chunks", False, lambda v: v in ("1", "true", "True"))
        if solver == PolicyKind.MODEL_AVG_BSP.value and learners >= 2:
            # BSP rounds need equal per-learner push counts; round-robin
            # assignment plus clean divisibility guarantees them
            deterministic = True
            if chunk % batch_size:
                raise InvalidJobConfigError(
                    f"BSP requires chunk_size % batch_size == 0 ({chunk} % {batch_size})"
                )
            if count and count % (learners * chunk):
                raise InvalidJobConfigError(
                    f"BSP requires D % (L*chunk) == 0 ({count} % {learners * chunk})"
                )

        shards = setting("shards", 0, int)
        if shards <= 0:
            shards = default_shard_count(model_size) if model_size else 1
        shards = max(1, min(shards, model_size or 1))

        return JobConfig(
            learners=learners,
            gpus=gpus,
            memory_mib=memory,
            trainer_name=trainer_name,
            hyperparams=hyperparams,
            manifest_text=serialize_manifest(manifest),
            epochs=epochs,
            batch_size=batch_size,
            sync_every=setting("sync_every", 5, int),
            chunk_size=chunk,
            local_lr=setting("learning_rate", 0.1, float),
            solver=solver,
            server_lr=setting("server_lr", 0.1, float),
            moving_rate=setting("moving_rate", 0.5, float),
            seed=seed,
            deterministic_chunks=deterministic,
            checkpoint_every=setting("checkpoint_every", 100, int),
            metric_every=setting("metric_every", 10, int),
            eval_samples=setting("eval_samples", 512, int),
            dataset_count=count,
            dataset_dim=dim,
            model_size=model_size,
            shards=shards,
        )

    # -- persistence ---------------------------------------------------------------

    def _create_job_nodes(self, job: TrainingJob) -> None:
        tid = job.training_id
        self.coord.create(job_root(tid), b"")
        self.coord.create(meta_path(tid), job.to_json().encode())
        self.coord.create(status_path(tid), job.state.value.encode())
        self.coord.create(control_path(tid), b"")
        self.coord.create(learners_root(tid), b"")
        self.coord.create(live_root(tid), b"")
        self.coord.create(ps_root(tid), b"")
        self.coord.create(cursor_root(tid), b"")
        for learner_id in range(job.config.learners):
            self.coord.create(learner_root(tid, learner_id), b"")
            self.coord.create(
                learner_status_path(tid, learner_id),
                json.dumps({"phase": "NOT_STARTED", "iteration": 0, "epoch": 0,
                            "epoch_done": -1, "clock": 0, "error": None, "ts": time.time()}).encode(),
            )

    def _save(self, job: TrainingJob) -> None:
        self.coord.write(meta_path(job.training_id), job.to_json().encode())
        self.coord.write(status_path(job.training_id), job.state.value.encode())

    def _load(self, training_id: str) -> TrainingJob:
        try:
            raw, _ = self.coord.read(meta_path(training_id))
        except NotFoundError:
            raise JobNotFoundError(training_id) from None
        return TrainingJob.from_json(raw.decode())

    def _transition(self, job: TrainingJob, new: JobState, reason: str = "") -> None:
        check_transition(job.state, new)
        job.state = new
        if reason:
            job.failure_reason = reason
        if new in TERMINAL_JOB_STATES:
            job.completed_at = time.time()
        if new is JobState.RUNNING:
            self._running_since[job.training_id] = time.time()
        self._save(job)

    def _read_statuses(self, job: TrainingJob) -> dict[str, dict]:
        statuses = {}
        for learner_id in range(job.config.learners):
            try:
                raw, _ = self.coord.read(learner_status_path(job.training_id, learner_id))
                statuses[str(learner_id)] = json.loads(raw.decode())
            except (NotFoundError, ValueError):
                statuses[str(learner_id)] = {"phase": "NOT_STARTED", "iteration": 0,
                                             "epoch_done": -1}
        return statuses

    def _read_endpoints(self, job: TrainingJob) -> list[str]:
        endpoints = []
        for shard in range(job.config.shards):
            try:
                raw, _ = self.coord.read(ps_endpoint_path(job.training_id, shard))
                if raw:
                    endpoints.append(raw.decode())
            except NotFoundError:
                break
        return endpoints

    # -- deployment -----------------------------------------------------------------

    def _spawn_deploy(self, training_id: str) -> None:
        thread = threading.Thread(
            target=self._deploy, args=(training_id,), name=f"deploy-{training_id}", daemon=True
        )
        thread.start()

    def _spawn_monitor(self, training_id: str) -> None:
        with self._mu:
            if training_id in self._monitors and self._monitors[training_id].is_alive():
                return
            thread = threading.Thread(
                target=self._monitor_loop,
                args=(training_id,),
                name=f"monitor-{training_id}",
                daemon=True,
            )
            self._monitors[training_id] = thread
            thread.start()

    def _deploy(self, training_id: str) -> None:
        try:
            job = self._load(training_id)
            # the job stays PENDING while its tasks queue for capacity; the
            # transition to DEPLOYING happens on first placement (see
            # _await_running)
            self._deploy_tasks(job, resume_clock=None)
            job = self._load(training_id)
            if job.state is JobState.PENDING:
                self._transition(job, JobState.DEPLOYING)
                job = self._load(training_id)
            self._transition(job, JobState.RUNNING)
            self._spawn_monitor(training_id)
        except DlaasError as exc:
            logger.warning("deploy of %s failed: %s", training_id, exc)
            self._fail_deploy(training_id, str(exc))
        except AssertionError as exc:
            self._fail_deploy(training_id, f"deploy assertion: {exc}")

    def _fail_deploy(self, training_id: str, reason: str) -> None:
        try:
            job = self._load(training_id)
            if job.state in TERMINAL_JOB_STATES:
                return
            self._kill_job_tasks(job)
            self._upload_results(job)
            if job.state is JobState.PENDING:
                self._transition(job, JobState.DEPLOYING)
            self._transition(job, JobState.FAILED, reason)
        except DlaasError:
            logger.exception("could not mark %s failed", training_id)

    def _deploy_tasks(self, job: TrainingJob, resume_clock: int | None) -> None:
        """Launch PS shards first, then learners (idempotent by task id)."""
        config = job.config
        tid = job.training_id
        endpoints: list[str] = []
        if config.learners >= 2:
            if not config.model_size:
                raise InvalidJobConfigError(
                    "multi-learner job needs a sized model (dataset or trainer unavailable)"
                )
            initial = self._initial_global(job, resume_clock)
            ranges = partition_model(config.model_size, config.shards)
            handles = []
            for shard, (offset, length) in enumerate(ranges):
                ps_config = PSShardTaskConfig(
                    training_id=tid,
                    partition_id=shard,
                    offset=offset,
                    initial_values_b64=PSShardTaskConfig.encode_values(
                        initial[offset : offset + length]
                    ),
                    policy_kind=config.solver,
                    expected_learners=config.learners,
                    learning_rate=config.server_lr,
                    moving_rate=config.moving_rate,
                    session_ttl_ms=self.config.session_ttl_ms,
                    coord_addr=self.config.coord_addr,
                    store_root=self.config.store_root,
                )
                handles.append(
                    self._launch(
                        TaskSpec(
                            task_id=job.ps_task_id(shard),
                            job_id=tid,
                            kind=TaskKind.PS_SHARD,
                            demand=Demand(self.config.ps_cpus, 0, self.config.ps_memory_mib),
                            config_blob=ps_config.to_json().encode(),
                            max_restarts=0,  # PS state is in-memory: crash => full recovery
                            run_mode=self.config.run_mode,
                        )
                    )
                )
            self._await_running([h.task_id for h in handles], tid)
            for shard in range(config.shards):
                endpoint = self.cluster.get_task(job.ps_task_id(shard)).endpoint
                path = ps_endpoint_path(tid, shard)
                if not self.coord.exists(ps_shard_root(tid, shard)):
                    self.coord.create(ps_shard_root(tid, shard), b"")
                if self.coord.exists(path):
                    self.coord.write(path, endpoint.encode())
                else:
                    self.coord.create(path, endpoint.encode())
                endpoints.append(endpoint)

        if not self.coord.exists(cursor_path(tid, 0)):
            self.coord.create(cursor_path(tid, 0), b"0")

        learner_max_restarts = self.config.learner_max_restarts
        if config.solver == PolicyKind.MODEL_AVG_BSP.value and config.learners >= 2:
            learner_max_restarts = 0  # BSP rounds cannot absorb lone restarts
        learner_handles = []
        for learner_id in range(config.learners):
            learner_config = LearnerConfig(
                training_id=tid,
                learner_id=learner_id,
                learners=config.learners,
                trainer_name=config.trainer_name,
                manifest_text=config.manifest_text,
                hyperparams=config.hyperparams,
                epochs=config.epochs,
                batch_size=config.batch_size,
                sync_every=config.sync_every,
                chunk_size=config.chunk_size,
                local_lr=config.local_lr,
                solver=config.solver,
                ps_endpoints=endpoints,
                checkpoint_every=config.checkpoint_every,
                metric_every=config.metric_every,
                seed=config.seed,
                assigned_gpus=config.gpus,
                resume_from=resume_clock,
                deterministic_chunks=config.deterministic_chunks,
                eval_samples=config.eval_samples,
                internal_container=INTERNAL_CONTAINER,
                work_dir=f"{self.config.work_dir}/{tid}/learner-{learner_id}",
                session_ttl_ms=self.config.session_ttl_ms,
                coord_addr=self.config.coord_addr,
                store_root=self.config.store_root,
            )
            learner_handles.append(
                self._launch(
                    TaskSpec(
                        task_id=job.learner_task_id(learner_id),
                        job_id=tid,
                        kind=TaskKind.LEARNER,
                        demand=Demand(self.config.learner_cpus, config.gpus, config.memory_mib),
                        config_blob=learner_config.to_json().encode(),
                        max_restarts=learner_max_restarts,
                        run_mode=self.config.run_mode,
                    )
                )
            )
        self._await_running([h.task_id for h in learner_handles], tid)

    def _initial_global(self, job: TrainingJob, resume_clock: int | None):
        config = job.config
        if resume_clock is not None:
            return load_global_weights(
                self.store, INTERNAL_CONTAINER, job.training_id, resume_clock
            )
        plugin = create_trainer(TrainerSpec(config.trainer_name, config.hyperparams))
        return plugin.init_weights(config.dataset_dim, config.seed)

    def _launch(self, spec: TaskSpec):
        try:
            return self.cluster.launch(spec)
        except DuplicateTaskError:
            return self.cluster.get_task(spec.task_id)  # deploy resumption

    def _await_running(self, task_ids: list[str], training_id: str) -> None:
        """Wait for tasks to come up. Queued (unplaced) tasks wait without a
        deadline: insufficient capacity queues the job, it does not fail it.
        The deploy timeout runs per task from its placement."""
        pending = set(task_ids)
        placed_at: dict[str, float] = {}
        while pending:
            if self._stop.is_set():
                raise InvalidStateError("lcm stopped during deploy")
            now = time.monotonic()
            for task_id in list(pending):
                state = self.cluster.get_task(task_id).state
                if state is not TaskState.PENDING and task_id not in placed_at:
                    placed_at[task_id] = now
                    job = self._load(training_id)
                    if job.state is JobState.PENDING:
                        self._transition(job, JobState.DEPLOYING)
                if state in (TaskState.RUNNING, TaskState.EXITED_OK):
                    # EXITED_OK: very fast tasks can finish before a poll
                    # ever observes RUNNING; the monitor sorts out the rest
                    pending.discard(task_id)
                elif state is TaskState.KILLED:
                    raise InvalidJobConfigError(f"task {task_id} killed during deploy")
                elif (
                    task_id in placed_at
                    and now - placed_at[task_id] > self.config.deploy_timeout_s
                ):
                    # CRASHED flips to PENDING when restartable; a crash loop
                    # that never comes up lands here
                    raise InvalidJobConfigError(
                        f"task {task_id} not RUNNING within {self.config.deploy_timeout_s}s"
                    )
            if pending:
                time.sleep(0.02)

    # -- monitoring ---------------------------------------------------------------

    def _monitor_loop(self, training_id: str) -> None:
        backoff = 0.1
        while not self._stop.wait(self.config.tick_interval):
            try:
                job = self.monitor_tick(training_id)
                backoff = 0.1
            except StoreClosedError:
                time.sleep(min(backoff, 2.0))
                backoff *= 2
                continue
            except JobNotFoundError:
                return
            except DlaasError:
                logger.exception("monitor tick for %s", training_id)
                continue
            if job.state in TERMINAL_JOB_STATES:
                return

    def monitor_tick(self, training_id: str) -> TrainingJob:
        """One monitoring pass; returns the (possibly updated) job."""
        job = self._load(training_id)
        if job.state not in (JobState.DEPLOYING, JobState.RUNNING):
            return job
        config = job.config
        statuses = self._read_statuses(job)
        phases = [statuses[str(i)].get("phase") for i in range(config.learners)]

        # user error beats everything: terminate the job
        if PHASE_JOB_FAILED in phases:
            failed = [i for i, phase in enumerate(phases) if phase == PHASE_JOB_FAILED]
            reason = statuses[str(failed[0])].get("error") or "user error"
            self._finish(job, JobState.FAILED, f"learner {failed[0]}: {reason}")
            return self._load(training_id)

        if all(phase == PHASE_DONE for phase in phases):
            target = JobState.HALTED if self._halt_requested(job) else JobState.COMPLETED
            self._finish(job, target)
            return self._load(training_id)

        if self._halt_requested(job):
            started = job.halt_requested_at or 0.0
            live_done = all(
                phase == PHASE_DONE or self._task_dead(job, i)
                for i, phase in enumerate(phases)
            )
            if live_done or (time.time() - started) > self.config.halt_grace_s:
                self._finish(job, JobState.HALTED)
                return self._load(training_id)

        if job.state is JobState.RUNNING:
            self._liveness_policy(job, statuses, phases)
            job = self._load(training_id)
            if job.state in TERMINAL_JOB_STATES or job.state is JobState.DEPLOYING:
                return job
            self._advance_cursors(job, statuses)
        return self._load(training_id)

    def _halt_requested(self, job: TrainingJob) -> bool:
        try:
            data, _ = self.coord.read(control_path(job.training_id))
        except NotFoundError:
            return False
        return data == b"HALT"

    def _task_dead(self, job: TrainingJob, learner_id: int) -> bool:
        try:
            handle = self.cluster.get_task(job.learner_task_id(learner_id))
        except DlaasError:
            return True
        return handle.state in TERMINAL_STATES

    def _liveness_policy(self, job: TrainingJob, statuses: dict, phases: list) -> None:
        """Alive-fraction and restart-budget policy; may trigger recovery."""
        tid = job.training_id
        config = job.config
        since = self._running_since.get(tid)
        if since is None:
            self._running_since[tid] = time.time()
            return
        if time.time() - since < self.config.liveness_grace_s:
            return

        try:
            live = set(self.coord.list_children(live_root(tid)))
        except NotFoundError:
            live = set()
        alive = 0
        beyond_budget = False
        for learner_id in range(config.learners):
            task_id = job.learner_task_id(learner_id)
            if phases[learner_id] == PHASE_DONE or task_id in live:
                alive += 1
                continue
            try:
                handle = self.cluster.get_task(task_id)
            except DlaasError:
                continue
            if handle.state in (TaskState.PENDING, TaskState.STAGING):
                alive += 1  # restarting: give it its window
            elif handle.state is TaskState.CRASHED:
                beyond_budget = True
        for shard in range(config.shards if config.learners >= 2 else 0):
            try:
                handle = self.cluster.get_task(job.ps_task_id(shard))
            except DlaasError:
                continue
            if handle.state is TaskState.CRASHED:
                beyond_budget = True

        threshold = math.ceil(config.learners / 2)
        if beyond_budget or alive < threshold:
            logger.warning(
                "job %s: alive=%d/%d threshold=%d beyond_budget=%s -> recovery",
                tid, alive, config.learners, threshold, beyond_budget,
            )
            self.recover(tid)

    def _advance_cursors(self, job: TrainingJob, statuses: dict) -> None:
        config = job.config
        done = min(
            int(statuses[str(i)].get("epoch_done", -1)) for i in range(config.learners)
        )
        next_epoch = done + 1
        if 0 < next_epoch < config.epochs:
            path = cursor_path(job.training_id, next_epoch)
            if not self.coord.exists(path):
                try:
                    self.coord.create(path, b"0")
                except AlreadyExistsError:
                    pass

    # -- recovery -------------------------------------------------------------------

    def recover(self, training_id: str) -> None:
        """Full checkpoint recovery: kill everything, redeploy from the
        newest complete checkpoint (or scratch when none exists)."""
        job = self._load(training_id)
        if job.state in TERMINAL_JOB_STATES:
            return
        job.recoveries += 1
        if job.recoveries > self.config.recovery_budget:
            self._finish(job, JobState.FAILED, "recovery budget exhausted")
            return
        if job.state is JobState.RUNNING:
            self._transition(job, JobState.DEPLOYING)
        else:
            self._save(job)
        self._kill_job_tasks(job)
        job.generation += 1
        self._save(job)
        clock = latest_complete_clock(
            self.store, INTERNAL_CONTAINER, training_id, job.config.learners
        )
        logger.info("recovering %s from checkpoint clock %s", training_id, clock)
        try:
            self._deploy_tasks(job, resume_clock=clock)
            self._transition(job, JobState.RUNNING)
        except DlaasError as exc:
            self._fail_deploy(training_id, f"recovery failed: {exc}")

    def _kill_job_tasks(self, job: TrainingJob) -> None:
        for handle in self.cluster.tasks_for_job(job.training_id):
            self.cluster.kill(handle.task_id)
        deadline = time.monotonic() + 15.0
        while time.monotonic() < deadline:
            handles = self.cluster.tasks_for_job(job.training_id)
            if all(h.state in TERMINAL_STATES for h in handles):
                return
            time.sleep(0.02)
        logger.warning("tasks of %s slow to die; proceeding", job.training_id)

    # -- completion -------------------------------------------------------------------

    def _finish(self, job: TrainingJob, state: JobState, reason: str = "") -> None:
        # results land before the state flips: a reader that observes a
        # terminal state must find the merged log (and model) already there
        self._kill_job_tasks(job)
        self._upload_results(job)
        self._transition(job, state, reason)
        self._running_since.pop(job.training_id, None)

    def _merge_logs(self, job: TrainingJob) -> bytes:
        chunks = []
        for learner_id in range(job.config.learners):
            try:
                raw = self.store.get(
                    INTERNAL_CONTAINER, log_key(job.training_id, learner_id)
                )
            except ObjectNotFoundError:
                continue
            prefix = f"learner-{learner_id} | "
            for line in raw.decode("utf-8", "replace").splitlines():
                chunks.append(prefix + line)
        return ("\n".join(chunks) + "\n").encode() if chunks else b""

    def _upload_results(self, job: TrainingJob) -> None:
        tid = job.training_id
        log_blob = self._merge_logs(job)
        self.store.put(INTERNAL_CONTAINER, f"{tid}/training-log.txt", log_blob)
        model_blob = None
        try:
            model_blob = self.store.get(INTERNAL_CONTAINER, model_key(tid))
        except ObjectNotFoundError:
            pass
        try:
            manifest = parse_manifest(job.config.manifest_text, validate_framework=False)
            store_results(self.store, manifest, tid, model_blob, log_blob)
        except DlaasError as exc:
            logger.warning("user-store upload for %s failed: %s", tid, exc)
