"""Learner runtime: the load -> train -> store lifecycle.

One learner task = this loop plus a watchdog thread. The loop stages the
dataset, restores the newest complete checkpoint when one exists, claims
data chunks through the global cursor, takes local SGD steps, syncs with
the parameter server every tau batches (solver-dependent payloads),
checkpoints on a fixed iteration cadence, and emits the metric log.

User-level faults (unknown trainer, malformed data, bad hyperparams) end
in a graceful JOB_FAILED status; injected kill/crash control flags unwind
through the cluster runner instead.
"""

from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from dlaas.coordstore.client import CoordClient
from dlaas.errors import DlaasError
from dlaas.layout import control_path
from dlaas.learner.checkpoint import (
    Checkpoint,
    encode_checkpoint,
    global_ckpt_key,
    latest_complete_clock,
    learner_ckpt_key,
    load_learner_checkpoint,
    pack_rng_state,
    restore_rng,
)
from dlaas.learner.cursor import claim_chunk, wait_for_cursor
from dlaas.learner.plugins import TrainerError, TrainerSpec, create_trainer
from dlaas.learner.watchdog import (
    PHASE_DONE,
    PHASE_DOWNLOADING,
    PHASE_JOB_FAILED,
    PHASE_TRAINING,
    PHASE_UPLOADING,
    LearnerState,
    Watchdog,
)
from dlaas.objectstore.dataset import decode_dataset, load_training_data
from dlaas.objectstore.store import BlobStore, StoreError
from dlaas.pserver.aggregation import PolicyKind
from dlaas.pserver.client import PSClient
from dlaas.registry.manifest import parse_manifest
from dlaas.taskctl import TaskControl

logger = logging.getLogger(__name__)

METRIC_LINE_RE = re.compile(r"^ITER (\d+) ")
RESUME_MARKER = "RESUMED FROM CHECKPOINT"


class UserJobError(DlaasError):
    """Faults caused by errors in user input: the JOB_FAILED path."""

    code = "USER_ERROR"


class HaltRequested(Exception):
    pass


@dataclass
class LearnerConfig:
    training_id: str
    learner_id: int
    learners: int
    trainer_name: str
    manifest_text: str
    hyperparams: dict[str, str] = field(default_factory=dict)
    epochs: int = 3
    batch_size: int = 32
    sync_every: int = 5
    chunk_size: int = 0  # 0 = sized by the LCM/cursor default
    local_lr: float = 0.1
    solver: str = PolicyKind.PSGD.value
    ps_endpoints: list[str] = field(default_factory=list)
    checkpoint_every: int = 100
    metric_every: int = 10
    seed: int = 1234
    assigned_gpus: int = 0
    resume_from: int | None = None
    deterministic_chunks: bool = False
    eval_samples: int = 512
    internal_container: str = "_dlaas_int"
    work_dir: str = "."
    session_ttl_ms: int = 2000
    coord_addr: str | None = None
    store_root: str | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "LearnerConfig":
        return cls(**json.loads(text))


class LearnerLog:
    """Append-only metric log mirrored into the object store per emit."""

    def __init__(self, store: BlobStore, container: str, training_id: str, learner_id: int):
        self._store = store
        self._container = container
        self._key = log_key(training_id, learner_id)
        self.lines: list[str] = []

    def load_existing(self) -> None:
        try:
            text = self._store.get(self._container, self._key).decode("utf-8")
            self.lines = text.splitlines()
        except StoreError:
            self.lines = []

    def truncate_to_iteration(self, iteration: int) -> None:
        """Drop everything after the last metric line with ITER <= iteration,
        keeping the per-learner iteration sequence monotone across a resume."""
        keep = 0
        for i, line in enumerate(self.lines):
            match = METRIC_LINE_RE.match(line)
            if match and int(match.group(1)) <= iteration:
                keep = i + 1
        self.lines = self.lines[:keep]

    def emit(self, line: str, flush: bool = True) -> None:
        self.lines.append(line)
        if flush:
            self.flush()

    def flush(self) -> None:
        blob = ("\n".join(self.lines) + "\n").encode("utf-8") if self.lines else b""
        try:
            self._store.put(self._container, self._key, blob)
        except StoreError as exc:
            logger.warning("log flush failed: %s", exc)


def metric_line(iteration: int, loss: float, acc: float, lr: float, ts_ms: int) -> str:
    return f"ITER {iteration} LOSS {loss!r} ACC {acc!r} LR {lr!r} TS {ts_ms}"


def model_key(training_id: str) -> str:
    return f"{training_id}/model.bin"


def log_key(training_id: str, learner_id: int) -> str:
    return f"{training_id}/logs/learner-{learner_id}.log"


class _Learner:
    def __init__(
        self,
        config: LearnerConfig,
        coord: CoordClient,
        store: BlobStore,
        control: TaskControl,
    ):
        self.cfg = config
        self.coord = coord
        self.store = store
        self.control = control
        self.state = LearnerState()
        self.log = LearnerLog(
            store, config.internal_container, config.training_id, config.learner_id
        )
        self.ps: PSClient | None = None
        self.round_no = 0
        self.grad_accum: np.ndarray | None = None
        self.batches_since_sync = 0
        self.weights: np.ndarray | None = None
        self.cursor_hint = 0

    # -- control -----------------------------------------------------------

    def _check(self) -> None:
        self.control.check()
        if self._halt_requested():
            raise HaltRequested()

    def _halt_requested(self) -> bool:
        try:
            data, _ = self.coord.read(control_path(self.cfg.training_id))
        except DlaasError:
            return False
        return data == b"HALT"

    # -- phases ------------------------------------------------------------

    def download(self):
        self.state.update(phase=PHASE_DOWNLOADING)
        try:
            manifest = parse_manifest(self.cfg.manifest_text, validate_framework=False)
            plugin = create_trainer(TrainerSpec(self.cfg.trainer_name, self.cfg.hyperparams))
            local, desc = load_training_data(
                self.store, manifest, Path(self.cfg.work_dir) / "data"
            )
            features, labels, _ = decode_dataset(local.read_bytes())
        except DlaasError as exc:
            raise UserJobError(str(exc)) from exc
        return plugin, features, labels

    def resume_or_init(self, plugin, dim: int):
        cfg = self.cfg
        model_size = plugin.model_size(dim)
        clock = cfg.resume_from
        if clock is None:
            clock = latest_complete_clock(
                self.store, cfg.internal_container, cfg.training_id, cfg.learners
            )
        if clock is not None:
            ckpt = load_learner_checkpoint(
                self.store, cfg.internal_container, cfg.training_id, clock, cfg.learner_id
            )
            if ckpt.weights.size != model_size:
                raise UserJobError(
                    f"checkpoint W={ckpt.weights.size} != model size {model_size}"
                )
            self.log.load_existing()
            self.log.truncate_to_iteration(ckpt.iteration)
            self.log.emit(
                f"{RESUME_MARKER} clock={ckpt.clock} iter={ckpt.iteration} epoch={ckpt.epoch}"
            )
            rng = restore_rng(ckpt.rng_state)
            self.state.update(iteration=ckpt.iteration, epoch=ckpt.epoch, clock=ckpt.clock)
            return ckpt.weights.copy(), rng, ckpt.epoch, ckpt.iteration
        rng = np.random.default_rng(cfg.seed)
        weights = plugin.init_weights(dim, cfg.seed)
        return weights, rng, 0, 0

    def connect_ps(self, model_size: int) -> None:
        if self.cfg.learners < 2:
            return
        if not self.cfg.ps_endpoints:
            raise UserJobError("multi-learner job without parameter server endpoints")
        self.ps = PSClient(
            self.cfg.training_id, self.cfg.learner_id, self.cfg.ps_endpoints, model_size
        )
        self.ps.connect()
        # adopt the server round so a restarted learner realigns with peers
        _, clock = self.ps.pull(clock=0)
        self.round_no = clock
        if self.cfg.solver == PolicyKind.PSGD.value:
            self.grad_accum = np.zeros(model_size)

    def sync(self) -> None:
        if self.ps is None or self.batches_since_sync == 0:
            return
        solver = self.cfg.solver
        if solver == PolicyKind.MODEL_AVG_BSP.value:
            self.ps.push(self.weights, clock=self.round_no)
            pulled, _ = self.ps.pull(clock=self.round_no + 1)
            self.weights[:] = pulled
        elif solver == PolicyKind.PSGD.value:
            self.ps.push(self.grad_accum, clock=self.round_no)
            self.grad_accum[:] = 0.0
            pulled, _ = self.ps.pull(clock=0)
            self.weights[:] = pulled
        elif solver == PolicyKind.EASGD.value:
            elastic = self.ps.push(self.weights, clock=self.round_no)
            if elastic is not None:
                self.weights -= elastic
        else:
            raise UserJobError(f"unknown solver {solver!r}")
        self.round_no += 1
        self.batches_since_sync = 0
        self.state.update(clock=self.round_no)

    def checkpoint(self, plugin, rng, iteration: int, epoch: int) -> None:
        cfg = self.cfg
        clock = iteration // cfg.checkpoint_every
        ckpt = Checkpoint(
            clock=clock,
            iteration=iteration,
            weights=self.weights,
            rng_state=pack_rng_state(rng),
            epoch=epoch,
            cursor_hint=self.cursor_hint,
        )
        self.store.put(
            cfg.internal_container,
            learner_ckpt_key(cfg.training_id, clock, cfg.learner_id),
            encode_checkpoint(ckpt),
        )
        if cfg.learner_id == 0:
            # checkpoint-coordinator duty: persist the global weights blob
            # that completes the set at this clock
            if self.ps is not None:
                global_values, _ = self.ps.pull(clock=self.round_no)
            else:
                global_values = self.weights
            self.store.put(
                cfg.internal_container,
                global_ckpt_key(cfg.training_id, clock),
                np.ascontiguousarray(global_values, dtype="<f8").tobytes(),
            )

    def train(self, plugin, features, labels, rng, start_epoch: int, iteration: int):
        cfg = self.cfg
        self.state.update(phase=PHASE_TRAINING)
        total = features.shape[0]
        eval_n = min(total, cfg.eval_samples)
        eval_x, eval_y = features[:eval_n], labels[:eval_n]
        chunk = cfg.chunk_size
        if chunk < cfg.batch_size:
            raise UserJobError(f"chunk size {chunk} < batch size {cfg.batch_size}")

        for epoch in range(start_epoch, cfg.epochs):
            self.state.update(epoch=epoch)
            wait_for_cursor(self.coord, cfg.training_id, epoch, stop_check=self.control.check)
            while True:
                self._check()
                claim = claim_chunk(
                    self.coord,
                    cfg.training_id,
                    epoch,
                    chunk,
                    total,
                    learner_id=cfg.learner_id,
                    learners=cfg.learners,
                    deterministic=cfg.deterministic_chunks,
                    stop_check=self.control.check,
                )
                if claim is None:
                    break
                start, end = claim
                self.cursor_hint = end
                for batch_start in range(start, end, cfg.batch_size):
                    batch_end = min(batch_start + cfg.batch_size, end)
                    xb = features[batch_start:batch_end]
                    yb = labels[batch_start:batch_end]
                    try:
                        grad = plugin.gradient(self.weights, xb, yb)
                    except (TrainerError, ValueError, FloatingPointError) as exc:
                        raise UserJobError(f"gradient failed: {exc}") from exc
                    if self.grad_accum is not None:
                        self.grad_accum += grad
                    self.weights -= cfg.local_lr * grad
                    iteration += 1
                    self.batches_since_sync += 1
                    self.state.update(iteration=iteration)
                    if self.batches_since_sync == cfg.sync_every:
                        self.sync()
                    if cfg.metric_every and iteration % cfg.metric_every == 0:
                        scores = plugin.metrics(self.weights, eval_x, eval_y)
                        self.log.emit(
                            metric_line(
                                iteration,
                                scores["loss"],
                                scores["accuracy"],
                                cfg.local_lr,
                                int(time.time() * 1000),
                            )
                        )
                        self._check()
                    if cfg.checkpoint_every and iteration % cfg.checkpoint_every == 0:
                        self.checkpoint(plugin, rng, iteration, epoch)
                        self._check()
            # pass complete for this learner: residual sync keeps the
            # pushes-per-epoch = ceil(batches/tau) cadence
            self.sync()
            self.state.update(epoch_done=epoch)
        return iteration

    def upload(self, final: bool = True) -> None:
        cfg = self.cfg
        self.state.update(phase=PHASE_UPLOADING)
        if cfg.learner_id == 0 and self.weights is not None:
            model = self.weights
            if self.ps is not None and cfg.solver != PolicyKind.MODEL_AVG_BSP.value:
                try:
                    model, _ = self.ps.pull(clock=self.round_no)
                except DlaasError:
                    model = self.weights
            self.store.put(
                cfg.internal_container,
                model_key(cfg.training_id),
                np.ascontiguousarray(model, dtype="<f8").tobytes(),
            )
        self.log.flush()

    # -- top level ------------------------------------------------------------

    def run(self, task_id: str, watchdog_coord: CoordClient) -> str:
        cfg = self.cfg
        watchdog = Watchdog(
            watchdog_coord, cfg.training_id, cfg.learner_id, task_id, self.state,
            ttl_ms=cfg.session_ttl_ms,
        )
        watchdog.start()
        graceful = True
        try:
            plugin, features, labels = self.download()
            self.weights, rng, start_epoch, iteration = self.resume_or_init(
                plugin, features.shape[1]
            )
            self.connect_ps(plugin.model_size(features.shape[1]))
            try:
                self.train(plugin, features, labels, rng, start_epoch, iteration)
            except HaltRequested:
                self.log.emit("HALTED BY OPERATOR")
                self.checkpoint(plugin, rng, self.state.iteration, self.state.epoch)
            self.upload()
            self.state.update(phase=PHASE_DONE)
            return PHASE_DONE
        except UserJobError as exc:
            logger.warning("learner %s user error: %s", cfg.learner_id, exc)
            self.log.emit(f"ERROR {exc.code}: {exc}")
            self.log.flush()
            self.state.update(phase=PHASE_JOB_FAILED, error=str(exc))
            return PHASE_JOB_FAILED
        except BaseException:
            graceful = False
            raise
        finally:
            if self.ps is not None:
                if graceful:
                    self.ps.leave()
                self.ps.close()
            watchdog.stop(graceful=graceful)


def run_learner(
    config: LearnerConfig,
    coord: CoordClient,
    watchdog_coord: CoordClient,
    store: BlobStore,
    control: TaskControl,
    task_id: str,
) -> str:
    """Execute one learner task to a terminal phase (DONE or JOB_FAILED).

    ``coord``/``watchdog_coord`` are two independent sessions: a stalled
    data-plane call must not stop liveness heartbeats.
    """
    learner = _Learner(config, coord, store, control)
    try:
        return learner.run(task_id, watchdog_coord)
    finally:
        try:
            coord.close()
        except DlaasError:
            pass
