"""Watchdog sidecar: liveness heartbeats and status mirroring.

Runs beside the learner (or PS shard) in the same container/task. It owns
the ephemeral live node: while the watchdog heartbeats, the task counts
as alive; when the process dies the session stops heartbeating and the
node expires by TTL. Phase and iteration are mirrored into the status
znode at >= 1 Hz, immediately on phase transitions, and one final time on
graceful shutdown (so JOB_FAILED lands before the session closes).
"""

from __future__ import annotations

import json
import logging
import threading
import time

from dlaas.coordstore.client import CoordClient
from dlaas.coordstore.store import CoordError, NodeMode
from dlaas.layout import learner_status_path, live_path

logger = logging.getLogger(__name__)

PHASE_NOT_STARTED = "NOT_STARTED"
PHASE_DOWNLOADING = "DOWNLOADING"
PHASE_TRAINING = "TRAINING"
PHASE_UPLOADING = "UPLOADING"
PHASE_DONE = "DONE"
PHASE_JOB_FAILED = "JOB_FAILED"

TERMINAL_PHASES = {PHASE_DONE, PHASE_JOB_FAILED}


class LearnerState:
    """Shared phase/progress cell between the training loop and watchdog."""

    def __init__(self):
        self._mu = threading.Lock()
        self._dirty = threading.Event()
        self.phase = PHASE_NOT_STARTED
        self.iteration = 0
        self.epoch = 0
        self.epoch_done = -1
        self.clock = 0
        self.error: str | None = None

    def update(self, **fields) -> None:
        significant = False
        with self._mu:
            for key, value in fields.items():
                if key in ("phase", "epoch_done", "error") and getattr(self, key) != value:
                    significant = True
                setattr(self, key, value)
        if significant:
            self._dirty.set()

    def snapshot(self) -> dict:
        with self._mu:
            return {
                "phase": self.phase,
                "iteration": self.iteration,
                "epoch": self.epoch,
                "epoch_done": self.epoch_done,
                "clock": self.clock,
                "error": self.error,
                "ts": time.time(),
            }

    def consume_dirty(self, timeout: float) -> bool:
        flagged = self._dirty.wait(timeout)
        if flagged:
            self._dirty.clear()
        return flagged


def heartbeat_interval(ttl_ms: int) -> float:
    """TTL/3 heartbeat cadence, capped at 1 s to keep status >= 1 Hz."""
    return min(ttl_ms / 3000.0, 1.0)


class Watchdog:
    def __init__(
        self,
        coord: CoordClient,
        training_id: str,
        learner_id: int,
        task_id: str,
        state: LearnerState,
        interval: float | None = None,
        ttl_ms: int = 2000,
    ):
        self._coord = coord
        self._training_id = training_id
        self._learner_id = learner_id
        self._task_id = task_id
        self._state = state
        self._interval = interval if interval is not None else heartbeat_interval(ttl_ms)
        self._stop = threading.Event()
        self._graceful = True
        self._thread = threading.Thread(
            target=self._run, name=f"watchdog-{task_id}", daemon=True
        )

    def start(self) -> None:
        path = live_path(self._training_id, self._task_id)
        try:
            self._coord.create(path, b"", NodeMode.EPHEMERAL)
        except CoordError as exc:
            if exc.code != "ALREADY_EXISTS":
                raise
            # stale node from a crashed predecessor of this task id whose
            # session has not expired yet: take it over
            self._coord.delete(path)
            self._coord.create(path, b"", NodeMode.EPHEMERAL)
        self._mirror()
        self._thread.start()

    def _run(self) -> None:
        while not self._stop.is_set():
            self._state.consume_dirty(self._interval)
            if self._stop.is_set():
                break
            try:
                self._coord.heartbeat()
                self._mirror()
            except CoordError as exc:
                logger.warning("watchdog %s: %s", self._task_id, exc)

    def _mirror(self) -> None:
        path = learner_status_path(self._training_id, self._learner_id)
        payload = json.dumps(self._state.snapshot()).encode()
        try:
            self._coord.write(path, payload)
        except CoordError as exc:
            logger.warning("status mirror failed for %s: %s", self._task_id, exc)

    def stop(self, graceful: bool = True) -> None:
        """Graceful: final status write + session close (ephemerals reaped).
        Non-graceful: abandon the session so the live node expires by TTL."""
        self._stop.set()
        self._state._dirty.set()  # unblock the loop promptly
        self._thread.join(timeout=2.0)
        if graceful:
            try:
                self._mirror()
            except CoordError:
                pass
            self._coord.close()
        else:
            self._coord.abandon()
