"""Parameter server shard: global weight slice, trigger logic, TCP server.

A shard owns one contiguous partition of the flat weight vector. Receiver
threads record arriving payloads and evaluate the solver's trigger; the
actual aggregation runs on the two-queue scheduler's workers. Pushes are
acknowledged after their aggregation applies (synchronous push), and BSP
pulls block until the requested round has completed.

Membership is connection-aware so a crash-restarted learner can rejoin
under the same id (its stale pending payload is discarded) while a
genuine duplicate join on a live connection is refused.
"""

from __future__ import annotations

import logging
import socket
import socketserver
import threading
from dataclasses import dataclass

import numpy as np

from dlaas.pserver.aggregation import (
    AggregationPolicy,
    DuplicateLearnerError,
    PartitionMismatchError,
    PolicyKind,
    StaleClockError,
    UnknownLearnerError,
    apply_easgd,
    apply_model_average,
    apply_psgd,
)
from dlaas.pserver.scheduler import AggregationScheduler
from dlaas.pserver.wire import MsgType, PSMessage, recv_message, send_message, values_payload

logger = logging.getLogger(__name__)

PULL_WAIT_TIMEOUT_S = 60.0


@dataclass
class ShardStats:
    pushes_in: int = 0
    pulls_in: int = 0
    acks_out: int = 0
    pull_resps_out: int = 0
    data_msgs_in: int = 0
    data_msgs_out: int = 0
    errors_out: int = 0
    rounds_completed: int = 0


@dataclass
class _Member:
    learner_id: int
    conn_token: object
    alive: bool = True


class PSShard:
    def __init__(
        self,
        job_id: bytes,
        partition_id: int,
        offset: int,
        initial_values: np.ndarray,
        policy: AggregationPolicy,
        scheduler: AggregationScheduler | None = None,
    ):
        self.job_id = job_id
        self.partition_id = partition_id
        self.offset = offset
        self.values = np.array(initial_values, dtype=np.float64)
        self.policy = policy
        self._own_scheduler = scheduler is None
        self.scheduler = scheduler or AggregationScheduler()
        self._mu = threading.Lock()
        self._round_done = threading.Condition(self._mu)
        self.clock = 0
        self.pending: dict[int, np.ndarray] = {}
        self._members: dict[int, _Member] = {}
        self.stats = ShardStats()

    # -- membership ----------------------------------------------------------

    def join(self, learner_id: int, conn_token: object = None) -> None:
        with self._mu:
            member = self._members.get(learner_id)
            if member is not None and member.alive and member.conn_token is not conn_token:
                raise DuplicateLearnerError(str(learner_id))
            if member is not None and member.alive and member.conn_token is conn_token:
                raise DuplicateLearnerError(f"{learner_id} already joined")
            # fresh join, or rejoin after the previous connection died
            self.pending.pop(learner_id, None)
            self._members[learner_id] = _Member(learner_id, conn_token)

    def leave(self, learner_id: int) -> None:
        with self._mu:
            if learner_id not in self._members:
                raise UnknownLearnerError(str(learner_id))
            del self._members[learner_id]
            self.pending.pop(learner_id, None)

    def connection_lost(self, conn_token: object) -> None:
        with self._mu:
            for member in self._members.values():
                if member.conn_token is conn_token:
                    member.alive = False

    def _require_member(self, learner_id: int) -> None:
        if learner_id not in self._members:
            raise UnknownLearnerError(str(learner_id))

    # -- push / pull -----------------------------------------------------------

    def handle_push(self, msg: PSMessage) -> PSMessage:
        payload = msg.values()
        with self._mu:
            self._require_member(msg.learner_id)
            if msg.partition_id != self.partition_id or payload.shape != self.values.shape:
                raise PartitionMismatchError(
                    f"partition {msg.partition_id} len {payload.size} "
                    f"(own {self.partition_id} len {self.values.size})"
                )
            self.stats.pushes_in += 1
            self.stats.data_msgs_in += 1
            if self.policy.synchronous and msg.clock != self.clock:
                raise StaleClockError(f"push clock {msg.clock}, round {self.clock}")
            self.pending[msg.learner_id] = payload.copy()
            task = self._evaluate_trigger(msg.learner_id)
        elastic = task.wait(PULL_WAIT_TIMEOUT_S) if task is not None else None
        with self._mu:
            self.stats.acks_out += 1
            payload_out = b""
            if elastic is not None:
                payload_out = values_payload(elastic)
                self.stats.data_msgs_out += 1
            return PSMessage(
                MsgType.PUSH_ACK,
                job_id=self.job_id,
                learner_id=msg.learner_id,
                partition_id=self.partition_id,
                clock=self.clock,
                payload=payload_out,
            )

    def _evaluate_trigger(self, learner_id: int):
        """Called under the lock; returns the scheduled task or None."""
        expected = self.policy.expected_learners
        if self.policy.kind is PolicyKind.MODEL_AVG_BSP:
            if len(self.pending) < expected:
                return None
            batch = dict(self.pending)
            self.pending.clear()

            def aggregate_round():
                with self._mu:
                    apply_model_average(self.values, batch)
                    self.clock += 1
                    self.stats.rounds_completed += 1
                    self._round_done.notify_all()

            return self.scheduler.submit(aggregate_round, self.values.size)

        contribution = self.pending.pop(learner_id)
        if self.policy.kind is PolicyKind.PSGD:

            def aggregate_psgd():
                with self._mu:
                    apply_psgd(self.values, contribution, self.policy.learning_rate, expected)
                    self.clock += 1
                    self._round_done.notify_all()

            return self.scheduler.submit(aggregate_psgd, self.values.size)

        def aggregate_easgd():
            with self._mu:
                elastic = apply_easgd(self.values, contribution, self.policy.moving_rate)
                self.clock += 1
                self._round_done.notify_all()
                return elastic

        return self.scheduler.submit(aggregate_easgd, self.values.size)

    def handle_pull(self, msg: PSMessage) -> PSMessage:
        with self._mu:
            self._require_member(msg.learner_id)
            self.stats.pulls_in += 1
            if self.policy.synchronous:
                deadline = msg.clock
                while self.clock < deadline:
                    if not self._round_done.wait(PULL_WAIT_TIMEOUT_S):
                        raise StaleClockError(
                            f"round {deadline} never completed (at {self.clock})"
                        )
            snapshot = self.values.copy()
            clock = self.clock
            self.stats.pull_resps_out += 1
            self.stats.data_msgs_out += 1
        return PSMessage(
            MsgType.PULL_RESP,
            job_id=self.job_id,
            learner_id=msg.learner_id,
            partition_id=self.partition_id,
            clock=clock,
            payload=values_payload(snapshot),
        )

    def handle(self, msg: PSMessage, conn_token: object = None) -> PSMessage:
        """Dispatch one protocol message to a response message."""
        try:
            if msg.msg_type is MsgType.JOIN:
                self.join(msg.learner_id, conn_token)
                return PSMessage(
                    MsgType.PUSH_ACK,
                    job_id=self.job_id,
                    learner_id=msg.learner_id,
                    partition_id=self.partition_id,
                    clock=self.clock,
                )
            if msg.msg_type is MsgType.LEAVE:
                self.leave(msg.learner_id)
                return PSMessage(
                    MsgType.PUSH_ACK,
                    job_id=self.job_id,
                    learner_id=msg.learner_id,
                    partition_id=self.partition_id,
                    clock=self.clock,
                )
            if msg.msg_type is MsgType.PUSH:
                return self.handle_push(msg)
            if msg.msg_type is MsgType.PULL:
                return self.handle_pull(msg)
            raise UnknownLearnerError(f"unexpected message type {msg.msg_type}")
        except Exception as exc:
            code = getattr(exc, "code", "PS_ERROR")
            with self._mu:
                self.stats.errors_out += 1
            return PSMessage(
                MsgType.ERROR,
                job_id=self.job_id,
                learner_id=msg.learner_id,
                partition_id=self.partition_id,
                clock=self.clock,
                payload=code.encode("utf-8"),
            )

    def snapshot(self) -> tuple[np.ndarray, int]:
        with self._mu:
            return self.values.copy(), self.clock

    def close(self) -> None:
        if self._own_scheduler:
            self.scheduler.close()


class _ShardHandler(socketserver.BaseRequestHandler):
    server: "PSShardServer"

    def handle(self) -> None:
        token = object()
        sock: socket.socket = self.request
        try:
            while True:
                msg = recv_message(sock)
                send_message(sock, self.server.shard.handle(msg, token))
        except (ConnectionError, OSError):
            pass
        finally:
            self.server.shard.connection_lost(token)


class PSShardServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, shard: PSShard, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _ShardHandler)
        self.shard = shard
        self._thread: threading.Thread | None = None

    @property
    def endpoint(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> "PSShardServer":
        self._thread = threading.Thread(
            target=self.serve_forever, name=f"ps-shard-{self.shard.partition_id}", daemon=True
        )
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join(timeout=2.0)
        self.shard.close()
