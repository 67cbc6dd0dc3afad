"""PS client library: the learner side of the push/pull protocol.

A client holds one TCP connection per shard, scatters pushes by the
shared partitioning scheme, and gathers pulls back into the full flat
weight vector. Push and pull are synchronous calls from the caller's
perspective.
"""

from __future__ import annotations

import socket
import threading
from dataclasses import dataclass

import numpy as np

from dlaas.errors import DlaasError
from dlaas.pserver.aggregation import (
    AggregationError,
    DuplicateLearnerError,
    PartitionMismatchError,
    StaleClockError,
    UnknownLearnerError,
)
from dlaas.pserver.partition import partition_model
from dlaas.pserver.wire import (
    MsgType,
    PSMessage,
    job_wire_id,
    recv_message,
    send_message,
    values_payload,
)

_ERROR_CLASSES = {
    cls.code: cls
    for cls in (
        UnknownLearnerError,
        DuplicateLearnerError,
        PartitionMismatchError,
        StaleClockError,
    )
}


class PSClientError(DlaasError):
    code = "PS_CLIENT_ERROR"


@dataclass
class ClientStats:
    pushes_out: int = 0
    pull_resps_in: int = 0
    data_msgs_out: int = 0
    data_msgs_in: int = 0


class PSClient:
    def __init__(
        self,
        training_id: str,
        learner_id: int,
        endpoints: list[str],
        model_size: int,
        timeout: float = 90.0,
    ):
        if not endpoints:
            raise PSClientError("no parameter server endpoints")
        self.job_id = job_wire_id(training_id)
        self.learner_id = learner_id
        self.endpoints = list(endpoints)
        self.partitions = partition_model(model_size, len(endpoints))
        self.model_size = model_size
        self._timeout = timeout
        self._socks: list[socket.socket] = []
        self._mu = threading.Lock()
        self.stats = ClientStats()

    # -- connection management -------------------------------------------------

    def connect(self) -> None:
        for endpoint in self.endpoints:
            host, port = endpoint.rsplit(":", 1)
            sock = socket.create_connection((host, int(port)), timeout=self._timeout)
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            self._socks.append(sock)
        for partition_id in range(len(self._socks)):
            self._roundtrip(partition_id, PSMessage(MsgType.JOIN, **self._ids(partition_id)))

    def leave(self) -> None:
        for partition_id in range(len(self._socks)):
            try:
                self._roundtrip(partition_id, PSMessage(MsgType.LEAVE, **self._ids(partition_id)))
            except (DlaasError, ConnectionError, OSError):
                pass

    def close(self) -> None:
        for sock in self._socks:
            try:
                sock.close()
            except OSError:
                pass
        self._socks.clear()

    # -- data plane ---------------------------------------------------------------

    def push(self, values: np.ndarray, clock: int) -> np.ndarray | None:
        """Scatter one full-vector contribution; returns the assembled
        correction vector when shard acks carry payloads (EASGD), else None."""
        if values.shape != (self.model_size,):
            raise PSClientError(f"push size {values.shape} != {self.model_size}")
        correction: np.ndarray | None = None
        for partition_id, (offset, length) in enumerate(self.partitions):
            msg = PSMessage(
                MsgType.PUSH,
                clock=clock,
                payload=values_payload(values[offset : offset + length]),
                **self._ids(partition_id),
            )
            with self._mu:
                self.stats.pushes_out += 1
                self.stats.data_msgs_out += 1
            ack = self._roundtrip(partition_id, msg)
            if ack.payload:
                if correction is None:
                    correction = np.zeros(self.model_size)
                correction[offset : offset + length] = ack.values()
                with self._mu:
                    self.stats.data_msgs_in += 1
        return correction

    def pull(self, clock: int) -> tuple[np.ndarray, int]:
        """Gather the full global vector; BSP blocks until round ``clock``."""
        out = np.empty(self.model_size)
        seen_clock = 0
        for partition_id, (offset, length) in enumerate(self.partitions):
            msg = PSMessage(MsgType.PULL, clock=clock, **self._ids(partition_id))
            resp = self._roundtrip(partition_id, msg)
            values = resp.values()
            if values.size != length:
                raise PSClientError(f"pull partition {partition_id}: {values.size} != {length}")
            out[offset : offset + length] = values
            seen_clock = max(seen_clock, resp.clock)
            with self._mu:
                self.stats.pull_resps_in += 1
                self.stats.data_msgs_in += 1
        return out, seen_clock

    # -- internals ------------------------------------------------------------------

    def _ids(self, partition_id: int) -> dict:
        return {
            "job_id": self.job_id,
            "learner_id": self.learner_id,
            "partition_id": partition_id,
        }

    def _roundtrip(self, partition_id: int, msg: PSMessage) -> PSMessage:
        sock = self._socks[partition_id]
        send_message(sock, msg)
        resp = recv_message(sock)
        if resp.msg_type is MsgType.ERROR:
            code = resp.error_code()
            raise _ERROR_CLASSES.get(code, AggregationError)(code, code=code)
        return resp
