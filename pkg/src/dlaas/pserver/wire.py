"""Framed binary wire protocol between learners and PS shards.

Message layout, little-endian throughout, no serialization layer beyond
this fixed header (payloads are raw f64 arrays moved as-is):

    magic "DLPS" | msg_type u8 | job_id 16 bytes | learner_id u32
    | partition_id u32 | clock u64 | payload_len u64 | payload

Transport framing over stream sockets: u32 total message length, then the
message. PUSH and PULL_RESP always carry an f64 payload; PUSH_ACK carries
one only when the solver returns a per-push correction (elastic term);
ERROR carries a UTF-8 error code. Everything else has payload_len 0.
"""

from __future__ import annotations

import socket
import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from dlaas.errors import DlaasError

MAGIC = b"DLPS"
HEADER = struct.Struct("<4sB16sIIQQ")
FRAME_LEN = struct.Struct("<I")
MAX_MESSAGE = 1 << 30


class WireError(DlaasError):
    code = "WIRE_ERROR"


class MsgType(IntEnum):
    JOIN = 1
    LEAVE = 2
    PUSH = 3
    PUSH_ACK = 4
    PULL = 5
    PULL_RESP = 6
    ERROR = 7


@dataclass(frozen=True)
class PSMessage:
    msg_type: MsgType
    job_id: bytes = b"\x00" * 16
    learner_id: int = 0
    partition_id: int = 0
    clock: int = 0
    payload: bytes = b""

    def values(self) -> np.ndarray:
        """Payload viewed as a little-endian f64 vector."""
        return np.frombuffer(self.payload, dtype="<f8")

    def error_code(self) -> str:
        return self.payload.decode("utf-8", "replace")


def job_wire_id(training_id: str) -> bytes:
    """16-byte wire form of a training id: its hex suffix, zero-padded."""
    tail = training_id.rsplit("-", 1)[-1].encode("ascii")[:16]
    return tail.ljust(16, b"\x00")


def values_payload(values: np.ndarray) -> bytes:
    return np.ascontiguousarray(values, dtype="<f8").tobytes()


def encode(msg: PSMessage) -> bytes:
    header = HEADER.pack(
        MAGIC,
        int(msg.msg_type),
        msg.job_id,
        msg.learner_id,
        msg.partition_id,
        msg.clock,
        len(msg.payload),
    )
    return header + msg.payload


def decode(buf: bytes) -> PSMessage:
    if len(buf) < HEADER.size:
        raise WireError(f"short message: {len(buf)} bytes")
    magic, msg_type, job_id, learner_id, partition_id, clock, payload_len = HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise WireError(f"bad magic {magic!r}")
    if len(buf) != HEADER.size + payload_len:
        raise WireError(f"payload length mismatch: {len(buf) - HEADER.size} != {payload_len}")
    try:
        kind = MsgType(msg_type)
    except ValueError:
        raise WireError(f"unknown msg_type {msg_type}") from None
    return PSMessage(
        msg_type=kind,
        job_id=job_id,
        learner_id=learner_id,
        partition_id=partition_id,
        clock=clock,
        payload=buf[HEADER.size :],
    )


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            raise ConnectionError("peer closed")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def send_message(sock: socket.socket, msg: PSMessage) -> None:
    buf = encode(msg)
    sock.sendall(FRAME_LEN.pack(len(buf)) + buf)


def recv_message(sock: socket.socket) -> PSMessage:
    (length,) = FRAME_LEN.unpack(_recv_exact(sock, FRAME_LEN.size))
    if length > MAX_MESSAGE:
        raise WireError(f"oversized frame {length}")
    return decode(_recv_exact(sock, length))
