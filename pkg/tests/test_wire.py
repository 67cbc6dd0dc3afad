"""Wire codec: golden bytes, round trips, framing."""

import pathlib
import socket
import threading

import numpy as np
import pytest

from dlaas.pserver.wire import (
    HEADER,
    MsgType,
    PSMessage,
    WireError,
    decode,
    encode,
    job_wire_id,
    recv_message,
    send_message,
    values_payload,
)
from tools.gen_wire_golden import MESSAGES

GOLDEN_DIR = pathlib.Path(__file__).resolve().parents[1] / "testdata" / "wire"


@pytest.mark.parametrize("name", sorted(MESSAGES))
def test_golden_bytes(name):
    """Every message type encodes to the checked-in golden bytes."""
    msg = MESSAGES[name]
    golden = (GOLDEN_DIR / name).read_bytes()
    assert encode(msg) == golden
    assert decode(golden) == msg


def test_header_layout():
    msg = MESSAGES["push.bin"]
    raw = encode(msg)
    assert raw[:4] == b"DLPS"
    assert raw[4] == 3  # PUSH
    assert raw[5:21] == job_wire_id("training-00ddba11cafe")
    assert len(raw) == HEADER.size + 3 * 8


def test_payload_is_raw_little_endian_f64():
    values = np.array([1.0, -0.5, 2.0 ** -40])
    msg = PSMessage(MsgType.PULL_RESP, payload=values_payload(values))
    assert msg.payload == values.astype("<f8").tobytes()
    assert np.array_equal(decode(encode(msg)).values(), values)


def test_round_trip_random_payloads():
    rng = np.random.default_rng(5)
    for _ in range(200):
        values = rng.normal(size=rng.integers(0, 64))
        msg = PSMessage(
            MsgType(int(rng.integers(1, 8))),
            job_id=bytes(rng.integers(0, 256, size=16, dtype=np.uint8)),
            learner_id=int(rng.integers(0, 2**32)),
            partition_id=int(rng.integers(0, 2**32)),
            clock=int(rng.integers(0, 2**63)),
            payload=values_payload(values),
        )
        assert decode(encode(msg)) == msg


def test_decode_rejects_bad_magic():
    raw = bytearray(encode(MESSAGES["join.bin"]))
    raw[0] = ord("X")
    with pytest.raises(WireError):
        decode(bytes(raw))


def test_decode_rejects_length_mismatch():
    raw = encode(MESSAGES["push.bin"])
    with pytest.raises(WireError):
        decode(raw[:-1])


def test_framed_socket_round_trip():
    server, client = socket.socketpair()
    received = []

    def serve():
        received.append(recv_message(server))
        send_message(server, MESSAGES["pull_resp.bin"])

    t = threading.Thread(target=serve)
    t.start()
    send_message(client, MESSAGES["push.bin"])
    reply = recv_message(client)
    t.join()
    assert received[0] == MESSAGES["push.bin"]
    assert reply == MESSAGES["pull_resp.bin"]
    server.close()
    client.close()


def test_job_wire_id_is_16_bytes():
    assert len(job_wire_id("training-0123456789ab")) == 16
    assert job_wire_id("training-0123456789ab").startswith(b"0123456789ab")
