#!/usr/bin/env python3
"""Regenerate the checked-in golden wire files in testdata/wire/."""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from dlaas.pserver.wire import MsgType, PSMessage, encode, job_wire_id, values_payload

OUT = pathlib.Path(__file__).resolve().parents[1] / "testdata" / "wire"

JOB = job_wire_id("training-00ddba11cafe")
VALUES = values_payload(np.array([1.5, -2.25, 3.125]))

MESSAGES = {
    "join.bin": PSMessage(MsgType.JOIN, job_id=JOB, learner_id=3, partition_id=0, clock=0),
    "leave.bin": PSMessage(MsgType.LEAVE, job_id=JOB, learner_id=3, partition_id=0, clock=9),
    "push.bin": PSMessage(
        MsgType.PUSH, job_id=JOB, learner_id=1, partition_id=2, clock=7, payload=VALUES
    ),
    "push_ack.bin": PSMessage(MsgType.PUSH_ACK, job_id=JOB, learner_id=1, partition_id=2, clock=8),
    "push_ack_elastic.bin": PSMessage(
        MsgType.PUSH_ACK, job_id=JOB, learner_id=1, partition_id=2, clock=8, payload=VALUES
    ),
    "pull.bin": PSMessage(MsgType.PULL, job_id=JOB, learner_id=0, partition_id=1, clock=4),
    "pull_resp.bin": PSMessage(
        MsgType.PULL_RESP, job_id=JOB, learner_id=0, partition_id=1, clock=4, payload=VALUES
    ),
    "error.bin": PSMessage(
        MsgType.ERROR, job_id=JOB, learner_id=5, partition_id=0, clock=2,
        payload=b"STALE_CLOCK",
    ),
}


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, msg in MESSAGES.items():
        (OUT / name).write_bytes(encode(msg))
        print(f"wrote {name} ({len(encode(msg))} bytes)")


if __name__ == "__main__":
    main()
