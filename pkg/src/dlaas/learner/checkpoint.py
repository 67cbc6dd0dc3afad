"""Checkpoint binary format and complete-set discovery.

``learner-<id>.bin`` layout (little-endian):

    magic "DLCK" | version u16 | clock u64 | iteration u64 | W u64
    | W*f64 weights | rng_state 32 bytes | epoch u32 | cursor_hint u64

The checkpoint clock is the checkpoint index (iteration / cadence); a set
at clock k is *complete* when all L learner blobs plus the global-weights
blob exist, and recovery always picks the maximum complete clock.
``ps-global.bin`` is the raw f64 global vector.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass

import numpy as np

from dlaas.errors import DlaasError
from dlaas.objectstore.store import BlobStore

MAGIC = b"DLCK"
FORMAT_VERSION = 1
HEAD = struct.Struct("<4sHQQQ")
TAIL = struct.Struct("<IQ")
RNG_STATE_BYTES = 32

_CLOCK_RE = re.compile(r"ckpt/(\d+)/")


class CheckpointError(DlaasError):
    code = "CHECKPOINT_ERROR"


class NoCheckpointError(CheckpointError):
    code = "NO_CHECKPOINT"


@dataclass(frozen=True)
class Checkpoint:
    clock: int
    iteration: int
    weights: np.ndarray
    rng_state: bytes
    epoch: int
    cursor_hint: int

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Checkpoint)
            and self.clock == other.clock
            and self.iteration == other.iteration
            and np.array_equal(self.weights, other.weights)
            and self.rng_state == other.rng_state
            and self.epoch == other.epoch
            and self.cursor_hint == other.cursor_hint
        )


def pack_rng_state(rng: np.random.Generator) -> bytes:
    """32-byte capture of a PCG64 generator (state + inc, 128 bits each).

    A cached half-consumed 32-bit word is intentionally not captured; the
    restored generator resumes at the next whole draw.
    """
    state = rng.bit_generator.state["state"]
    return state["state"].to_bytes(16, "little") + state["inc"].to_bytes(16, "little")


def restore_rng(raw: bytes) -> np.random.Generator:
    if len(raw) != RNG_STATE_BYTES:
        raise CheckpointError(f"rng state must be {RNG_STATE_BYTES} bytes")
    bitgen = np.random.PCG64()
    bitgen.state = {
        "bit_generator": "PCG64",
        "state": {
            "state": int.from_bytes(raw[:16], "little"),
            "inc": int.from_bytes(raw[16:], "little"),
        },
        "has_uint32": 0,
        "uinteger": 0,
    }
    return np.random.Generator(bitgen)


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    weights = np.ascontiguousarray(ckpt.weights, dtype="<f8")
    head = HEAD.pack(MAGIC, FORMAT_VERSION, ckpt.clock, ckpt.iteration, weights.size)
    tail = TAIL.pack(ckpt.epoch, ckpt.cursor_hint)
    return head + weights.tobytes() + ckpt.rng_state + tail


def decode_checkpoint(blob: bytes) -> Checkpoint:
    if len(blob) < HEAD.size:
        raise CheckpointError("truncated checkpoint")
    magic, version, clock, iteration, size = HEAD.unpack_from(blob)
    if magic != MAGIC or version != FORMAT_VERSION:
        raise CheckpointError(f"bad header {magic!r} v{version}")
    expected = HEAD.size + 8 * size + RNG_STATE_BYTES + TAIL.size
    if len(blob) != expected:
        raise CheckpointError(f"size {len(blob)} != {expected}")
    weights = np.frombuffer(blob, dtype="<f8", count=size, offset=HEAD.size).copy()
    rng_off = HEAD.size + 8 * size
    rng_state = blob[rng_off : rng_off + RNG_STATE_BYTES]
    epoch, cursor_hint = TAIL.unpack_from(blob, rng_off + RNG_STATE_BYTES)
    return Checkpoint(clock, iteration, weights, rng_state, epoch, cursor_hint)


# -- object store keys ---------------------------------------------------------


def learner_ckpt_key(training_id: str, clock: int, learner_id: int) -> str:
    return f"{training_id}/ckpt/{clock}/learner-{learner_id}.bin"


def global_ckpt_key(training_id: str, clock: int) -> str:
    return f"{training_id}/ckpt/{clock}/ps-global.bin"


def latest_complete_clock(
    store: BlobStore, container: str, training_id: str, learners: int
) -> int | None:
    """Max clock with all L learner blobs plus the global blob, or None."""
    keys = set(store.list(container, f"{training_id}/ckpt/"))
    clocks = set()
    for key in keys:
        match = _CLOCK_RE.search(key)
        if match:
            clocks.add(int(match.group(1)))
    for clock in sorted(clocks, reverse=True):
        wanted = {learner_ckpt_key(training_id, clock, i) for i in range(learners)}
        wanted.add(global_ckpt_key(training_id, clock))
        if wanted <= keys:
            return clock
    return None


def load_learner_checkpoint(
    store: BlobStore, container: str, training_id: str, clock: int, learner_id: int
) -> Checkpoint:
    from dlaas.objectstore.store import ObjectNotFoundError

    try:
        blob = store.get(container, learner_ckpt_key(training_id, clock, learner_id))
    except ObjectNotFoundError:
        raise NoCheckpointError(f"clock {clock} learner {learner_id}") from None
    return decode_checkpoint(blob)


def load_global_weights(
    store: BlobStore, container: str, training_id: str, clock: int
) -> np.ndarray:
    from dlaas.objectstore.store import ObjectNotFoundError

    try:
        blob = store.get(container, global_ckpt_key(training_id, clock))
    except ObjectNotFoundError:
        raise NoCheckpointError(f"clock {clock} global") from None
    return np.frombuffer(blob, dtype="<f8").copy()
