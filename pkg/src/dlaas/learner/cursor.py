"""Global-cursor work allocation.

Learners self-assign mutually exclusive sample ranges by atomically
incrementing the per-epoch cursor counter by their chunk size. In
deterministic mode (required for bit-reproducible BSP runs) a learner
only claims when the cursor sits at a chunk index congruent to its id
modulo L, so chunk k always lands on learner k mod L while exclusivity
still comes from the atomic increment.
"""

from __future__ import annotations

import time

from dlaas.coordstore.client import CoordClient
from dlaas.errors import DlaasError
from dlaas.layout import cursor_path


class CursorError(DlaasError):
    code = "CURSOR_ERROR"


def wait_for_cursor(
    coord: CoordClient,
    training_id: str,
    epoch: int,
    stop_check=None,
    timeout: float = 120.0,
    poll_interval: float = 0.01,
) -> None:
    """Spin until the LCM creates this epoch's cursor node."""
    path = cursor_path(training_id, epoch)
    deadline = time.monotonic() + timeout
    while not coord.exists(path):
        if stop_check is not None:
            stop_check()
        if time.monotonic() > deadline:
            raise CursorError(f"cursor for epoch {epoch} never appeared")
        time.sleep(poll_interval)


def claim_chunk(
    coord: CoordClient,
    training_id: str,
    epoch: int,
    chunk_size: int,
    total_samples: int,
    learner_id: int = 0,
    learners: int = 1,
    deterministic: bool = False,
    stop_check=None,
    poll_interval: float = 0.002,
) -> tuple[int, int] | None:
    """Claim the next exclusive sample range [start, end).

    Returns None once the cursor has passed the dataset end (this
    learner's share of the pass is complete).
    """
    if chunk_size < 1:
        raise CursorError(f"chunk_size {chunk_size}")
    path = cursor_path(training_id, epoch)
    while True:
        if deterministic:
            value = int(coord.read(path)[0])
            if (value // chunk_size) % learners != learner_id:
                if stop_check is not None:
                    stop_check()
                time.sleep(poll_interval)
                continue
        pre, _post = coord.atomic_increment(path, chunk_size)
        break
    if pre >= total_samples:
        return None
    return pre, min(pre + chunk_size, total_samples)


def default_chunk_size(
    total_samples: int, learners: int, batch_size: int, assigned_gpus: int = 0
) -> int:
    """ceil(D / 4L), rounded up to a batch multiple, scaled by GPU share."""
    base = -(-total_samples // (4 * learners))
    base *= 1 + assigned_gpus
    if base % batch_size:
        base += batch_size - (base % batch_size)
    return max(base, batch_size)
