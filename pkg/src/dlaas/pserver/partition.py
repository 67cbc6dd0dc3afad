"""Deterministic even partitioning of the flat weight vector over shards.

Every learner of a job must compute the identical scheme, so this is pure
arithmetic on (model size, shard count): contiguous, disjoint, covering
ranges whose lengths differ by at most one.
"""

from __future__ import annotations

from dlaas.errors import DlaasError

DEFAULT_WEIGHTS_PER_SHARD = 4096


class InvalidShardsError(DlaasError):
    code = "INVALID_SHARDS"


def partition_model(model_size: int, shards: int) -> list[tuple[int, int]]:
    """Return [(offset, length)] for each of ``shards`` partitions."""
    if model_size < 1 or shards < 1 or shards > model_size:
        raise InvalidShardsError(f"W={model_size}, S={shards}")
    base, remainder = divmod(model_size, shards)
    ranges = []
    offset = 0
    for p in range(shards):
        length = base + (1 if p < remainder else 0)
        ranges.append((offset, length))
        offset += length
    return ranges


def default_shard_count(model_size: int) -> int:
    """One shard per 4096 weights, at least one, never more than W."""
    count = max(1, -(-model_size // DEFAULT_WEIGHTS_PER_SHARD))
    return min(count, model_size)
