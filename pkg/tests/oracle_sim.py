"""Single-process sequential simulator: the oracle for distributed BSP runs.

Replays the exact semantics of an L-learner model-averaging job in one
thread: identical seeded init, round-robin chunk assignment (chunk k ->
learner k mod L), batches in order within chunks, local SGD steps, an
averaging round every tau batches plus the end-of-epoch residual round,
sums in ascending learner order. A distributed run with deterministic
chunking must produce bit-identical final weights.
"""

from __future__ import annotations

import numpy as np


def simulate_bsp_model_avg(
    plugin,
    features: np.ndarray,
    labels: np.ndarray,
    learners: int,
    tau: int,
    batch_size: int,
    chunk: int,
    epochs: int,
    lr: float,
    seed: int,
) -> np.ndarray:
    total, dim = features.shape
    weights = [plugin.init_weights(dim, seed).copy() for _ in range(learners)]
    for _epoch in range(epochs):
        batches: list[list[tuple[int, int]]] = [[] for _ in range(learners)]
        for index, start in enumerate(range(0, total, chunk)):
            end = min(start + chunk, total)
            owner = index % learners
            for bs in range(start, end, batch_size):
                batches[owner].append((bs, min(bs + batch_size, end)))
        counts = {len(b) for b in batches}
        assert len(counts) == 1, f"fixture gives unequal per-learner batches: {counts}"
        per_learner = counts.pop()
        pos = 0
        while pos < per_learner:
            window = min(tau, per_learner - pos)
            for lid in range(learners):
                for bs, be in batches[lid][pos : pos + window]:
                    grad = plugin.gradient(weights[lid], features[bs:be], labels[bs:be])
                    weights[lid] -= lr * grad
            acc = np.zeros_like(weights[0])
            for lid in range(learners):
                acc += weights[lid]
            acc /= learners
            for lid in range(learners):
                weights[lid][:] = acc
            pos += window
    return weights[0]


def sequential_reference(
    plugin,
    features: np.ndarray,
    labels: np.ndarray,
    batch_size: int,
    epochs: int,
    lr: float,
    seed: int,
) -> np.ndarray:
    """Plain single-learner SGD over the full set, the convergence baseline."""
    total, dim = features.shape
    weights = plugin.init_weights(dim, seed).copy()
    for _epoch in range(epochs):
        for bs in range(0, total, batch_size):
            be = min(bs + batch_size, total)
            weights -= lr * plugin.gradient(weights, features[bs:be], labels[bs:be])
    return weights
