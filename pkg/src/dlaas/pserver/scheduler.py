"""Two-queue aggregation scheduling.

The desk-scale stand-in for the CPU/GPU aggregation queue pair: two CPU
worker queues. A task goes to the queue minimizing (estimated compute
time + current queued wait); ties break to the lower index. Estimates are
exponential moving averages of observed durations bucketed by partition
size. Enqueue never blocks the calling (receiver) thread.

``choose_queue`` and ``simulate_makespan`` are pure so placement quality
is testable without wall-clock time.
"""

from __future__ import annotations

import collections
import threading
import time
from dataclasses import dataclass, field

DEFAULT_ESTIMATE_S = 1e-4
EMA_WEIGHT = 0.3
QUEUES = 2


def choose_queue(estimate: float, queue_waits: list[float]) -> int:
    costs = [wait + estimate for wait in queue_waits]
    return costs.index(min(costs))


def simulate_makespan(durations: list[float], chooser) -> float:
    """Virtual-time replay of a task stream through two queues.

    ``chooser(estimate, waits) -> queue index``; tasks arrive back to back
    and run for their given duration on whichever queue they land on.
    """
    free_at = [0.0] * QUEUES
    for duration in durations:
        idx = chooser(duration, list(free_at))
        free_at[idx] += duration
    return max(free_at)


@dataclass
class _Task:
    fn: object
    size: int
    done: threading.Event = field(default_factory=threading.Event)
    result: object = None
    error: BaseException | None = None

    def wait(self, timeout: float | None = None):
        if not self.done.wait(timeout):
            raise TimeoutError("aggregation task timed out")
        if self.error is not None:
            raise self.error
        return self.result


class AggregationScheduler:
    """Two worker threads, per-queue wait accounting, EMA duration model."""

    def __init__(self):
        self._mu = threading.Lock()
        self._queues: list[collections.deque[_Task]] = [collections.deque() for _ in range(QUEUES)]
        self._waits = [0.0] * QUEUES
        self._estimates: dict[int, float] = {}
        self._wakeups = [threading.Event() for _ in range(QUEUES)]
        self._stop = False
        self._workers = [
            threading.Thread(target=self._worker, args=(i,), name=f"agg-worker-{i}", daemon=True)
            for i in range(QUEUES)
        ]
        for worker in self._workers:
            worker.start()

    def estimate(self, size: int) -> float:
        with self._mu:
            return self._estimates.get(size, DEFAULT_ESTIMATE_S)

    def submit(self, fn, size: int) -> _Task:
        task = _Task(fn, size)
        with self._mu:
            est = self._estimates.get(size, DEFAULT_ESTIMATE_S)
            idx = choose_queue(est, self._waits)
            self._queues[idx].append(task)
            self._waits[idx] += est
            self._wakeups[idx].set()
        return task

    def _worker(self, idx: int) -> None:
        while True:
            self._wakeups[idx].wait(timeout=0.1)
            while True:
                with self._mu:
                    if self._stop:
                        return
                    if not self._queues[idx]:
                        self._wakeups[idx].clear()
                        break
                    task = self._queues[idx].popleft()
                started = time.perf_counter()
                try:
                    task.result = task.fn()
                except BaseException as exc:  # propagate to the waiter
                    task.error = exc
                duration = time.perf_counter() - started
                with self._mu:
                    est = self._estimates.get(task.size, DEFAULT_ESTIMATE_S)
                    self._waits[idx] = max(0.0, self._waits[idx] - est)
                    self._estimates[task.size] = (
                        (1 - EMA_WEIGHT) * est + EMA_WEIGHT * duration
                    )
                task.done.set()

    def close(self) -> None:
        with self._mu:
            self._stop = True
        for wakeup in self._wakeups:
            wakeup.set()
        for worker in self._workers:
            worker.join(timeout=2.0)
