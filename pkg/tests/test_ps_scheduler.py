"""Aggregation queue placement and scheduler behavior."""

import random
import time

from dlaas.pserver import AggregationScheduler, choose_queue, simulate_makespan


def test_tie_breaks_to_lower_index():
    assert choose_queue(1.0, [0.0, 0.0]) == 0


def test_prefers_idle_queue():
    # queue 0 has 10 ms backlog, queue 1 idle, task costs 1 ms
    assert choose_queue(0.001, [0.010, 0.0]) == 1


def test_makespan_no_worse_than_single_queue():
    """100 random task mixes: cost-aware placement beats always-queue-0."""
    rng = random.Random(17)
    for _ in range(100):
        durations = [rng.uniform(0.1, 10.0) for _ in range(100)]
        smart = simulate_makespan(durations, choose_queue)
        naive = simulate_makespan(durations, lambda est, waits: 0)
        assert smart <= naive


def test_scheduler_runs_tasks_and_learns_estimates():
    scheduler = AggregationScheduler()
    results = []
    tasks = [scheduler.submit(lambda i=i: results.append(i) or i, size=64) for i in range(20)]
    values = [t.wait(5.0) for t in tasks]
    assert sorted(values) == list(range(20))
    assert scheduler.estimate(64) > 0.0
    scheduler.close()


def test_scheduler_propagates_errors():
    scheduler = AggregationScheduler()

    def boom():
        raise RuntimeError("bad aggregation")

    task = scheduler.submit(boom, size=8)
    try:
        task.wait(5.0)
        raised = False
    except RuntimeError:
        raised = True
    assert raised
    scheduler.close()


def test_enqueue_does_not_block_on_busy_workers():
    scheduler = AggregationScheduler()
    release = []

    def slow():
        time.sleep(0.2)
        return None

    for _ in range(4):
        scheduler.submit(slow, size=1)
    started = time.perf_counter()
    task = scheduler.submit(lambda: release.append(1), size=1)
    elapsed = time.perf_counter() - started
    assert elapsed < 0.05  # enqueue returns immediately
    task.wait(5.0)
    scheduler.close()
