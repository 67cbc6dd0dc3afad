"""Cluster simulator: placement, queuing, restarts, GPU health guard."""

import time

import pytest

from dlaas.cluster import (
    ClusterSim,
    Demand,
    DuplicateTaskError,
    NodeSpec,
    TaskKind,
    TaskSpec,
    TaskState,
)

def idle_body(spec, ctx):
    """Runs until killed/crashed; publishes an endpoint for PS shards."""
    if spec.kind is TaskKind.PS_SHARD:
        ctx.started("127.0.0.1:5000")
    else:
        ctx.started()
    while True:
        if ctx.control.wait_stop(0.01):
            ctx.check()


def quick_body(spec, ctx):
    ctx.started()


def make_cluster(nodes=None, body=idle_body):
    cluster = ClusterSim(nodes or [NodeSpec("node0", 4, 2, 8000)])
    cluster.register_runner(TaskKind.LEARNER, body)
    cluster.register_runner(TaskKind.PS_SHARD, body)
    return cluster


def wait_for(cluster, task_id, predicate, timeout=5.0, what="condition"):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        handle = cluster.get_task(task_id)
        if predicate(handle):
            return handle
        time.sleep(0.005)
    raise AssertionError(f"{task_id} never reached {what}; at {cluster.get_task(task_id)}")


def wait_state(cluster, task_id, state, timeout=5.0):
    return wait_for(cluster, task_id, lambda h: h.state is state, timeout, what=str(state))


def wait_restarted(cluster, task_id, restarts, timeout=5.0):
    return wait_for(
        cluster,
        task_id,
        lambda h: h.state is TaskState.RUNNING and h.restarts == restarts,
        timeout,
        what=f"RUNNING with restarts={restarts}",
    )


def spec(task_id, demand=None, kind=TaskKind.LEARNER, job="job1", **kw):
    return TaskSpec(task_id, job, kind, demand or Demand(1, 1, 1000), **kw)


def test_launch_reserves_resources():
    cluster = make_cluster()
    cluster.launch(spec("t1"))
    wait_state(cluster, "t1", TaskState.RUNNING)
    cluster.assert_accounting()
    free = {n.node_id: n for n in cluster.nodes()}
    assert free["node0"].cpus == 4  # capacity unchanged
    cluster.shutdown()


def test_third_gpu_task_queues_until_capacity(
):
    cluster = make_cluster([NodeSpec("node0", 8, 2, 16000)])
    cluster.launch(spec("t1"))
    cluster.launch(spec("t2"))
    handle = cluster.launch(spec("t3"))
    assert handle.state is TaskState.PENDING
    wait_state(cluster, "t1", TaskState.RUNNING)
    wait_state(cluster, "t2", TaskState.RUNNING)
    time.sleep(0.05)
    assert cluster.get_task("t3").state is TaskState.PENDING
    cluster.kill("t1")
    wait_state(cluster, "t1", TaskState.KILLED)
    wait_state(cluster, "t3", TaskState.RUNNING)
    cluster.assert_accounting()
    cluster.shutdown()


def test_gpu_unhealthy_node_never_gets_gpu_tasks():
    cluster = make_cluster([NodeSpec("node0", 8, 2, 16000)])
    cluster.mark_gpu_unhealthy("node0")
    handle = cluster.launch(spec("gpu-task"))
    time.sleep(0.1)
    assert cluster.get_task("gpu-task").state is TaskState.PENDING
    # CPU-only work still schedules
    cluster.launch(spec("cpu-task", Demand(1, 0, 100)))
    wait_state(cluster, "cpu-task", TaskState.RUNNING)
    # marking healthy unblocks the queued GPU task
    cluster.mark_gpu_healthy("node0")
    wait_state(cluster, "gpu-task", TaskState.RUNNING)
    cluster.shutdown()


def test_crash_restarts_within_budget():
    cluster = make_cluster()
    cluster.launch(spec("t1", max_restarts=3))
    wait_state(cluster, "t1", TaskState.RUNNING)
    cluster.crash("t1")
    handle = wait_restarted(cluster, "t1", restarts=1)
    assert handle.restarts == 1
    cluster.shutdown()


def test_crash_beyond_budget_stays_crashed():
    cluster = make_cluster()
    cluster.launch(spec("t1", max_restarts=3))
    wait_state(cluster, "t1", TaskState.RUNNING)
    for expected_restarts in (1, 2, 3):
        cluster.crash("t1")
        wait_restarted(cluster, "t1", restarts=expected_restarts)
    cluster.crash("t1")  # 4th crash exhausts the budget
    handle = wait_state(cluster, "t1", TaskState.CRASHED)
    assert handle.restarts == 3
    time.sleep(0.1)
    assert cluster.get_task("t1").state is TaskState.CRASHED
    cluster.assert_accounting()
    cluster.shutdown()


def test_restart_prefers_a_different_node():
    nodes = [NodeSpec("node0", 8, 4, 16000), NodeSpec("node1", 8, 4, 16000)]
    cluster = make_cluster(nodes)
    cluster.launch(spec("t1"))
    first = wait_state(cluster, "t1", TaskState.RUNNING)
    cluster.crash("t1")
    second = wait_restarted(cluster, "t1", restarts=1)
    assert second.node_id != first.node_id
    cluster.shutdown()


def test_kill_frees_resources_no_restart():
    cluster = make_cluster()
    cluster.launch(spec("t1"))
    wait_state(cluster, "t1", TaskState.RUNNING)
    cluster.kill("t1")
    wait_state(cluster, "t1", TaskState.KILLED)
    time.sleep(0.1)
    assert cluster.get_task("t1").state is TaskState.KILLED  # stays killed
    cluster.assert_accounting()
    cluster.shutdown()


def test_subscribe_sees_ordered_lifecycle():
    cluster = make_cluster()
    sub = cluster.subscribe("job1")
    sub2 = cluster.subscribe("job1")
    cluster.launch(spec("t1", kind=TaskKind.PS_SHARD))
    wait_state(cluster, "t1", TaskState.RUNNING)
    cluster.crash("t1")
    wait_restarted(cluster, "t1", restarts=1)
    time.sleep(0.1)
    states = [e.state for e in sub.drain()]
    assert states[:3] == [TaskState.PENDING, TaskState.STAGING, TaskState.RUNNING]
    assert TaskState.CRASHED in states
    assert states.count(TaskState.RUNNING) == 2  # restarted
    assert [e.state for e in sub2.drain()] == states  # broadcast
    cluster.shutdown()


def test_ps_shard_has_endpoint_before_running():
    cluster = make_cluster()
    sub = cluster.subscribe("job1")
    cluster.launch(spec("ps0", kind=TaskKind.PS_SHARD))
    handle = wait_state(cluster, "ps0", TaskState.RUNNING)
    assert handle.endpoint == "127.0.0.1:5000"
    for event in sub.drain():
        if event.state is TaskState.RUNNING:
            assert event.endpoint is not None
    cluster.shutdown()


def test_duplicate_task_id_rejected():
    cluster = make_cluster()
    cluster.launch(spec("t1"))
    with pytest.raises(DuplicateTaskError):
        cluster.launch(spec("t1"))
    cluster.shutdown()


def test_crash_node_kills_all_its_tasks():
    cluster = make_cluster([NodeSpec("node0", 8, 8, 16000)])
    for i in range(3):
        cluster.launch(spec(f"t{i}", max_restarts=0))
    for i in range(3):
        wait_state(cluster, f"t{i}", TaskState.RUNNING)
    cluster.crash_node("node0")
    for i in range(3):
        wait_state(cluster, f"t{i}", TaskState.CRASHED)
    cluster.assert_accounting()
    cluster.shutdown()


def test_accounting_invariant_under_churn():
    cluster = make_cluster([NodeSpec("node0", 4, 2, 4000), NodeSpec("node1", 2, 0, 2000)])
    for i in range(12):
        cluster.launch(spec(f"t{i}", Demand(1, i % 2, 500), max_restarts=1))
    for _ in range(60):
        cluster.assert_accounting()
        time.sleep(0.005)
    cluster.shutdown()
    cluster.assert_accounting()
