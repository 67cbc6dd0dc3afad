"""Multi-process deployment: learner and PS tasks as real OS processes
reaching the coordination store over its TCP line protocol."""

import pytest

from dlaas.lcm import JobState
from dlaas.learner import TrainerSpec, create_trainer
from tests.stack_helpers import (
    definition_text,
    final_model,
    make_stack,
    manifest_text,
    seed_separable,
    wait_terminal,
)


@pytest.mark.parametrize("learners", [1, 2])
def test_job_completes_with_subprocess_tasks(tmp_path, learners):
    stack = make_stack(
        tmp_path,
        run_mode="subprocess",
        session_ttl_ms=3000,  # process spawn is slower than a thread
        lcm_overrides={"deploy_timeout_s": 60.0, "liveness_grace_s": 5.0},
    )
    try:
        features, labels = seed_separable(stack, 1200)
        model_id = stack.registry.create_model(
            manifest_text(learners=learners),
            definition_text(
                epochs=2, batch_size=25, learning_rate=0.5, sync_every=5, solver="PSGD"
            ),
        )
        training_id = stack.lcm.submit(model_id)
        job = wait_terminal(stack, training_id, timeout=120)
        assert job.state is JobState.COMPLETED
        model = final_model(stack, training_id)
        plugin = create_trainer(TrainerSpec("logreg"))
        accuracy = plugin.metrics(model, features, labels)["accuracy"]
        assert accuracy >= 0.95
    finally:
        stack.shutdown()
