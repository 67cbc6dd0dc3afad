"""Training-job records and the lifecycle state machine.

Allowed transitions:

    PENDING -> DEPLOYING -> RUNNING -> {COMPLETED, FAILED, HALTED}
    DEPLOYING -> FAILED
    RUNNING -> DEPLOYING          (recovery redeploy)

Terminal states absorb. The full record lives in the coordination store
(``.../meta``) so the LCM itself stays stateless; the bare state string
is mirrored at ``.../status`` for cheap reads and watches.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from enum import Enum

from dlaas.errors import DlaasError


class JobState(str, Enum):
    PENDING = "PENDING"
    DEPLOYING = "DEPLOYING"
    RUNNING = "RUNNING"
    COMPLETED = "COMPLETED"
    FAILED = "FAILED"
    HALTED = "HALTED"


TERMINAL_JOB_STATES = {JobState.COMPLETED, JobState.FAILED, JobState.HALTED}

ALLOWED_TRANSITIONS: dict[JobState, set[JobState]] = {
    JobState.PENDING: {JobState.DEPLOYING},
    JobState.DEPLOYING: {JobState.RUNNING, JobState.FAILED},
    JobState.RUNNING: {
        JobState.COMPLETED,
        JobState.FAILED,
        JobState.HALTED,
        JobState.DEPLOYING,
    },
    JobState.COMPLETED: set(),
    JobState.FAILED: set(),
    JobState.HALTED: set(),
}


class JobError(DlaasError):
    code = "JOB_ERROR"


class JobNotFoundError(JobError):
    code = "NOT_FOUND"


class IllegalTransitionError(JobError):
    code = "ILLEGAL_TRANSITION"


class InvalidOverrideError(JobError):
    code = "INVALID_OVERRIDE"


class InvalidStateError(JobError):
    code = "INVALID_STATE"


class InvalidJobConfigError(JobError):
    code = "INVALID_JOB_CONFIG"


def check_transition(current: JobState, new: JobState) -> None:
    if new not in ALLOWED_TRANSITIONS[current]:
        raise IllegalTransitionError(f"{current.value} -> {new.value}")


@dataclass
class JobConfig:
    """Effective, fully resolved job parameters (manifest + overrides +
    definition-blob settings), persisted so recovery redeploys identically."""

    learners: int
    gpus: int
    memory_mib: int
    trainer_name: str
    hyperparams: dict[str, str]
    manifest_text: str
    epochs: int
    batch_size: int
    sync_every: int
    chunk_size: int
    local_lr: float
    solver: str
    server_lr: float
    moving_rate: float
    seed: int
    deterministic_chunks: bool
    checkpoint_every: int
    metric_every: int
    eval_samples: int
    dataset_count: int
    dataset_dim: int
    model_size: int
    shards: int


@dataclass
class TrainingJob:
    training_id: str
    model_id: str
    state: JobState
    config: JobConfig
    created_at: float = field(default_factory=time.time)
    completed_at: float | None = None
    recoveries: int = 0
    generation: int = 0  # bumped per (re)deploy; task ids embed it
    failure_reason: str = ""
    halt_requested_at: float | None = None
    ps_endpoints: list[str] = field(default_factory=list)
    learner_statuses: dict[str, dict] = field(default_factory=dict)  # view only

    def to_json(self) -> str:
        doc = asdict(self)
        doc["state"] = self.state.value
        doc.pop("learner_statuses")
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "TrainingJob":
        doc = json.loads(text)
        doc["state"] = JobState(doc["state"])
        doc["config"] = JobConfig(**doc["config"])
        doc.pop("learner_statuses", None)
        return cls(**doc)

    def learner_task_id(self, learner_id: int) -> str:
        return f"{self.training_id}-g{self.generation}-learner-{learner_id}"

    def ps_task_id(self, shard: int) -> str:
        return f"{self.training_id}-g{self.generation}-ps-{shard}"
