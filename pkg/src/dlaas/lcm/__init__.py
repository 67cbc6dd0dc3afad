from dlaas.lcm.jobs import (
    ALLOWED_TRANSITIONS,
    IllegalTransitionError,
    InvalidJobConfigError,
    InvalidOverrideError,
    InvalidStateError,
    JobConfig,
    JobError,
    JobNotFoundError,
    JobState,
    TERMINAL_JOB_STATES,
    TrainingJob,
    check_transition,
)
from dlaas.lcm.manager import (
    INTERNAL_CONTAINER,
    LcmConfig,
    LifecycleManager,
    parse_job_settings,
)

__all__ = [
    "ALLOWED_TRANSITIONS",
    "INTERNAL_CONTAINER",
    "IllegalTransitionError",
    "InvalidJobConfigError",
    "InvalidOverrideError",
    "InvalidStateError",
    "JobConfig",
    "JobError",
    "JobNotFoundError",
    "JobState",
    "LcmConfig",
    "LifecycleManager",
    "TERMINAL_JOB_STATES",
    "TrainingJob",
    "check_transition",
    "parse_job_settings",
]
