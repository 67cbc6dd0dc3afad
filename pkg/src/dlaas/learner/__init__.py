from dlaas.learner.checkpoint import (
    Checkpoint,
    CheckpointError,
    NoCheckpointError,
    decode_checkpoint,
    encode_checkpoint,
    global_ckpt_key,
    latest_complete_clock,
    learner_ckpt_key,
    load_global_weights,
    load_learner_checkpoint,
    pack_rng_state,
    restore_rng,
)
from dlaas.learner.cursor import claim_chunk, default_chunk_size, wait_for_cursor
from dlaas.learner.plugins import (
    FRAMEWORK_ALIASES,
    LinearRegressionTrainer,
    LogisticRegressionTrainer,
    MlpTrainer,
    TrainerError,
    TrainerPlugin,
    TrainerSpec,
    UnknownTrainerError,
    create_trainer,
    known_framework_names,
    register_trainer,
    resolve_trainer_name,
    unregister_trainer,
)
from dlaas.learner.runner import (
    LearnerConfig,
    LearnerLog,
    UserJobError,
    log_key,
    metric_line,
    model_key,
    run_learner,
)
from dlaas.learner.watchdog import (
    PHASE_DONE,
    PHASE_DOWNLOADING,
    PHASE_JOB_FAILED,
    PHASE_NOT_STARTED,
    PHASE_TRAINING,
    PHASE_UPLOADING,
    TERMINAL_PHASES,
    LearnerState,
    Watchdog,
)

__all__ = [
    "Checkpoint",
    "CheckpointError",
    "FRAMEWORK_ALIASES",
    "LearnerConfig",
    "LearnerLog",
    "LearnerState",
    "LinearRegressionTrainer",
    "LogisticRegressionTrainer",
    "MlpTrainer",
    "NoCheckpointError",
    "PHASE_DONE",
    "PHASE_DOWNLOADING",
    "PHASE_JOB_FAILED",
    "PHASE_NOT_STARTED",
    "PHASE_TRAINING",
    "PHASE_UPLOADING",
    "TERMINAL_PHASES",
    "TrainerError",
    "TrainerPlugin",
    "TrainerSpec",
    "UnknownTrainerError",
    "UserJobError",
    "Watchdog",
    "claim_chunk",
    "create_trainer",
    "decode_checkpoint",
    "default_chunk_size",
    "encode_checkpoint",
    "global_ckpt_key",
    "known_framework_names",
    "latest_complete_clock",
    "learner_ckpt_key",
    "load_global_weights",
    "log_key",
    "load_learner_checkpoint",
    "metric_line",
    "model_key",
    "pack_rng_state",
    "register_trainer",
    "resolve_trainer_name",
    "restore_rng",
    "run_learner",
    "unregister_trainer",
    "wait_for_cursor",
]
