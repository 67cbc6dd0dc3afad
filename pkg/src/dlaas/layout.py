"""Coordination-store path layout shared by the LCM, learners and watchdogs.

    /jobs/<tid>/meta                    job record (JSON)
    /jobs/<tid>/status                  job state string
    /jobs/<tid>/control                 operator directives (e.g. HALT)
    /jobs/<tid>/learners/<lid>/status   learner phase mirror (JSON)
    /jobs/<tid>/live/<task_id>          ephemeral liveness nodes
    /jobs/<tid>/ps/<shard>/endpoint     parameter server endpoints
    /jobs/<tid>/cursor/<epoch>          global data cursor per pass
"""

JOBS_ROOT = "/jobs"


def job_root(training_id: str) -> str:
    return f"{JOBS_ROOT}/{training_id}"


def meta_path(training_id: str) -> str:
    return f"{job_root(training_id)}/meta"


def status_path(training_id: str) -> str:
    return f"{job_root(training_id)}/status"


def control_path(training_id: str) -> str:
    return f"{job_root(training_id)}/control"


def learners_root(training_id: str) -> str:
    return f"{job_root(training_id)}/learners"


def learner_root(training_id: str, learner_id: int) -> str:
    return f"{learners_root(training_id)}/{learner_id}"


def learner_status_path(training_id: str, learner_id: int) -> str:
    return f"{learner_root(training_id, learner_id)}/status"


def live_root(training_id: str) -> str:
    return f"{job_root(training_id)}/live"


def live_path(training_id: str, task_id: str) -> str:
    return f"{live_root(training_id)}/{task_id}"


def ps_root(training_id: str) -> str:
    return f"{job_root(training_id)}/ps"


def ps_shard_root(training_id: str, shard: int) -> str:
    return f"{ps_root(training_id)}/{shard}"


def ps_endpoint_path(training_id: str, shard: int) -> str:
    return f"{ps_shard_root(training_id, shard)}/endpoint"


def cursor_root(training_id: str) -> str:
    return f"{job_root(training_id)}/cursor"


def cursor_path(training_id: str, epoch: int) -> str:
    return f"{cursor_root(training_id)}/{epoch}"
