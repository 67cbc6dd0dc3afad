from dlaas.cluster.sim import (
    DEFAULT_MAX_RESTARTS,
    ClusterError,
    ClusterSim,
    Demand,
    DuplicateTaskError,
    NodeSpec,
    Subscription,
    TaskContext,
    TaskEvent,
    TaskHandle,
    TaskKind,
    TaskNotFoundError,
    TaskSpec,
    TaskState,
    TERMINAL_STATES,
)
from dlaas.cluster.topology import default_topology, format_topology, parse_topology

__all__ = [
    "ClusterError",
    "ClusterSim",
    "DEFAULT_MAX_RESTARTS",
    "Demand",
    "DuplicateTaskError",
    "NodeSpec",
    "Subscription",
    "TERMINAL_STATES",
    "TaskContext",
    "TaskEvent",
    "TaskHandle",
    "TaskKind",
    "TaskNotFoundError",
    "TaskSpec",
    "TaskState",
    "default_topology",
    "format_topology",
    "parse_topology",
]
