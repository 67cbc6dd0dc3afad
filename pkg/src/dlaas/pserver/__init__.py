from dlaas.pserver.aggregation import (
    AggregationError,
    AggregationPolicy,
    DuplicateLearnerError,
    PartitionMismatchError,
    PayloadKind,
    PolicyKind,
    StaleClockError,
    UnknownLearnerError,
    apply_easgd,
    apply_model_average,
    apply_psgd,
)
from dlaas.pserver.client import ClientStats, PSClient, PSClientError
from dlaas.pserver.partition import (
    InvalidShardsError,
    default_shard_count,
    partition_model,
)
from dlaas.pserver.scheduler import AggregationScheduler, choose_queue, simulate_makespan
from dlaas.pserver.shard import PSShard, PSShardServer, ShardStats
from dlaas.pserver.wire import (
    MsgType,
    PSMessage,
    WireError,
    decode,
    encode,
    job_wire_id,
    recv_message,
    send_message,
    values_payload,
)

__all__ = [
    "AggregationError",
    "AggregationPolicy",
    "AggregationScheduler",
    "ClientStats",
    "DuplicateLearnerError",
    "InvalidShardsError",
    "MsgType",
    "PSClient",
    "PSClientError",
    "PSMessage",
    "PSShard",
    "PSShardServer",
    "PartitionMismatchError",
    "PayloadKind",
    "PolicyKind",
    "ShardStats",
    "StaleClockError",
    "UnknownLearnerError",
    "WireError",
    "apply_easgd",
    "apply_model_average",
    "apply_psgd",
    "choose_queue",
    "decode",
    "default_shard_count",
    "encode",
    "job_wire_id",
    "partition_model",
    "recv_message",
    "send_message",
    "simulate_makespan",
    "values_payload",
]
