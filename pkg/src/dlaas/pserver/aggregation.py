"""Aggregation solvers and their trigger rules.

Three solvers refine the global weights from learner contributions:

* PSGD            w <- w - (eta/L) * g, applied per arriving gradient
                  (Downpour trigger; the per-arrival form telescopes to
                  the per-round sum because the update is additive).
* MODEL_AVG_BSP   w <- mean(w_i), triggered only once all L learners of
                  the round have contributed (BSP trigger). Contributions
                  are summed in ascending learner id so the result is
                  bit-identical across runs.
* EASGD           elastic term e = alpha * (x_i - center); the center
                  moves by +e and the learner is told to move by -e via
                  the push-ack payload. Per-arrival trigger.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from dlaas.errors import DlaasError


class AggregationError(DlaasError):
    code = "AGGREGATION_ERROR"


class UnknownLearnerError(AggregationError):
    code = "UNKNOWN_LEARNER"


class DuplicateLearnerError(AggregationError):
    code = "DUPLICATE_LEARNER"


class PartitionMismatchError(AggregationError):
    code = "PARTITION_MISMATCH"


class StaleClockError(AggregationError):
    code = "STALE_CLOCK"


class PolicyKind(str, Enum):
    PSGD = "PSGD"
    MODEL_AVG_BSP = "MODEL_AVG_BSP"
    EASGD = "EASGD"


class PayloadKind(str, Enum):
    GRADIENTS = "GRADIENTS"
    WEIGHTS = "WEIGHTS"


@dataclass(frozen=True)
class AggregationPolicy:
    kind: PolicyKind
    expected_learners: int
    learning_rate: float = 0.1  # PSGD server-side eta
    moving_rate: float = 0.5  # EASGD alpha

    def __post_init__(self):
        if self.expected_learners < 1:
            raise AggregationError("expected_learners must be >= 1")
        if self.kind is PolicyKind.PSGD and self.learning_rate <= 0:
            raise AggregationError("learning_rate must be > 0")
        if self.kind is PolicyKind.EASGD and not (0.0 < self.moving_rate < 1.0):
            raise AggregationError("moving_rate must be in (0, 1)")

    @property
    def payload_kind(self) -> PayloadKind:
        return PayloadKind.GRADIENTS if self.kind is PolicyKind.PSGD else PayloadKind.WEIGHTS

    @property
    def synchronous(self) -> bool:
        """BSP solvers gate the clock on full rounds; Downpour ones do not."""
        return self.kind is PolicyKind.MODEL_AVG_BSP


def apply_psgd(global_values: np.ndarray, gradient: np.ndarray, eta: float, learners: int) -> None:
    global_values -= (eta / learners) * gradient


def apply_model_average(global_values: np.ndarray, pending: dict[int, np.ndarray]) -> None:
    # ascending learner order makes the floating-point sum reproducible
    acc = np.zeros_like(global_values)
    for learner_id in sorted(pending):
        acc += pending[learner_id]
    acc /= len(pending)
    global_values[:] = acc


def apply_easgd(center: np.ndarray, learner_values: np.ndarray, alpha: float) -> np.ndarray:
    elastic = alpha * (learner_values - center)
    center += elastic
    return elastic
