"""Built-in trainer plugins and the plugin registry.

A trainer plugin owns the model math: weight layout, seeded
initialization, analytic gradients, loss and evaluation metrics over a
flat f64 weight vector. The three built-ins (linreg, logreg, mlp) stand
in for external frameworks; the classic framework names map onto them
through ``FRAMEWORK_ALIASES`` so stock manifests parse and run.

Registering a plugin is the extension point for a new "framework": the
load / train-step / store phases of the learner call only this interface.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from dlaas.errors import DlaasError


class TrainerError(DlaasError):
    code = "TRAINER_ERROR"


class UnknownTrainerError(TrainerError):
    code = "UNKNOWN_TRAINER"


@dataclass(frozen=True)
class TrainerSpec:
    name: str
    hyperparams: dict[str, str] = field(default_factory=dict)


class TrainerPlugin:
    """Interface contract; subclasses define the model family."""

    name = "base"

    def __init__(self, hyperparams: dict[str, str] | None = None):
        self.hyperparams = dict(hyperparams or {})

    def hp_float(self, key: str, default: float) -> float:
        try:
            return float(self.hyperparams.get(key, default))
        except ValueError:
            raise TrainerError(f"hyperparam {key}={self.hyperparams[key]!r} not a number") from None

    def hp_int(self, key: str, default: int) -> int:
        return int(self.hp_float(key, default))

    def model_size(self, dim: int) -> int:
        raise NotImplementedError

    def init_weights(self, dim: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return 0.01 * rng.standard_normal(self.model_size(dim))

    def gradient(self, weights: np.ndarray, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def loss(self, weights: np.ndarray, features: np.ndarray, labels: np.ndarray) -> float:
        raise NotImplementedError

    def metrics(self, weights: np.ndarray, features: np.ndarray, labels: np.ndarray) -> dict[str, float]:
        return {
            "loss": self.loss(weights, features, labels),
            "accuracy": self._accuracy(weights, features, labels),
        }

    def predict(self, weights: np.ndarray, features: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _accuracy(self, weights, features, labels) -> float:
        # binary labels: thresholded hit rate; real labels: fraction of
        # predictions within 0.5 absolute error
        pred = self.predict(weights, features)
        if set(np.unique(labels)) <= {0.0, 1.0}:
            return float(np.mean((pred >= 0.5) == (labels >= 0.5)))
        return float(np.mean(np.abs(pred - labels) <= 0.5))


class LinearRegressionTrainer(TrainerPlugin):
    """Least squares: loss = mean squared error / 2."""

    name = "linreg"

    def model_size(self, dim: int) -> int:
        return dim + 1

    def predict(self, weights, features):
        return features @ weights[:-1] + weights[-1]

    def loss(self, weights, features, labels) -> float:
        err = self.predict(weights, features) - labels
        return float(0.5 * np.mean(err * err))

    def gradient(self, weights, features, labels):
        n = features.shape[0]
        err = self.predict(weights, features) - labels
        grad = np.empty_like(weights)
        grad[:-1] = features.T @ err / n
        grad[-1] = np.mean(err)
        return grad


class LogisticRegressionTrainer(TrainerPlugin):
    """Binary logistic regression with a numerically stable cross-entropy."""

    name = "logreg"

    def model_size(self, dim: int) -> int:
        return dim + 1

    def logits(self, weights, features):
        return features @ weights[:-1] + weights[-1]

    def predict(self, weights, features):
        return expit(self.logits(weights, features))

    def loss(self, weights, features, labels) -> float:
        z = self.logits(weights, features)
        # mean(softplus(z) - y*z) == mean cross-entropy, stable for large |z|
        return float(np.mean(np.logaddexp(0.0, z) - labels * z))

    def gradient(self, weights, features, labels):
        n = features.shape[0]
        err = expit(self.logits(weights, features)) - labels
        grad = np.empty_like(weights)
        grad[:-1] = features.T @ err / n
        grad[-1] = np.mean(err)
        return grad

    def _accuracy(self, weights, features, labels) -> float:
        return float(np.mean((self.logits(weights, features) >= 0.0) == (labels >= 0.5)))


class MlpTrainer(TrainerPlugin):
    """One tanh hidden layer, sigmoid output, binary cross-entropy.

    Weight layout (flat): hidden weights (h, d) row-major | hidden bias (h)
    | output weights (h) | output bias (1). Hyperparam ``hidden_units``
    controls h (default 8).
    """

    name = "mlp"

    @property
    def hidden(self) -> int:
        return self.hp_int("hidden_units", 8)

    def model_size(self, dim: int) -> int:
        h = self.hidden
        return h * dim + h + h + 1

    def init_weights(self, dim: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        h = self.hidden
        scale = 1.0 / np.sqrt(max(dim, 1))
        w = np.concatenate(
            [
                scale * rng.standard_normal(h * dim),
                np.zeros(h),
                rng.standard_normal(h) / np.sqrt(h),
                np.zeros(1),
            ]
        )
        return w

    def _unpack(self, weights: np.ndarray, dim: int):
        h = self.hidden
        w1 = weights[: h * dim].reshape(h, dim)
        b1 = weights[h * dim : h * dim + h]
        w2 = weights[h * dim + h : h * dim + 2 * h]
        b2 = weights[-1]
        return w1, b1, w2, b2

    def _forward(self, weights, features):
        w1, b1, w2, b2 = self._unpack(weights, features.shape[1])
        hidden = np.tanh(features @ w1.T + b1)
        logits = hidden @ w2 + b2
        return hidden, logits

    def predict(self, weights, features):
        return expit(self._forward(weights, features)[1])

    def loss(self, weights, features, labels) -> float:
        _, z = self._forward(weights, features)
        return float(np.mean(np.logaddexp(0.0, z) - labels * z))

    def gradient(self, weights, features, labels):
        n, dim = features.shape
        w1, b1, w2, b2 = self._unpack(weights, dim)
        hidden, z = self._forward(weights, features)
        dz = (expit(z) - labels) / n
        dw2 = hidden.T @ dz
        db2 = np.sum(dz)
        dhidden = np.outer(dz, w2) * (1.0 - hidden * hidden)
        dw1 = dhidden.T @ features
        db1 = dhidden.sum(axis=0)
        return np.concatenate([dw1.ravel(), db1, dw2, [db2]])

    def _accuracy(self, weights, features, labels) -> float:
        _, z = self._forward(weights, features)
        return float(np.mean((z >= 0.0) == (labels >= 0.5)))


_REGISTRY: dict[str, type[TrainerPlugin]] = {}

FRAMEWORK_ALIASES = {
    "caffe": "mlp",
    "torch": "mlp",
    "tensorflow": "mlp",
}


def register_trainer(cls: type[TrainerPlugin]) -> type[TrainerPlugin]:
    _REGISTRY[cls.name] = cls
    return cls


def unregister_trainer(name: str) -> None:
    _REGISTRY.pop(name, None)


def resolve_trainer_name(name: str) -> str | None:
    name = FRAMEWORK_ALIASES.get(name, name)
    return name if name in _REGISTRY else None


def known_framework_names() -> set[str]:
    return set(_REGISTRY) | set(FRAMEWORK_ALIASES)


def create_trainer(spec: TrainerSpec) -> TrainerPlugin:
    resolved = resolve_trainer_name(spec.name)
    if resolved is None:
        raise UnknownTrainerError(spec.name)
    return _REGISTRY[resolved](spec.hyperparams)


for _cls in (LinearRegressionTrainer, LogisticRegressionTrainer, MlpTrainer):
    register_trainer(_cls)
