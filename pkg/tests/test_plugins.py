"""Trainer plugins: gradient checks against central finite differences."""

import numpy as np
import pytest

from dlaas.learner import (
    TrainerSpec,
    UnknownTrainerError,
    create_trainer,
    known_framework_names,
    register_trainer,
    resolve_trainer_name,
    unregister_trainer,
)
from dlaas.learner.plugins import TrainerPlugin

PLUGINS = ["linreg", "logreg", "mlp"]


def finite_difference_gradient(plugin, weights, features, labels, h=1e-6):
    """Independent oracle: central differences around each coordinate."""
    grad = np.zeros_like(weights)
    for i in range(weights.size):
        up = weights.copy()
        down = weights.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (plugin.loss(up, features, labels) - plugin.loss(down, features, labels)) / (
            2 * h
        )
    return grad


def random_draw(plugin, rng):
    dim = int(rng.integers(1, 5))
    n = int(rng.integers(1, 17))
    features = rng.normal(size=(n, dim))
    if plugin.name == "linreg":
        labels = rng.normal(size=n)
    else:
        labels = rng.integers(0, 2, size=n).astype(float)
    weights = rng.normal(size=plugin.model_size(dim))
    return weights, features, labels


@pytest.mark.parametrize("name", PLUGINS)
def test_gradient_matches_finite_differences(name):
    """100 random draws per plugin, relative error <= 1e-6."""
    plugin = create_trainer(TrainerSpec(name))
    rng = np.random.default_rng(42)
    for _ in range(100):
        weights, features, labels = random_draw(plugin, rng)
        analytic = plugin.gradient(weights, features, labels)
        numeric = finite_difference_gradient(plugin, weights, features, labels)
        scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
        rel = np.linalg.norm(analytic - numeric) / scale
        assert rel <= 1e-6, f"{name}: rel error {rel}"


@pytest.mark.parametrize("name", PLUGINS)
def test_gradient_deterministic(name):
    plugin = create_trainer(TrainerSpec(name))
    rng = np.random.default_rng(0)
    weights, features, labels = random_draw(plugin, rng)
    g1 = plugin.gradient(weights, features, labels)
    g2 = plugin.gradient(weights.copy(), features.copy(), labels.copy())
    assert g1.tobytes() == g2.tobytes()


@pytest.mark.parametrize("name", PLUGINS)
def test_init_weights_seeded_and_sized(name):
    plugin = create_trainer(TrainerSpec(name))
    w1 = plugin.init_weights(4, seed=7)
    w2 = plugin.init_weights(4, seed=7)
    assert np.array_equal(w1, w2)
    assert w1.size == plugin.model_size(4)
    assert not np.array_equal(w1, plugin.init_weights(4, seed=8))


def test_metrics_keys():
    plugin = create_trainer(TrainerSpec("logreg"))
    rng = np.random.default_rng(1)
    weights, features, labels = random_draw(plugin, rng)
    scores = plugin.metrics(weights, features, labels)
    assert set(scores) == {"loss", "accuracy"}
    assert 0.0 <= scores["accuracy"] <= 1.0


def test_framework_aliases_resolve_to_builtin():
    assert resolve_trainer_name("caffe") == "mlp"
    assert resolve_trainer_name("torch") == "mlp"
    assert resolve_trainer_name("tensorflow") == "mlp"
    assert resolve_trainer_name("logreg") == "logreg"
    assert resolve_trainer_name("mxnet") is None
    assert "caffe" in known_framework_names()


def test_unknown_trainer_raises():
    with pytest.raises(UnknownTrainerError):
        create_trainer(TrainerSpec("definitely-not-registered"))


def test_register_unregister_cycle():
    class TinyTrainer(TrainerPlugin):
        name = "tiny"

        def model_size(self, dim):
            return dim

    register_trainer(TinyTrainer)
    assert resolve_trainer_name("tiny") == "tiny"
    unregister_trainer("tiny")
    assert resolve_trainer_name("tiny") is None


def test_mlp_hidden_units_hyperparam():
    small = create_trainer(TrainerSpec("mlp", {"hidden_units": "2"}))
    big = create_trainer(TrainerSpec("mlp", {"hidden_units": "16"}))
    assert small.model_size(3) < big.model_size(3)
