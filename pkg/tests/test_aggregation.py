"""Solver math against independent sequential references."""

import numpy as np
import pytest

from dlaas.pserver import (
    AggregationPolicy,
    PolicyKind,
    apply_easgd,
    apply_model_average,
    apply_psgd,
)


def test_model_average_example():
    global_values = np.array([9.0, 9.0])
    apply_model_average(global_values, {0: np.array([1.0, 3.0]), 1: np.array([3.0, 5.0])})
    assert np.array_equal(global_values, [2.0, 4.0])


def test_psgd_example():
    global_values = np.array([1.0])
    apply_psgd(global_values, np.array([2.0]), eta=0.1, learners=1)
    assert np.allclose(global_values, [0.8])


def test_easgd_example():
    center = np.array([0.0])
    elastic = apply_easgd(center, np.array([2.0]), alpha=0.5)
    assert np.array_equal(center, [1.0])
    assert np.array_equal(elastic, [1.0])


def easgd_reference(center, locals_, alpha, order):
    """Sequential reference: per-arrival elastic updates in a given order."""
    center = center.copy()
    locals_ = {k: v.copy() for k, v in locals_.items()}
    for learner_id in order:
        e = alpha * (locals_[learner_id] - center)
        center = center + e
        locals_[learner_id] = locals_[learner_id] - e
    return center, locals_


def test_easgd_matches_sequential_reference():
    rng = np.random.default_rng(3)
    for _ in range(50):
        dim = int(rng.integers(1, 16))
        alpha = float(rng.uniform(0.05, 0.95))
        center0 = rng.normal(size=dim)
        locals0 = {i: rng.normal(size=dim) for i in range(4)}
        order = list(rng.permutation(4))

        expect_center, expect_locals = easgd_reference(center0, locals0, alpha, order)

        center = center0.copy()
        locals_ = {k: v.copy() for k, v in locals0.items()}
        for learner_id in order:
            e = apply_easgd(center, locals_[learner_id], alpha)
            locals_[learner_id] = locals_[learner_id] - e
        assert np.allclose(center, expect_center)
        for i in range(4):
            assert np.allclose(locals_[i], expect_locals[i])


def test_psgd_incremental_equals_round_sum():
    """Per-arrival PSGD telescopes to the per-round formula."""
    rng = np.random.default_rng(4)
    eta, learners = 0.3, 4
    start = rng.normal(size=8)
    grads = [rng.normal(size=8) for _ in range(learners)]

    incremental = start.copy()
    for g in grads:
        apply_psgd(incremental, g, eta, learners)

    round_form = start - (eta / learners) * np.sum(grads, axis=0)
    assert np.allclose(incremental, round_form)


def test_model_average_sum_order_is_learner_ascending():
    # adding in a different order gives different float rounding; the
    # implementation must sum ascending by learner id
    values = {
        3: np.array([1e16]),
        0: np.array([1.0]),
        2: np.array([-1e16]),
        1: np.array([1.0]),
    }
    expect = np.array([((1.0 + 1.0) + -1e16) + 1e16]) / 4
    got = np.zeros(1)
    apply_model_average(got, values)
    assert got.tobytes() == expect.tobytes()


def test_policy_invariants():
    with pytest.raises(Exception):
        AggregationPolicy(PolicyKind.PSGD, expected_learners=2, learning_rate=0.0)
    with pytest.raises(Exception):
        AggregationPolicy(PolicyKind.EASGD, expected_learners=2, moving_rate=1.0)
    with pytest.raises(Exception):
        AggregationPolicy(PolicyKind.MODEL_AVG_BSP, expected_learners=0)
    policy = AggregationPolicy(PolicyKind.MODEL_AVG_BSP, expected_learners=2)
    assert policy.payload_kind.value == "WEIGHTS"
    assert AggregationPolicy(PolicyKind.PSGD, 2).payload_kind.value == "GRADIENTS"
