import numpy as np
import pytest

from conftest import brute_kalman
from ctrllie.criteria import (NOT_ESTABLISHED, equilibria, good_first_kind, good_second_kind,
                              goodness, hyper_accessibility, kalman, kalman_ranks, stlc_at)
from ctrllie.fields import ControlSystem, linear_system
from ctrllie.fixtures import fixture, random_linear


def test_kalman_double_integrator():
    A = [[0, 1], [0, 0]]
    assert kalman_ranks(A, [[0], [1]]) == [1, 2]
    assert kalman(A, [[0], [1]]) == (2, True)
    assert kalman(A, [[1], [0]]) == (1, False)


def test_kalman_shape_errors():
    with pytest.raises(ValueError):
        kalman_ranks(np.eye(2), np.ones((3, 1)))


@pytest.mark.parametrize("seed", range(30))
def test_kalman_against_exact_oracle(seed):
    A, B = random_linear(seed, uncontrollable=seed % 3 == 0)
    assert kalman(A, B).n_max == brute_kalman(A, B)


def test_kalman_similarity_invariance():
    rng = np.random.default_rng(0)
    for seed in range(10):
        A, B = random_linear(seed)
        P = rng.normal(size=A.shape) + 3 * np.eye(len(A))
        Pi = np.linalg.inv(P)
        assert kalman(P @ A @ Pi, P @ B) == kalman(A, B)


def test_equilibria_example_b_prefers_zero():
    eq = equilibria(fixture("exampleB").system, [0.0])
    assert eq and eq[0].w == (0.0, 0.0)


def test_equilibria_none_for_exponential():
    assert equilibria(fixture("exampleC").system, [0.0]) == []


def test_equilibria_rejects_time_dependence():
    s = ControlSystem.from_strings(["w1 + t"], [(-1, 1)])
    with pytest.raises(ValueError, match="depends on t"):
        equilibria(s, [0.0])


def test_goodness_example_a_inconclusive_on_w_zero():
    s = fixture("exampleA").system
    v = goodness(s, {"t": 0.3, "q1": 0.1, "w1": 0.0})
    assert v.kind == "inconclusive"
    assert good_first_kind(s, {"t": 0.3, "q1": 0.1, "w1": 0.5}).kind == "first"


def test_goodness_example_b_second_kind_witness():
    s = fixture("exampleB").system
    v = good_second_kind(s, {"t": 0.0, "q1": 0.0, "w1": 0.0, "w2": 0.0})
    assert v.kind == "second"
    assert v.evidence["witnesses"][0]["bracket"] == "[W1^(0),W2^(1)]"
    assert goodness(s, {"t": 0.0, "q1": 0.0, "w1": 0.4, "w2": -0.3}).kind == "first"


def test_hyper_accessibility_examples():
    assert not hyper_accessibility(fixture("exampleA").system).hyper_accessible
    hv = hyper_accessibility(fixture("exampleC").system)
    assert hv.hyper_accessible and hv.strata[0]["verdicts"]["first"] == hv.strata[0]["points"]


def test_stlc_requires_equilibrium():
    v = stlc_at(fixture("exampleC").system, [0.0])
    assert v.status == NOT_ESTABLISHED and v.equilibria == []
    assert stlc_at(fixture("exampleB").system, [0.0])


def test_hyper_accessibility_linear_uncontrollable():
    s = linear_system(np.array([[0.0, 0.0], [0.0, 1.0]]), np.array([[0.0], [1.0]]))
    hv = hyper_accessibility(s)
    assert not hv.hyper_accessible
    assert hv.strata[0]["projection_rank"] == 1
