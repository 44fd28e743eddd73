import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import bounded_reach_by_paths, unit_step_loop, unit_step_pmf
from smrm import reproduce
from smrm.errors import InvalidParameter, QuantileOutOfRange, ReachabilityNotAlmostSure
from smrm.iterative import IterationConfig, solve_power_exact
from smrm.model import Smrm, chain_model, preprocess
from smrm.queries import (
    cdf_from_density,
    expected_reward,
    interval_probability,
    mrm_bounded_reachability,
    multivariate_cdf,
    next_step_density,
    quantile,
    suggest_truncation,
)
from smrm.rewards import DiracZero, ExplicitLattice, Geometric


def test_cdf_discrete_and_continuous():
    assert np.allclose(cdf_from_density([0.1, 0.2, 0.3]), [0.1, 0.3, 0.6])
    assert np.allclose(cdf_from_density([1.0, 1.0, 1.0], "continuous", 0.5), [0.0, 0.5, 1.0])
    with pytest.raises(InvalidParameter):
        cdf_from_density([1.0], "other")


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=50))
def test_cdf_monotone(values):
    d = np.array(values)
    if d.sum() > 0:
        d = d / d.sum()
    cdf = cdf_from_density(d)
    assert np.all(np.diff(cdf) >= 0)
    assert cdf[-1] <= 1 + 1e-12


def test_interval_probability():
    cdf = cdf_from_density([0.1, 0.2, 0.3, 0.4])
    assert interval_probability(cdf, 0, 2) == pytest.approx(0.5)
    assert interval_probability(cdf, 1, 1) == 0.0
    with pytest.raises(InvalidParameter):
        interval_probability(cdf, 2, 1)
    with pytest.raises(InvalidParameter):
        interval_probability(cdf, 0, 9)


def test_quantile_lattice_and_sampled():
    cdf = cdf_from_density([0.1, 0.2, 0.3, 0.4])
    assert quantile(cdf, 0.05) == 0
    assert quantile(cdf, 0.1) == 1
    assert quantile(cdf, 0.35) == 2
    ramp = np.linspace(0, 1, 11)
    assert quantile(ramp, 0.45, mode="continuous", step=0.1) == pytest.approx(0.45)
    with pytest.raises(QuantileOutOfRange, match="larger truncation length"):
        quantile(cdf_from_density([0.1, 0.2]), 0.5)
    with pytest.raises(InvalidParameter):
        quantile(cdf, 1.0)


def test_quantile_of_closed_form_pmf():
    cdf = cdf_from_density(unit_step_pmf(0.5, 0.5, 60))
    # F(r) = 1 - 0.5^r
    assert quantile(cdf, 0.9) == 4


def test_multivariate_cdf_is_product():
    c1 = cdf_from_density([0.5, 0.5])
    c2 = cdf_from_density([0.25, 0.75])
    assert multivariate_cdf([c1, c2], [0, 0]) == pytest.approx(0.125)
    assert multivariate_cdf([c1, c2], [5, 5]) == pytest.approx(1.0)
    with pytest.raises(InvalidParameter):
        multivariate_cdf([c1], [0, 1])


def test_next_step_density_is_h():
    system = preprocess(reproduce.toy_model(), k=20)
    assert np.array_equal(next_step_density(system), system.h)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 0.9))
def test_expected_reward_closed_form(p_exit):
    # every step costs 1, so the expected reward is the expected number of steps 1/p_exit
    model = chain_model([[1 - p_exit]], [p_exit], ExplicitLattice([0.0, 1.0]))
    assert expected_reward(model)["s0"] == pytest.approx(1 / p_exit)
    assert expected_reward(model)["goal"] == 0.0


def test_expected_reward_matches_density_mean():
    model = reproduce.waste_model()
    system = preprocess(model, k=3000)
    f = solve_power_exact(system, IterationConfig(epsilon=1e-15)).solution
    means = expected_reward(model)
    for s in system.s_question:
        d = f[:, system.index(s)]
        assert np.dot(np.arange(len(d)), d) == pytest.approx(means[s], rel=1e-6)


def test_expected_reward_needs_almost_sure_reach():
    with pytest.raises(ReachabilityNotAlmostSure):
        expected_reward(unit_step_loop(0.3, 0.6))


def test_suggest_truncation():
    d = np.zeros(10)
    d[3] = 1.0
    assert suggest_truncation(d) == 3
    with pytest.raises(InvalidParameter):
        suggest_truncation(np.zeros(4))


def _deterministic_model(R, P):
    states = ["a", "b", "goal"]
    rewards = {}
    for i in range(3):
        for j in range(3):
            if P[i, j] > 0:
                rewards[(states[i], states[j])] = ExplicitLattice(np.eye(int(R[i, j]) + 1)[-1])
    return Smrm(states, P, rewards, {"goal"})


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_bounded_reachability_matches_paths(seed):
    rng = np.random.default_rng(seed)
    P = np.zeros((3, 3))
    P[0] = rng.dirichlet([1, 1, 1])
    P[1] = rng.dirichlet([1, 1, 1])
    P[2, 2] = 1.0
    R = rng.integers(1, 3, size=(3, 3))
    R[1, 0] = 0
    R[2, 2] = 0
    model = _deterministic_model(R, P)
    x = mrm_bounded_reachability(model, 5)
    for s in ("a", "b"):
        for p in range(6):
            assert x[model.index(s), p] == pytest.approx(bounded_reach_by_paths(model, s, p, R), abs=1e-10)
    assert np.all(np.diff(x, axis=1) >= -1e-15)


def test_bounded_reachability_with_reward_matrix():
    model = chain_model([[0.5]], [0.5], DiracZero())
    R = np.array([[1, 2], [0, 0]])
    with pytest.raises(InvalidParameter):
        mrm_bounded_reachability(model, 3, rewards=-R)
    x = mrm_bounded_reachability(model, 4, rewards=R)
    # reach with reward 2 + n loops of reward 1: P(N <= p-2) with N geometric
    assert x[0, :].tolist() == pytest.approx([0, 0, 0.5, 0.75, 0.875])


def test_bounded_reachability_rejects_random_rewards():
    model = chain_model([[0.5]], [0.5], Geometric(0.5))
    with pytest.raises(InvalidParameter):
        mrm_bounded_reachability(model, 3)
    with pytest.raises(InvalidParameter):
        mrm_bounded_reachability(model, -1)
