import math

import numpy as np
import pytest

from mminf.measures import tv_distance
from mminf.queue import QueueParams, mehler_law
from mminf.simulator import (
    ScalingConfig,
    clt_experiment,
    empirical_law,
    fluid_experiment,
    fluid_mean,
    holding_time_ks,
    pooled_holding_times,
    sample_states,
    simulate_path,
)

PARAMS = QueueParams(2.0, 1.0)


def test_path_is_deterministic_per_seed_and_index():
    a = simulate_path(PARAMS, 3, 5.0, seed=11, path=4)
    b = simulate_path(PARAMS, 3, 5.0, seed=11, path=4)
    c = simulate_path(PARAMS, 3, 5.0, seed=11, path=5)
    np.testing.assert_array_equal(a.jump_times, b.jump_times)
    np.testing.assert_array_equal(a.states, b.states)
    assert not np.array_equal(a.jump_times, c.jump_times)


def test_path_structure():
    tr = simulate_path(PARAMS, 0, 20.0, seed=1)
    assert tr.states[0] == 0
    assert np.all(np.abs(np.diff(tr.states)) == 1)
    assert np.all(tr.states >= 0)
    assert np.all(np.diff(tr.jump_times) > 0) and tr.jump_times[-1] <= 20.0
    assert tr.state_at(0.0) == 0
    rows = list(tr.csv_rows())
    assert rows[0] == ("time", "state") and len(rows) == len(tr.states) + 1


def test_negative_initial_state_rejected():
    with pytest.raises(ValueError):
        simulate_path(PARAMS, -1, 1.0, seed=0)


def test_worker_count_does_not_change_samples():
    a = sample_states(PARAMS, 5, 1.0, 500, seed=3, workers=1)
    b = sample_states(PARAMS, 5, 1.0, 500, seed=3, workers=4)
    np.testing.assert_array_equal(a, b)


def test_holding_times_are_exponential_and_jump_split_is_right():
    state = 2
    holds, ups = pooled_holding_times(PARAMS, state, 30.0, 200, seed=5, state=state)
    assert len(holds) > 1000
    assert holding_time_ks(PARAMS, state, holds).pvalue > 1e-3
    p_up = PARAMS.lam / (PARAMS.lam + state * PARAMS.mu)
    se = math.sqrt(p_up * (1 - p_up) / len(ups))
    assert abs(ups.mean() - p_up) < 4 * se


def test_empirical_law_close_to_exact_law():
    emp = empirical_law(PARAMS, 5, 1.0, 20_000, seed=7)
    assert math.isclose(math.fsum(emp.weights), 1.0, rel_tol=1e-12)
    assert tv_distance(emp, mehler_law(PARAMS, 1.0, 5)) < 0.03


def test_pure_arrivals_give_poisson_counts():
    params = QueueParams(3.0, 0.0)
    x = sample_states(params, 0, 2.0, 20_000, seed=8)
    assert abs(x.mean() - 6.0) < 4 * math.sqrt(6.0 / 20_000)


def test_fluid_mean_formula():
    assert fluid_mean(PARAMS, 0.5, 0.0) == 0.5
    assert math.isclose(fluid_mean(PARAMS, 0.5, 50.0), PARAMS.rho)


def test_fluid_deviation_shrinks_with_N():
    means = [fluid_experiment(ScalingConfig(N, 0.5, 0.0, 1.0, 100, 2), PARAMS).mean for N in (10, 100, 1000)]
    assert means[0] > means[1] > means[2]
    # fluctuations are O(N^{-1/2})
    assert means[2] < 0.1


def test_clt_on_ou_branch():
    rep = clt_experiment(ScalingConfig(500, PARAMS.rho, 0.5, 1.0, 5000, 4), PARAMS)
    assert rep.ou_branch
    p = PARAMS.p(1.0)
    assert math.isclose(rep.mean_target, 0.5 * p)
    assert math.isclose(rep.variance_target, (1 - p * p) * PARAMS.rho)
    assert abs(rep.mean - rep.mean_target) < 4 * rep.mean_stderr + 1 / math.sqrt(500)
    assert rep.variance_rel_error < 0.08


def test_clt_off_branch_uses_exact_variance():
    rep = clt_experiment(ScalingConfig(500, 0.5, 0.0, 1.0, 5000, 4), PARAMS)
    assert not rep.ou_branch and rep.notes
    p, q = PARAMS.p(1.0), PARAMS.q(1.0)
    assert math.isclose(rep.variance_target, (0.5 * p + PARAMS.rho) * q)
    assert rep.variance_rel_error < 0.08
    assert set(rep.to_dict()) >= {"mean", "variance", "variance_target", "ou_branch"}


def test_scaling_config_rejects_negative_start():
    with pytest.raises(ValueError):
        ScalingConfig(10, 0.0, -5.0).z0
