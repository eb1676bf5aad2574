import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mminf.inequalities import (
    DESCRIPTIONS,
    PHI_FREE,
    Context,
    FunctionSampler,
    InequalityId,
    SamplerFamily,
    best_constant,
    binomial,
    evaluate,
    find_extremal,
    poisson,
    project_into,
    sides,
    sweep,
    tensorisation_witness,
    two_point_U,
    two_point_U_sweep,
)
from mminf.phi import neg_log, p1, p2, p3, power_mixture
from mminf.queue import QueueParams

ADMISSIBLE = [p1(), p2(), p3(1.5), power_mixture()]


def test_every_tag_has_a_description():
    assert set(DESCRIPTIONS) == set(InequalityId)


def test_two_point_p2_equality_example():
    rep = evaluate("TWO_POINT_A", p2(), [0.0, 2.0], Context(p=0.5))
    assert rep.lhs == pytest.approx(1.0, abs=1e-15)
    assert rep.rhs == pytest.approx(1.0, abs=1e-15)
    assert rep.passed


def test_poisson_p2_equality_for_affine_function():
    n = np.arange(poisson(2.0).n_max + 2, dtype=float)
    rep = evaluate("POISSON_A", p2(), 1.0 + 3.0 * n, Context(rho=2.0))
    # Var = ρ b² = 18
    assert rep.lhs == pytest.approx(18.0, rel=1e-12)
    assert rep.rhs == pytest.approx(18.0, rel=1e-12)


def test_binomial_p2_equality_for_affine_function():
    f = 2.0 - 0.5 * np.arange(8, dtype=float)
    rep = evaluate("BINOMIAL", p2(), f, Context(n=6, p=0.3))
    target = 6 * 0.3 * 0.7 * 0.25
    assert rep.lhs == pytest.approx(target, rel=1e-12)
    assert rep.rhs == pytest.approx(target, rel=1e-12)


def test_poisson_p1_random_bounded_sweep():
    rep = sweep("POISSON_A", p1(), Context(rho=1.0), FunctionSampler(SamplerFamily.RANDOM_BOUNDED, {"lo": 0.1, "hi": 5.0}), cases=1000, seed=1)
    assert rep.passed and rep.case_count == 1000
    assert rep.min_slack > 0


def test_binpoi_p3_sweep():
    rep = sweep("BINPOI", p3(1.5), Context(n=3, p=0.4, rho=0.7), cases=500, seed=2)
    assert rep.passed and rep.min_slack >= -1e-9


@pytest.mark.parametrize("tag", [t for t in InequalityId if t not in PHI_FREE])
@pytest.mark.parametrize("phi", ADMISSIBLE, ids=lambda p: p.name)
def test_small_sweeps_hold(tag, phi):
    rep = sweep(tag, phi, cases=60, seed=9)
    assert rep.passed, rep.to_dict()


@pytest.mark.parametrize("tag", sorted(PHI_FREE, key=lambda t: t.value))
def test_phi_free_sweeps_hold(tag):
    rep = sweep(tag, None, cases=100, seed=9)
    assert rep.passed, rep.to_dict()


def test_evaluate_rejects_short_window_and_out_of_domain():
    with pytest.raises(ValueError, match="needs f"):
        evaluate("BINOMIAL", p2(), [1.0, 2.0], Context(n=5, p=0.5))
    with pytest.raises(ValueError):
        evaluate("TWO_POINT_A", p1(), [-1.0, 2.0], Context(p=0.5))


def test_a_form_is_at_least_as_sharp_as_b_form():
    """A(u,v) <= B(u,v), so the two-point A bound has the smaller slack."""
    rng = np.random.default_rng(4)
    sampler = FunctionSampler(SamplerFamily.RANDOM_BOUNDED)
    for phi in ADMISSIBLE:
        for _ in range(200):
            p = float(rng.uniform(0.05, 0.95))
            f = sampler.draw(phi, 2, rng)
            a = evaluate("TWO_POINT_A", phi, f, Context(p=p))
            b = evaluate("TWO_POINT_B", phi, f, Context(p=p))
            assert a.rhs <= b.rhs * (1 + 1e-12) + 1e-300


def test_tv_bound_at_initial_state_zero():
    # n = 0: log(e^ρ ρ^0 0!) = ρ
    ctx = Context(n=0, lam=2.0, mu=1.0, rho=2.0, t=1.0)
    lhs, rhs, _ = sides(InequalityId.TV_ENT, None, np.zeros(2), ctx)
    assert rhs[0] == pytest.approx(math.exp(-1.0) * 2.0, rel=1e-14)
    assert lhs[0] < rhs[0]


def test_variational_formula_is_equality_at_g_equals_f():
    rng = np.random.default_rng(5)
    for phi in ADMISSIBLE:
        ctx = Context(rho=1.5)
        f = FunctionSampler(SamplerFamily.RANDOM_BOUNDED).draw(phi, poisson(1.5).n_max + 2, rng)
        lhs, rhs, _ = sides(InequalityId.VARIATIONAL, phi, f, ctx, f.copy())
        assert abs(lhs[0] - rhs[0]) <= 1e-10 * max(abs(rhs[0]), 1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(list(SamplerFamily)))
def test_samplers_stay_inside_domain(seed, family):
    rng = np.random.default_rng(seed)
    for phi in ADMISSIBLE + [neg_log()]:
        f = FunctionSampler(family).draw(phi, 12, rng)
        assert np.all(np.isfinite(f))
        phi.require(f)


def test_project_into_clips_half_line():
    f = project_into(p1(), np.array([-3.0, 0.0, 2.0]))
    assert np.all(f > 0) and f[2] == 2.0


def test_two_point_U_slopes_against_finite_differences():
    phi = p1()
    f, g = (0.7, 2.3), (0.4, 0.9)
    res = two_point_U(phi, f, g)
    a, b = f

    def U(p):
        q = 1 - p
        return q * phi(a) + p * phi(b) - phi(q * a + p * b) - p * q * (q * g[0] + p * g[1])

    h = 1e-6
    assert res.du0 == pytest.approx((U(h) - U(0)) / h, abs=1e-5)
    assert res.du1 == pytest.approx((U(1) - U(1 - h)) / h, abs=1e-5)


@pytest.mark.parametrize("phi", [p1(), p2()], ids=lambda p: p.name)
def test_two_point_U_sweep_criterion_matches_grid(phi):
    res = two_point_U_sweep(phi, cases=200, seed=3, p_grid=2000)
    assert res.passed, res.witness
    assert res.ambiguous < 20


def test_extremal_search_p2_poisson_reaches_one():
    ctx = Context(rho=1.0)
    init = np.random.default_rng(0).uniform(0.5, 2.0, poisson(1.0).n_max + 2)
    res = find_extremal("POISSON_A", p2(), ctx, init, budget=4000, restarts=3)
    assert res.ratio >= 0.999
    assert res.monotone


def test_extremal_search_never_beats_inequality():
    ctx = Context(n=4, p=0.3)
    init = np.random.default_rng(1).uniform(0.5, 2.0, 6)
    res = find_extremal("BINOMIAL", p1(), ctx, init, budget=3000, restarts=3)
    assert res.ratio <= 1 + 1e-9
    assert res.monotone


def test_best_constant_p2_is_two():
    bc = best_constant(p2(), QueueParams(1.0, 1.0), candidates=100, budget=3000)
    assert bc.value == pytest.approx(2.0, abs=1e-3)
    assert bc.value <= bc.sampled_min


def test_best_constant_p1_between_one_and_two_and_scale_invariant():
    a = best_constant(p1(), QueueParams(1.0, 1.0), candidates=100, budget=3000, seed=4)
    b = best_constant(p1(), QueueParams(2.0, 2.0), candidates=100, budget=3000, seed=4)
    assert 1.0 - 1e-9 <= a.value <= 2.0 + 1e-9
    assert a.value == pytest.approx(b.value, rel=1e-9)


def test_tensorisation_fails_for_non_admissible_phi():
    w = tensorisation_witness(neg_log(), trials=2000)
    assert w is not None and w["gap"] < 0


def test_tensorisation_holds_for_admissible_phi():
    assert tensorisation_witness(p1(), trials=2000) is None


def test_cached_measures_are_normalised():
    for m in (poisson(3.0), binomial(7, 0.2)):
        assert math.isclose(math.fsum(m.weights) + m.tail_bound, 1.0, rel_tol=1e-14)
