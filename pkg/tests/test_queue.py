import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom, poisson

from mminf.measures import MeasureKind, expectation, make_measure, phi_entropy
from mminf.phi import p1, p2, p3, power_mixture, sample_interior
from mminf.queue import (
    LocalVariant,
    QueueIdentity,
    QueueParams,
    apply_generator,
    carre_du_champ,
    carre_du_champ_closed,
    check_queue_identity,
    eigen_residual,
    eigenfunction,
    entropy_decay_curve,
    gamma_two,
    gamma_two_closed,
    local_sides,
    local_window,
    mehler_law,
    poisson_support,
    semigroup_window,
    spectral_gap,
)

ADMISSIBLE = [p1(), p2(), p3(1.5), power_mixture()]


def test_params_validation():
    with pytest.raises(ValueError):
        QueueParams(-1.0, 1.0)
    with pytest.raises(ValueError):
        QueueParams(0.0, 0.0)
    with pytest.raises(ValueError):
        QueueParams(1.0, 0.0).rho
    assert QueueParams(2.0, 0.0).poisson_intensity(3.0) == 6.0
    assert QueueParams(2.0, 1.0).scaled(10) == QueueParams(20.0, 1.0)


def test_mehler_law_matches_binomial_poisson_convolution():
    params = QueueParams(2.0, 1.0)
    t, n = 0.7, 6
    law = mehler_law(params, t, n)
    k = np.arange(law.n_max + 1)
    p = params.p(t)
    oracle = np.array([sum(binom.pmf(j, n, p) * poisson.pmf(kk - j, params.rho * params.q(t)) for j in range(0, min(n, kk) + 1)) for kk in k])
    # atoms below the 1e-16 truncation tail miss contributions from truncated factors
    np.testing.assert_allclose(law.weights, oracle, rtol=1e-11, atol=1e-16)


def test_mehler_law_without_service_is_shifted_poisson():
    law = mehler_law(QueueParams(1.5, 0.0), 2.0, 3)
    k = np.arange(law.n_max + 1)
    np.testing.assert_allclose(law.weights, np.where(k >= 3, poisson.pmf(k - 3, 3.0), 0.0), atol=1e-15)


def test_semigroup_converges_to_poisson_mean():
    params = QueueParams(3.0, 2.0)
    f = np.arange(200, dtype=float) ** 2
    out = semigroup_window(params, 40.0, f, 10)
    rho = params.rho
    np.testing.assert_allclose(out, rho + rho * rho, rtol=1e-10)


@pytest.mark.parametrize("tag", [t for t in QueueIdentity if t not in (QueueIdentity.ENT_LOC, QueueIdentity.PROPB_POI)])
def test_queue_identities(tag):
    rep = check_queue_identity(tag, cases=200, seed=5)
    assert rep.passed, rep.to_dict()
    assert rep.max_deviation < 1e-10


@pytest.mark.parametrize("phi", ADMISSIBLE, ids=lambda p: p.name)
def test_poisson_integration_by_parts_for_each_phi(phi):
    rep = check_queue_identity(QueueIdentity.PROPB_POI, phi=phi, cases=200, seed=5)
    assert rep.passed and rep.max_deviation < 1e-10


@pytest.mark.parametrize("phi", [p1(), p2()], ids=lambda p: p.name)
def test_entropy_along_semigroup_time_integral(phi):
    rep = check_queue_identity(QueueIdentity.ENT_LOC, phi=phi, cases=4, seed=2)
    assert rep.passed, rep.to_dict()
    assert rep.max_deviation < 1e-7


def test_carre_du_champ_and_gamma_two_closed_forms():
    rng = np.random.default_rng(0)
    for _ in range(50):
        params = QueueParams(float(rng.uniform(0.1, 4)), float(rng.uniform(0.1, 3)))
        f = rng.normal(size=30)
        np.testing.assert_allclose(carre_du_champ(params, f), carre_du_champ_closed(params, f), rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(gamma_two(params, f)[:28], gamma_two_closed(params, f)[:28], rtol=1e-9, atol=1e-10)


def test_gamma_two_dominates_half_lambda_mu_gradient():
    """Γ₂(f) ≥ ¾λμ|Df|² pointwise, the curvature bound behind the P2 rate."""
    rng = np.random.default_rng(1)
    for _ in range(50):
        params = QueueParams(float(rng.uniform(0.1, 4)), float(rng.uniform(0.1, 3)))
        f = rng.normal(size=25)
        g2 = gamma_two_closed(params, f)
        d = np.diff(f)[: len(g2)]
        assert np.all(g2 >= 0.75 * params.lam * params.mu * d * d - 1e-12)


def test_generator_kills_constants_and_moves_identity():
    params = QueueParams(2.5, 1.5)
    assert np.allclose(apply_generator(params, np.ones(20)), 0.0)
    n = np.arange(20, dtype=float)
    np.testing.assert_allclose(apply_generator(params, n), params.lam - params.mu * n[:-1])


@pytest.mark.parametrize("lam,mu", [(2.0, 1.0), (5.0, 2.0), (0.3, 0.7)])
def test_spectral_gap_is_service_rate(lam, mu):
    res = spectral_gap(QueueParams(lam, mu), 300, full=True)
    assert abs(res.gap - mu) / mu < 1e-6
    # the spectrum of the infinite queue is -kμ; the low eigenvalues are unaffected by truncation
    np.testing.assert_allclose(-res.eigenvalues[:6], mu * np.arange(6), atol=1e-8 * mu)


def test_spectral_gap_rejects_short_truncation():
    with pytest.raises(ValueError, match="trunc"):
        spectral_gap(QueueParams(50.0, 1.0), 40)


def test_eigenfunction_is_charlier_like():
    params = QueueParams(2.0, 1.0)
    f = eigenfunction(params, -1.0, 30)
    # the first eigenfunction is affine: 1 - n/ρ
    np.testing.assert_allclose(f.values, 1 - np.arange(31) / params.rho, atol=1e-12)
    assert eigen_residual(params, -1.0, f) < 1e-12
    for k in (2, 3):
        assert eigen_residual(params, -k * params.mu, eigenfunction(params, -k * params.mu, 20)) < 1e-9


def test_entropy_decay_p2_exact_for_linear_function():
    params = QueueParams(2.0, 1.0)
    n = np.arange(2 * poisson_support(params).n_max + 4, dtype=float)
    times = np.linspace(0.1, 3.0, 30)
    curve = entropy_decay_curve(params, p2(), n, times)
    np.testing.assert_allclose(curve.values, params.rho * np.exp(-2 * times), rtol=1e-8)
    assert curve.rate == 2.0


@pytest.mark.parametrize("phi", [p1(), p3(1.5), power_mixture()], ids=lambda p: p.name)
def test_entropy_decay_bounded_and_monotone(phi):
    params = QueueParams(2.0, 1.0)
    rng = np.random.default_rng(4)
    f = sample_interior(phi, rng, 2 * poisson_support(params).n_max + 4)
    curve = entropy_decay_curve(params, phi, f, np.linspace(0.1, 3.0, 30))
    assert curve.rate == 1.0
    assert curve.within_bound and curve.monotone


@pytest.mark.parametrize("variant", [LocalVariant.MMI_LOC, LocalVariant.MMI_LOC_NEW])
@pytest.mark.parametrize("phi", ADMISSIBLE, ids=lambda p: p.name)
def test_local_entropy_inequalities_hold(variant, phi):
    rng = np.random.default_rng(7)
    for _ in range(30):
        params = QueueParams(float(rng.uniform(0.2, 4)), float(rng.uniform(0.2, 2)))
        t = float(rng.uniform(0.05, 3))
        n = int(rng.integers(0, 8))
        f = sample_interior(phi, rng, local_window(params, t, n))
        lhs, rhs = local_sides(variant, params, phi, f, t, n)
        assert lhs <= rhs * (1 + 1e-9) + 1e-14


def test_local_poincare_equality_for_linear_function():
    params = QueueParams(2.0, 1.0)
    t, n = 0.8, 4
    f = np.arange(local_window(params, t, n), dtype=float)
    lhs, rhs = local_sides(LocalVariant.LOCAL_POINCARE, params, None, f, t, n)
    assert math.isclose(lhs, rhs, rel_tol=1e-10)


def test_local_inequalities_collapse_at_time_zero_limit():
    params = QueueParams(2.0, 1.0)
    f = np.linspace(1, 3, local_window(params, 1e-9, 3))
    lhs, rhs = local_sides(LocalVariant.MMI_LOC, params, p1(), f, 1e-9, 3)
    # both sides are O(t)
    assert 0 <= lhs <= rhs < 1e-7


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.1, 3.0), st.floats(0.01, 4.0), st.integers(0, 12))
def test_mehler_mean_and_variance(lam, mu, t, n):
    params = QueueParams(lam, mu)
    law = mehler_law(params, t, n)
    k = np.arange(law.n_max + 1, dtype=float)
    p, q = params.p(t), params.q(t)
    mean = expectation(law, k)
    assert math.isclose(mean, n * p + params.rho * q, rel_tol=1e-11, abs_tol=1e-13)
    var = expectation(law, (k - mean) ** 2)
    assert math.isclose(var, n * p * q + params.rho * q, rel_tol=1e-9, abs_tol=1e-13)


def test_stationary_entropy_of_constant_is_zero():
    params = QueueParams(1.0, 1.0)
    m = make_measure(MeasureKind.POISSON, rho=params.rho)
    assert abs(phi_entropy(m, p1(), np.full(m.n_max + 1, 2.0))) < 1e-15
