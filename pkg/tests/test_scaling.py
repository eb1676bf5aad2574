import math

import numpy as np
import pytest

from mminf.phi import p1, p2, p3
from mminf.queue import QueueParams
from mminf.scaling import (
    GaussianMeasure,
    K_const,
    K_star,
    gaussian_C,
    gaussian_phi_entropy,
    kappa,
    ou_local_check,
    poisson_to_gauss,
    scaled_function,
    theta,
    theta_curve,
)


def _exp_half(y):
    return np.exp(0.5 * y)


def _dexp_half(y):
    return 0.5 * np.exp(0.5 * y)


def _g(y):
    return 2.0 + np.tanh(y)


def _dg(y):
    return 1.0 / np.cosh(y) ** 2


@pytest.mark.parametrize("mean,var", [(0.0, 1.0), (0.3, 2.5), (-1.0, 0.01)])
def test_gaussian_rule_moments(mean, var):
    errs = GaussianMeasure.make(mean, var).moment_errors()
    assert max(errs) < 1e-12 * max(1.0, var)


def test_gaussian_rejects_non_positive_variance():
    with pytest.raises(ValueError):
        GaussianMeasure.make(0.0, 0.0)


def _trapezoid_entropy(rho, g, phi):
    y = np.linspace(-40 * math.sqrt(rho), 40 * math.sqrt(rho), 1_000_001)
    dens = np.exp(-y * y / (2 * rho)) / math.sqrt(2 * math.pi * rho)
    vals = g(y)
    mean = np.trapezoid(dens * vals, y)
    return np.trapezoid(dens * phi(vals), y) - phi(mean)


@pytest.mark.parametrize("rho", [0.5, 1.0, 3.0])
def test_gaussian_entropy_against_trapezoid_and_closed_form(rho):
    gm = GaussianMeasure.make(0.0, rho)
    ent = gaussian_phi_entropy(gm, p1(), _exp_half)
    closed = rho / 8 * math.exp(rho / 8)
    assert ent == pytest.approx(closed, rel=1e-10)
    assert ent == pytest.approx(_trapezoid_entropy(rho, _exp_half, p1()), rel=1e-8)
    # exponentials are the equality case of the Gaussian log-Sobolev inequality
    assert 0.5 * rho * gaussian_C(gm, p1(), _exp_half, _dexp_half) == pytest.approx(closed, rel=1e-10)


def test_gaussian_p2_identity_is_variance():
    gm = GaussianMeasure.make(0.0, 1.7)
    assert gaussian_phi_entropy(gm, p2(), lambda y: y) == pytest.approx(1.7, rel=1e-12)
    assert 0.5 * 1.7 * gaussian_C(gm, p2(), lambda y: y, np.ones_like) == pytest.approx(1.7, rel=1e-12)


def test_kappa_and_scaled_function():
    assert kappa(100, 2.0, 200) == 0.0
    assert kappa(4, 1.0, 6) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        scaled_function(lambda y: y, 10, 1.0, 30, p1())


def test_theta_values():
    assert theta(1.0) == 1.5
    assert theta(0.5) == pytest.approx(4 / 3, rel=1e-15)
    assert theta(0.0) == 1.0
    curve = theta_curve([0.0, 1.0, 40.0], mu=1.0, rho=2.0)
    assert curve.theta[0] == 1.5
    assert abs(curve.theta[-1] - 1.0) < 1e-12
    assert np.all(curve.K >= curve.K_star)
    assert np.all(np.diff(curve.theta) < 0)
    assert len(list(curve.rows())) == 4
    with pytest.raises(ValueError):
        theta_curve([1.0], mu=0.0)


def test_K_dominates_K_star():
    p = np.linspace(0, 1, 101)
    assert np.all(K_const(1.3, p) >= K_star(1.3, p))
    inner = p[:-1]  # both constants vanish at p = 1
    np.testing.assert_allclose(K_const(1.3, inner) / K_star(1.3, inner), theta(inner), rtol=1e-14)


def test_poisson_to_gauss_gaps_shrink():
    rep = poisson_to_gauss(p1(), 1.0, _g, _dg, (10, 100, 1000))
    gl = [g[0] for g in rep.relative_gap_sequence]
    gr = [g[1] for g in rep.relative_gap_sequence]
    assert gl[0] > gl[1] > gl[2] and gr[0] > gr[1] > gr[2]
    assert gl[-1] < 0.05 and gr[-1] < 0.05
    # the B analogue converges to twice the A limit
    assert rep.extra["rhs_b_sequence"][-1] == pytest.approx(rep.extra["rhs_b_target"], rel=0.05)
    assert len(list(rep.rows())) == 4


def test_poisson_to_gauss_p2_linear_is_exact():
    rep = poisson_to_gauss(p2(), 2.0, lambda y: y, np.ones_like, (10, 100))
    for lhs, rhs in zip(rep.lhs_sequence, rep.rhs_sequence):
        assert lhs == pytest.approx(2.0, rel=1e-10)
        assert rhs == pytest.approx(2.0, rel=1e-10)


def test_poisson_to_gauss_p3():
    rep = poisson_to_gauss(p3(1.5), 1.0, _g, _dg, (10, 100, 1000))
    assert max(rep.relative_gap_sequence[-1]) < 0.05


def test_ou_local_check_entropy_converges():
    rep = ou_local_check(p1(), QueueParams(1.0, 1.0), 0.0, 1.0, _g, _dg, (10, 100, 1000))
    gaps = rep.lhs_gaps
    assert gaps[0] > gaps[1] > gaps[2] and gaps[-1] < 0.05
    # the interpolated constant tends to K*
    assert rep.gaps_to("interpolated", rep.K_star)[-1] < 0.05
    assert rep.theta == pytest.approx(theta(math.exp(-1.0)))
    assert len(list(rep.rows())) == 4


def test_ou_p2_linear_local_bound_constants():
    """With g(y) = y the P2 local bounds are affine-exact and the OU entropy is the variance."""
    params = QueueParams(1.0, 1.0)
    rep = ou_local_check(p2(), params, 0.0, 1.0, lambda y: y, np.ones_like, (100, 1000))
    p = params.p(1.0)
    assert rep.lhs_target == pytest.approx(1 - p * p, rel=1e-12)
    assert rep.lhs_sequence[-1] == pytest.approx(rep.lhs_target, rel=5e-3)
    assert rep.c_target == pytest.approx(2.0, rel=1e-12)


def test_ou_check_needs_service():
    with pytest.raises(ValueError):
        ou_local_check(p1(), QueueParams(1.0, 0.0), 0.0, 1.0, _g, _dg, (10,))
