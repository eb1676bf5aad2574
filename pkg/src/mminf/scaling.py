"""Gaussian-side machinery and the Poisson → Gaussian / M/M/∞ → OU scaling checks.

The scaled lattice function is ``f_N = g ∘ κ_N`` with ``κ_N(n) = (n - ρN)/√N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .measures import FINE_TAIL, MeasureKind, expectation, make_measure, phi_entropy
from .phi import PhiFunction, transform_A, transform_B, transform_C
from .queue import LocalVariant, QueueParams, local_sides, local_window

QUAD_NODES = 128


@dataclass(frozen=True)
class GaussianMeasure:
    """N(mean, variance) with a probabilists' Gauss–Hermite rule."""

    mean: float
    variance: float
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @classmethod
    def make(cls, mean: float, variance: float, order: int = QUAD_NODES) -> "GaussianMeasure":
        if not variance > 0:
            raise ValueError("variance must be positive")
        x, w = hermegauss(order)
        w = w / math.sqrt(2.0 * math.pi)
        return cls(float(mean), float(variance), mean + math.sqrt(variance) * x, w)

    def expect(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        return math.fsum(self.weights * np.asarray(fn(self.nodes), dtype=float))

    def moment_errors(self) -> tuple[float, float, float]:
        """Errors of ∫1, ∫(y - mean), ∫(y - mean)² against 1, 0, variance."""
        c = self.nodes - self.mean
        return (
            abs(math.fsum(self.weights) - 1.0),
            abs(math.fsum(self.weights * c)),
            abs(math.fsum(self.weights * c * c) - self.variance),
        )


def gaussian_phi_entropy(gm: GaussianMeasure, phi: PhiFunction, g: Callable) -> float:
    vals = np.asarray(g(gm.nodes), dtype=float)
    phi.require(vals)
    return math.fsum(gm.weights * phi(vals)) - float(phi(math.fsum(gm.weights * vals)))


def gaussian_C(gm: GaussianMeasure, phi: PhiFunction, g: Callable, dg: Callable) -> float:
    """⟨N, C(g, g')⟩ = ⟨N, Φ''(g) g'²⟩."""
    vals = np.asarray(g(gm.nodes), dtype=float)
    phi.require(vals)
    return gm.expect(lambda y: transform_C(phi, vals, dg(y)))


def kappa(N: int, rho: float, n) -> np.ndarray:
    return (np.asarray(n, dtype=float) - rho * N) / math.sqrt(N)


def scaled_function(g: Callable, N: int, rho: float, length: int, phi: PhiFunction | None = None) -> np.ndarray:
    """f_N = g ∘ κ_N on 0..length-1, rejected if it leaves Φ's interval."""
    f = np.asarray(g(kappa(N, rho, np.arange(length))), dtype=float)
    if phi is not None:
        phi.require(f)
    return f


@dataclass
class ScalingReport:
    N_grid: list
    lhs_sequence: list
    rhs_sequence: list
    gaussian_target: tuple  # (lhs target, rhs target)
    relative_gap_sequence: list  # (lhs gap, rhs gap) per N
    extra: dict = field(default_factory=dict)

    def rows(self):
        yield ["N", "lhs", "rhs", "lhs_target", "rhs_target", "lhs_gap", "rhs_gap"]
        for N, l, r, (gl, gr) in zip(self.N_grid, self.lhs_sequence, self.rhs_sequence, self.relative_gap_sequence):
            yield [N, l, r, self.gaussian_target[0], self.gaussian_target[1], gl, gr]


def _gap(x, target):
    return abs(x - target) / max(abs(target), 1e-300)


def poisson_to_gauss(
    phi: PhiFunction,
    rho: float,
    g: Callable,
    dg: Callable,
    N_grid=(10, 100, 1000),
) -> ScalingReport:
    """Ent_{P(Nρ)}[f_N] and ρN⟨A(f_N, Df_N)⟩ against their Gaussian limits
    Ent_{N(0,ρ)}[g] and ½ρ⟨N(0,ρ), C(g, g')⟩.  The B-transform analogue
    ρN⟨B(f_N, Df_N)⟩ (limit ρ⟨C⟩, twice as large) is kept in ``extra``."""
    gm = GaussianMeasure.make(0.0, rho)
    lhs_t = gaussian_phi_entropy(gm, phi, g)
    rhs_t = 0.5 * rho * gaussian_C(gm, phi, g, dg)
    lhs_s, rhs_s, rhs_b, gaps = [], [], [], []
    for N in N_grid:
        m = make_measure(MeasureKind.POISSON, tail_tol=FINE_TAIL, rho=rho * N)
        f = scaled_function(g, N, rho, m.n_max + 2, phi)
        d = f[1:] - f[:-1]
        lhs = phi_entropy(m, phi, f)
        rhs = rho * N * expectation(m, transform_A(phi, f[:-1], d))
        lhs_s.append(lhs)
        rhs_s.append(rhs)
        rhs_b.append(rho * N * expectation(m, transform_B(phi, f[:-1], d)))
        gaps.append((_gap(lhs, lhs_t), _gap(rhs, rhs_t)))
    return ScalingReport(list(N_grid), lhs_s, rhs_s, (lhs_t, rhs_t), gaps, {"rhs_b_sequence": rhs_b, "rhs_b_target": 2 * rhs_t})


# --- OU constants ---------------------------------------------------------


def K_const(rho: float, p: float) -> float:
    return 0.5 * rho * (1.0 - p) * (1.0 + 2.0 * p)


def K_star(rho: float, p: float) -> float:
    return 0.5 * rho * (1.0 - p) * (1.0 + p)


def theta(p: float) -> float:
    """K/K* = 1 + 1/(1 + 1/p), continued to θ = 3/2 at p = 1 and 1 at p = 0."""
    return 1.0 + p / (1.0 + p)


@dataclass
class ThetaCurve:
    times: np.ndarray
    K: np.ndarray
    K_star: np.ndarray
    theta: np.ndarray

    def rows(self):
        yield ["t", "K", "K_star", "theta"]
        for r in zip(self.times, self.K, self.K_star, self.theta):
            yield [float(x) for x in r]


def theta_curve(t_grid, mu: float = 1.0, rho: float = 1.0) -> ThetaCurve:
    if mu <= 0:
        raise ValueError("mu must be positive")
    t = np.asarray(t_grid, dtype=float)
    p = np.exp(-mu * t)
    return ThetaCurve(t, K_const(rho, p), K_star(rho, p), theta(p))


@dataclass
class OUScalingReport:
    """Local M/M/∞ inequalities at input rate Nλ, started at z_N = ⌊Nρ + √N y⌋.

    For each N the recovered constants are RHS_N / ⟨OU law, C(g, g')⟩, one
    for the product-form local bound and one for the interpolated one."""

    N_grid: list
    t: float
    y: float
    lhs_sequence: list
    lhs_target: float
    c_target: float  # ⟨L(U_t | U_0 = y), C(g, g')⟩
    product_constants: list
    interpolated_constants: list
    K: float
    K_star: float
    theta: float

    @property
    def lhs_gaps(self):
        return [_gap(x, self.lhs_target) for x in self.lhs_sequence]

    @property
    def ratios(self):
        return [a / b for a, b in zip(self.product_constants, self.interpolated_constants)]

    def gaps_to(self, which: str, target: float):
        seq = self.product_constants if which == "product" else self.interpolated_constants
        return [_gap(x, target) for x in seq]

    def rows(self):
        yield ["N", "lhs", "lhs_target", "product_constant", "interpolated_constant", "K", "K_star", "theta"]
        for N, l, a, b in zip(self.N_grid, self.lhs_sequence, self.product_constants, self.interpolated_constants):
            yield [N, l, self.lhs_target, a, b, self.K, self.K_star, self.theta]


def ou_local_check(
    phi: PhiFunction,
    params: QueueParams,
    y: float,
    t: float,
    g: Callable,
    dg: Callable,
    N_grid=(10, 100, 1000),
) -> OUScalingReport:
    if params.mu <= 0:
        raise ValueError("mu must be positive")
    rho = params.rho
    p = params.p(t)
    gm = GaussianMeasure.make(y * p, rho * (1.0 - p * p))
    lhs_t = gaussian_phi_entropy(gm, phi, g)
    c_t = gaussian_C(gm, phi, g, dg)
    lhs_s, k_prod, k_int = [], [], []
    for N in N_grid:
        pn = params.scaled(N)
        z = int(math.floor(N * rho + math.sqrt(N) * y))
        f = scaled_function(g, N, rho, local_window(pn, t, z), phi)
        lhs, rhs19 = local_sides(LocalVariant.MMI_LOC, pn, phi, f, t, z)
        _, rhs21 = local_sides(LocalVariant.MMI_LOC_NEW, pn, phi, f, t, z)
        lhs_s.append(lhs)
        k_prod.append(rhs19 / c_t)
        k_int.append(rhs21 / c_t)
    return OUScalingReport(list(N_grid), t, y, lhs_s, lhs_t, c_t, k_prod, k_int, K_const(rho, p), K_star(rho, p), theta(p))
