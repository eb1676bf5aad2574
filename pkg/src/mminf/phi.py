"""Convex functions Φ, their A-B-C transforms and convexity classification.

For a smooth Φ on an open interval I the three transforms are

    A(u, v) = Φ(u+v) - Φ(u) - Φ'(u) v
    B(u, v) = (Φ'(u+v) - Φ'(u)) v
    C(u, v) = Φ''(u) v²

defined for u, u+v in I (C only needs u in I).  All transform functions
below are vectorised over numpy arrays.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import ndtri

from .quadrature import adaptive_gauss_legendre
from .report import VerificationReport, identity_report, inequality_report

INTERIOR_MARGIN = 1e-6
CONVEXITY_TOL = 1e-9
ROUNDING_ULPS = 32


class DomainError(ValueError):
    """A point lies outside the open interval of Φ."""


class Family(enum.Enum):
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    NEG_LOG = "NEG_LOG"
    NEG_XLOGNEGX = "NEG_XLOGNEGX"
    POWER_MIXTURE = "POWER_MIXTURE"
    NEG_GAUSS_ISOP = "NEG_GAUSS_ISOP"
    CUSTOM = "CUSTOM"


Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PhiFunction:
    """A smooth function on the open interval ``(lo, hi)`` with derivatives 0..4.

    ``derivs[k]`` evaluates the k-th derivative; evaluators must accept
    numpy arrays.  ``bregman``, when given, evaluates Φ(u+v) - Φ(u) - Φ'(u)v
    without the cancellation of the direct formula.
    """

    name: str
    family: Family
    lo: float
    hi: float
    derivs: tuple[Evaluator, Evaluator, Evaluator, Evaluator, Evaluator]
    params: dict = field(default_factory=dict, compare=False)
    bregman: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    def __call__(self, u):
        return self.derivs[0](np.asarray(u, dtype=float))

    def d(self, k: int, u):
        return self.derivs[k](np.asarray(u, dtype=float))

    def d1(self, u):
        return self.d(1, u)

    def d2(self, u):
        return self.d(2, u)

    def d3(self, u):
        return self.d(3, u)

    def d4(self, u):
        return self.d(4, u)

    def contains(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return (u > self.lo) & (u < self.hi)

    def require(self, *arrays) -> None:
        for arr in arrays:
            arr = np.asarray(arr, dtype=float)
            if not np.all(self.contains(arr)):
                bad = arr[~self.contains(arr)].ravel()[0]
                raise DomainError(f"{bad!r} is outside ({self.lo}, {self.hi}) for {self.name}")

    def plus_affine(self, a: float, b: float) -> "PhiFunction":
        """Return Φ(u) + a u + b."""
        d0, d1, d2, d3, d4 = self.derivs
        return PhiFunction(
            name=f"{self.name}+affine",
            family=Family.CUSTOM,
            lo=self.lo,
            hi=self.hi,
            derivs=(lambda u: d0(u) + a * u + b, lambda u: d1(u) + a, d2, d3, d4),
            params={"base": self.name, "a": a, "b": b},
            bregman=self.bregman,
        )

    def describe(self) -> dict:
        return {"name": self.name, "family": self.family.value, "interval": [self.lo, self.hi], **self.params}


# --- families -------------------------------------------------------------


def _xlogx_excess(x):
    """(1 + x) log(1 + x) - x for x > -1, by series near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-2
    xs = np.where(small, x, 0.0)
    series = sum((-1) ** k * xs**k / (k * (k - 1)) for k in range(2, 11))
    xl = np.where(small, 0.5, x)
    direct = (1.0 + xl) * np.log1p(xl) - xl
    return np.where(small, series, direct)


def p1() -> PhiFunction:
    """u log u on (0, inf)."""
    return PhiFunction(
        "P1",
        Family.P1,
        0.0,
        math.inf,
        (
            lambda u: u * np.log(u),
            lambda u: np.log(u) + 1.0,
            lambda u: 1.0 / u,
            lambda u: -1.0 / u**2,
            lambda u: 2.0 / u**3,
        ),
        bregman=lambda u, v: u * _xlogx_excess(v / u),
    )


def p2() -> PhiFunction:
    """u² on the real line."""
    return PhiFunction(
        "P2",
        Family.P2,
        -math.inf,
        math.inf,
        (
            lambda u: u * u,
            lambda u: 2.0 * u,
            lambda u: np.full_like(u, 2.0),
            lambda u: np.zeros_like(u),
            lambda u: np.zeros_like(u),
        ),
        bregman=lambda u, v: v * v,
    )


def p3(alpha: float = 1.5) -> PhiFunction:
    """u^alpha on (0, inf) with 1 < alpha < 2."""
    if not 1.0 < alpha < 2.0:
        raise ValueError("P3 needs alpha in (1, 2)")
    a = alpha
    return PhiFunction(
        f"P3({a:g})",
        Family.P3,
        0.0,
        math.inf,
        (
            lambda u: u**a,
            lambda u: a * u ** (a - 1),
            lambda u: a * (a - 1) * u ** (a - 2),
            lambda u: a * (a - 1) * (a - 2) * u ** (a - 3),
            lambda u: a * (a - 1) * (a - 2) * (a - 3) * u ** (a - 4),
        ),
        {"alpha": a},
    )


def neg_log() -> PhiFunction:
    """-log u on (0, inf): convex, but -1/Φ'' = -u² is concave."""
    return PhiFunction(
        "NEG_LOG",
        Family.NEG_LOG,
        0.0,
        math.inf,
        (
            lambda u: -np.log(u),
            lambda u: -1.0 / u,
            lambda u: 1.0 / u**2,
            lambda u: -2.0 / u**3,
            lambda u: 6.0 / u**4,
        ),
    )


def neg_xlognegx() -> PhiFunction:
    """-u log(-u) on (-inf, 0)."""
    return PhiFunction(
        "NEG_XLOGNEGX",
        Family.NEG_XLOGNEGX,
        -math.inf,
        0.0,
        (
            lambda u: -u * np.log(-u),
            lambda u: -np.log(-u) - 1.0,
            lambda u: -1.0 / u,
            lambda u: 1.0 / u**2,
            lambda u: -2.0 / u**3,
        ),
    )


_MIX_S, _MIX_W = np.polynomial.legendre.leggauss(32)
_MIX_S = 1.5 + 0.5 * _MIX_S
_MIX_W = 0.5 * _MIX_W


def _mixture_derivative(k: int) -> Evaluator:
    # d^k/du^k of ∫_1^2 u^s ds, integrated exactly in s by Gauss-Legendre
    coef = np.ones_like(_MIX_S)
    for j in range(k):
        coef = coef * (_MIX_S - j)
    weights = _MIX_W * coef

    def evaluate(u):
        u = np.asarray(u, dtype=float)
        powers = np.power.outer(u, _MIX_S - k)
        return powers @ weights

    return evaluate


def power_mixture() -> PhiFunction:
    """u(u-1)/log u = ∫_1^2 u^s ds on (0, inf)."""
    return PhiFunction(
        "POWER_MIXTURE",
        Family.POWER_MIXTURE,
        0.0,
        math.inf,
        tuple(_mixture_derivative(k) for k in range(5)),
    )


def _gauss_isop_parts(u):
    x = ndtri(u)
    dens = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return x, dens


def neg_gauss_isop() -> PhiFunction:
    """-I(u) on (0, 1) with I the Gaussian isoperimetric profile, I I'' = -1."""

    def d0(u):
        return -_gauss_isop_parts(u)[1]

    def d1(u):
        return _gauss_isop_parts(u)[0]

    def d2(u):
        return 1.0 / _gauss_isop_parts(u)[1]

    def d3(u):
        x, i = _gauss_isop_parts(u)
        return x / i**2

    def d4(u):
        x, i = _gauss_isop_parts(u)
        return (1.0 + 2.0 * x * x) / i**3

    return PhiFunction("NEG_GAUSS_ISOP", Family.NEG_GAUSS_ISOP, 0.0, 1.0, (d0, d1, d2, d3, d4))


def custom(name, lo, hi, d0, d1, d2, d3, d4, **params) -> PhiFunction:
    """A user supplied Φ; all five evaluators are required."""
    derivs = (d0, d1, d2, d3, d4)
    if any(not callable(fn) for fn in derivs):
        raise TypeError("custom Φ needs callables for Φ and its first four derivatives")
    return PhiFunction(name, Family.CUSTOM, float(lo), float(hi), derivs, params)


def affine(a: float, b: float, lo=-math.inf, hi=math.inf) -> PhiFunction:
    zero = lambda u: np.zeros_like(np.asarray(u, dtype=float))  # noqa: E731
    return custom(
        "AFFINE", lo, hi, lambda u: a * u + b, lambda u: np.full_like(u, a), zero, zero, zero, a=a, b=b
    )


PHI_FACTORIES = {
    "P1": p1,
    "P2": p2,
    "P3": p3,
    "NEG_LOG": neg_log,
    "NEG_XLOGNEGX": neg_xlognegx,
    "POWER_MIXTURE": power_mixture,
    "NEG_GAUSS_ISOP": neg_gauss_isop,
}


def by_name(name: str) -> PhiFunction:
    """Look up a corpus Φ by tag; ``P3(1.3)`` selects alpha."""
    key = name.strip().upper()
    if key.startswith("P3"):
        alpha = 1.5
        if "(" in key:
            alpha = float(key[key.index("(") + 1 : key.rindex(")")])
        return p3(alpha)
    try:
        return PHI_FACTORIES[key]()
    except KeyError:
        raise KeyError(f"unknown Φ {name!r}; known: {', '.join(PHI_FACTORIES)}") from None


def corpus() -> list[PhiFunction]:
    return [p1(), p2(), p3(1.5), power_mixture(), neg_xlognegx(), neg_gauss_isop(), neg_log()]


# --- sampling inside the interval -----------------------------------------


def working_range(phi: PhiFunction) -> tuple[float, float]:
    """A compact sub-interval of I used to draw function values."""
    lo, hi = phi.lo, phi.hi
    if math.isfinite(lo) and math.isfinite(hi):
        w = hi - lo
        return lo + 0.01 * w, hi - 0.01 * w
    if math.isfinite(lo):
        return lo + 0.05, lo + 20.0
    if math.isfinite(hi):
        return hi - 20.0, hi - 0.05
    return -10.0, 10.0


def sample_interior(phi: PhiFunction, rng: np.random.Generator, size, wide: bool = False) -> np.ndarray:
    """Draw points of I; half-lines are sampled log-uniformly in the offset.

    ``wide`` spreads half-line offsets over [1e-3, 1e3] and bounded
    intervals up to the interior margin.
    """
    lo, hi = phi.lo, phi.hi
    if math.isfinite(lo) and math.isfinite(hi):
        m = INTERIOR_MARGIN if wide else 0.01
        w = hi - lo
        return rng.uniform(lo + m * w, hi - m * w, size)
    if math.isfinite(lo) or math.isfinite(hi):
        a, b = (math.log(1e-3), math.log(1e3)) if wide else (math.log(0.05), math.log(20.0))
        off = np.exp(rng.uniform(a, b, size))
        return lo + off if math.isfinite(lo) else hi - off
    span = 30.0 if wide else 10.0
    return rng.uniform(-span, span, size)


def sample_pairs(phi: PhiFunction, rng: np.random.Generator, size: int, wide: bool = False):
    """Draw (u, v) in the domain of A and B: u and u + v both in I."""
    u = sample_interior(phi, rng, size, wide)
    w = sample_interior(phi, rng, size, wide)
    return u, w - u


# --- transforms -----------------------------------------------------------


class TransformPoint(NamedTuple):
    u: float
    v: float


def transform_A(phi: PhiFunction, u, v, check: bool = True):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if check:
        phi.require(u, u + v)
    if phi.bregman is not None:
        return phi.bregman(u, v)
    return phi(u + v) - phi(u) - phi.d1(u) * v


def transform_B(phi: PhiFunction, u, v, check: bool = True):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if check:
        phi.require(u, u + v)
    return (phi.d1(u + v) - phi.d1(u)) * v


def transform_C(phi: PhiFunction, u, v, check: bool = True):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if check:
        phi.require(u)
    return phi.d2(u) * v * v


def apply_tau(pt: TransformPoint) -> TransformPoint:
    """(u, v) -> (u + v, -v); swaps the two endpoints u and u + v."""
    u, v = pt
    return TransformPoint(u + v, -v)


def apply_sigma(p: float, pt: TransformPoint) -> TransformPoint:
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    u, v = pt
    return TransformPoint(u, p * v)


def _mag_A(phi, u, v):
    # forward-error scale of the A formula (magnitudes of the cancelling terms)
    return np.abs(phi(u + v)) + np.abs(phi(u)) + np.abs(phi.d1(u) * v)


def _mag_B(phi, u, v):
    return np.abs(phi.d1(u + v) * v) + np.abs(phi.d1(u) * v)


# --- identities -----------------------------------------------------------


class TransformIdentity(enum.Enum):
    ABC_SUM = "ABC_SUM"
    B_TAU_INV = "B_TAU_INV"
    SIGMA_C_SQ = "SIGMA_C_SQ"
    INT_REP_A = "INT_REP_A"
    INT_REP_B = "INT_REP_B"
    SMALL_V_ASYMP = "SMALL_V_ASYMP"
    ENT_TWOP = "ENT_TWOP"
    ADTAU = "ADTAU"
    P2_COLLAPSE = "P2_COLLAPSE"


EXACT_TOL = 1e-10
QUADRATURE_TOL = 1e-7
# per-panel relative floor: the absolute target alone is below double precision
# for integrals of size >> 1
QUADRATURE_REL_TOL = 1e-13

IDENTITY_TOLERANCE = {
    TransformIdentity.INT_REP_A: QUADRATURE_TOL,
    TransformIdentity.INT_REP_B: QUADRATURE_TOL,
    TransformIdentity.SMALL_V_ASYMP: QUADRATURE_TOL,
}


def _int_rep(phi, u, v, weight):
    vals = np.empty(len(u))
    ok = True
    for i, (ui, vi) in enumerate(zip(u, v)):
        res = adaptive_gauss_legendre(
            lambda p: weight(p) * transform_C(phi, ui + p * vi, vi, check=False),
            0.0,
            1.0,
            abs_tol=1e-12,
            rel_tol=QUADRATURE_REL_TOL,
        )
        vals[i] = res.value
        ok &= res.converged
    return vals, ok


def _richardson_zero(eps: np.ndarray, values: np.ndarray) -> float:
    """Neville extrapolation of values(eps) to eps = 0."""
    table = list(values)
    n = len(eps)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            table[i] = (eps[i - j] * table[i] - eps[i] * table[i - 1]) / (eps[i - j] - eps[i])
    return table[-1]


def small_v_ratios(phi: PhiFunction, u: float, v: float, levels: int = 8):
    """Limits of A(u, εv)/(ε² C) and B(u, εv)/(ε² C) as ε -> 0.

    The ladder halves the increment εv starting from half the
    distance from u to the nearest endpoint of I (or a quarter of max(1, |u|)
    on the whole line), so that rounding in A and B stays small; the limits
    come from Richardson extrapolation.
    """
    dist = min(u - phi.lo, phi.hi - u)
    reach = 0.5 * dist if math.isfinite(dist) else 0.25 * max(1.0, abs(u))
    eps = (reach / abs(v)) * 0.5 ** np.arange(levels)
    c = transform_C(phi, u, v)
    ra = transform_A(phi, u, eps * v) / (eps**2 * c)
    rb = transform_B(phi, u, eps * v) / (eps**2 * c)
    return _richardson_zero(eps, ra), _richardson_zero(eps, rb), eps, ra, rb


def check_transform_identity(
    tag: TransformIdentity | str, phi: PhiFunction | None = None, samples: int = 1000, seed: int = 0
) -> VerificationReport:
    tag = TransformIdentity(tag)
    if tag is TransformIdentity.P2_COLLAPSE:
        phi = p2()
    if phi is None:
        raise ValueError(f"{tag.value} needs a Φ")
    rng = np.random.default_rng([seed, 1])
    name = f"{tag.value}[{phi.name}]"
    tol = IDENTITY_TOLERANCE.get(tag, EXACT_TOL)
    u, v = sample_pairs(phi, rng, samples)
    p = rng.uniform(0.0, 1.0, samples)

    def wit(i):
        return {"u": u[i % samples], "v": v[i % samples], "p": p[i % samples]}

    flags = []
    if tag is TransformIdentity.ABC_SUM:
        tu, tv = apply_tau(TransformPoint(u, v))
        lhs = transform_A(phi, u, v) + transform_A(phi, tu, tv)
        rhs = transform_B(phi, u, v)
        scale = _mag_A(phi, u, v) + _mag_A(phi, tu, tv) + _mag_B(phi, u, v)
    elif tag is TransformIdentity.B_TAU_INV:
        tu, tv = apply_tau(TransformPoint(u, v))
        lhs = transform_B(phi, tu, tv)
        rhs = transform_B(phi, u, v)
        scale = _mag_B(phi, u, v) + _mag_B(phi, tu, tv)
    elif tag is TransformIdentity.SIGMA_C_SQ:
        su, sv = apply_sigma_array(p, u, v)
        lhs = transform_C(phi, su, sv)
        rhs = p**2 * transform_C(phi, u, v)
        scale = np.abs(rhs)
    elif tag in (TransformIdentity.INT_REP_A, TransformIdentity.INT_REP_B):
        if tag is TransformIdentity.INT_REP_A:
            lhs, ok = _int_rep(phi, u, v, lambda s: 1.0 - s)
            rhs = transform_A(phi, u, v)
            scale = _mag_A(phi, u, v)
        else:
            lhs, ok = _int_rep(phi, u, v, lambda s: np.ones_like(s))
            rhs = transform_B(phi, u, v)
            scale = _mag_B(phi, u, v)
        if not ok:
            flags.append("quadrature-not-converged")
    elif tag is TransformIdentity.SMALL_V_ASYMP:
        lim_a = np.empty(samples)
        lim_b = np.empty(samples)
        for i in range(samples):
            lim_a[i], lim_b[i], *_ = small_v_ratios(phi, u[i], v[i])
        # both limits are stacked: first A -> 1/2, then B -> 1
        lhs = np.concatenate([lim_a, lim_b])
        rhs = np.concatenate([np.full(samples, 0.5), np.ones(samples)])
        scale = rhs
    elif tag is TransformIdentity.ENT_TWOP:
        a, b = u, u + v
        q = 1.0 - p
        lhs = q * phi(a) + p * phi(b) - phi(q * a + p * b)
        rhs = p * transform_A(phi, u, v) - transform_A(phi, u, p * v)
        scale = np.abs(phi(a)) + np.abs(phi(b)) + np.abs(phi(q * a + p * b)) + _mag_A(phi, u, v) + _mag_A(phi, u, p * v)
    elif tag is TransformIdentity.ADTAU:
        return _check_adtau(phi, samples, rng, name, seed)
    elif tag is TransformIdentity.P2_COLLAPSE:
        a2 = 2.0 * transform_A(phi, u, v)
        b = transform_B(phi, u, v)
        c = transform_C(phi, u, v)
        lhs = np.concatenate([a2, b])
        rhs = np.concatenate([b, c])
        scale = np.concatenate([2 * _mag_A(phi, u, v), _mag_B(phi, u, v)])
    else:  # pragma: no cover
        raise ValueError(tag)
    rep = identity_report(name, lhs, rhs, scale, tol, witness_fn=wit, seed=seed)
    rep.case_count = samples
    rep.flags.extend(flags)
    if flags:
        rep.passed = False
    return rep


def apply_sigma_array(p, u, v):
    return u, p * v


def _check_adtau(phi, samples, rng, name, seed):
    lo, hi = working_range(phi)
    lhs_all, rhs_all, scale_all = [], [], []
    for _ in range(samples):
        f = rng.uniform(lo, hi, 12)
        df = f[1:] - f[:-1]
        dstar_shift = f[:-1] - f[1:]  # D*f(n+1) = f(n) - f(n+1)
        # pairs (f, D*f)(1+·) against τ(f, Df)
        tu, tv = apply_tau(TransformPoint(f[:-1], df))
        lhs_all += [f[1:], dstar_shift, transform_A(phi, f[1:], dstar_shift)]
        rhs_all += [tu, tv, transform_A(phi, tu, tv)]
        scale_all += [np.abs(f[1:]), np.abs(df), _mag_A(phi, tu, tv)]
    rep = identity_report(
        name, np.concatenate(lhs_all), np.concatenate(rhs_all), np.concatenate(scale_all), EXACT_TOL, seed=seed
    )
    rep.case_count = samples
    return rep


# --- comparisons ----------------------------------------------------------


class TransformComparison(enum.Enum):
    A_LE_B = "A_LE_B"
    A_LE_C_P1 = "A_LE_C_P1"
    C_THIRD_LE_2A = "C_THIRD_LE_2A"
    C_HALF_LE_B = "C_HALF_LE_B"
    SIGMA_A_LE = "SIGMA_A_LE"
    SIGMA_B_LE = "SIGMA_B_LE"
    PA_MINUS_AP = "PA_MINUS_AP"
    AP_C_A = "AP_C_A"
    ATP_C_A = "ATP_C_A"
    BP_C_B = "BP_C_B"


def comparison_sides(tag: TransformComparison, phi: PhiFunction, u, v, p):
    """Return (lhs, rhs, rounding scale) for the inequality ``lhs <= rhs``."""
    q = 1.0 - p
    A = lambda uu, vv: transform_A(phi, uu, vv)  # noqa: E731
    B = lambda uu, vv: transform_B(phi, uu, vv)  # noqa: E731
    C = lambda uu, vv: transform_C(phi, uu, vv)  # noqa: E731
    tu, tv = u + v, -v
    magA = _mag_A(phi, u, v)
    magB = _mag_B(phi, u, v)
    if tag is TransformComparison.A_LE_B:
        return A(u, v), B(u, v), magA + magB
    if tag is TransformComparison.A_LE_C_P1:
        return A(u, v), C(u, v), magA
    if tag is TransformComparison.C_THIRD_LE_2A:
        return C(u + v / 3.0, v), 2.0 * A(u, v), 2.0 * magA
    if tag is TransformComparison.C_HALF_LE_B:
        return C(u + v / 2.0, v), B(u, v), magB
    if tag is TransformComparison.SIGMA_A_LE:
        return A(u, p * v), p * A(u, v), _mag_A(phi, u, p * v) + p * magA
    if tag is TransformComparison.SIGMA_B_LE:
        return B(u, p * v), p * B(u, v), _mag_B(phi, u, p * v) + p * magB
    if tag is TransformComparison.PA_MINUS_AP:
        lhs = p * A(u, v) - A(u, p * v)
        rhs = p * q * (p * A(tu, tv) + q * A(u, v))
        return lhs, rhs, magA + _mag_A(phi, u, p * v) + _mag_A(phi, tu, tv)
    if tag is TransformComparison.AP_C_A:
        return A(u, p * v), 0.5 * p**2 * q * C(u, v) + p**3 * A(u, v), _mag_A(phi, u, p * v) + magA
    if tag is TransformComparison.ATP_C_A:
        # τ(σ_p(u, v)) = (u + p v, -p v)
        lhs = A(u + p * v, -p * v)
        rhs = 0.5 * p**2 * q * C(u, v) + p**3 * A(tu, tv)
        return lhs, rhs, _mag_A(phi, u + p * v, -p * v) + _mag_A(phi, tu, tv)
    if tag is TransformComparison.BP_C_B:
        return B(u, p * v), p**2 * q * C(u, v) + p**3 * B(u, v), _mag_B(phi, u, p * v) + magB
    raise ValueError(tag)  # pragma: no cover


def check_transform_comparison(
    tag: TransformComparison | str,
    phi: PhiFunction,
    samples: int = 1000,
    seed: int = 0,
    p: float | None = None,
) -> VerificationReport:
    tag = TransformComparison(tag)
    rng = np.random.default_rng([seed, 2])
    u, v = sample_pairs(phi, rng, samples)
    pp = np.full(samples, p) if p is not None else rng.uniform(0.0, 1.0, samples)
    lhs, rhs, scale = comparison_sides(tag, phi, u, v, pp)
    rep = inequality_report(
        f"{tag.value}[{phi.name}]",
        lhs,
        rhs,
        CONVEXITY_TOL,
        rounding=ROUNDING_ULPS * np.finfo(float).eps * scale,
        witness_fn=lambda i: {"u": u[i], "v": v[i], "p": pp[i]},
        seed=seed,
    )
    return rep


# --- admissibility --------------------------------------------------------


class Verdict(enum.Enum):
    ADMISSIBLE = "ADMISSIBLE"
    AFFINE = "AFFINE"
    REJECTED = "REJECTED"


@dataclass
class Admissibility:
    verdict: Verdict
    witness: dict | None
    probes: int
    hessian_verdict: Verdict
    two_point_verdict: Verdict
    min_second_derivative: float
    min_inverse_curvature: float

    @property
    def consistent(self) -> bool:
        return self.verdict == self.hessian_verdict == self.two_point_verdict

    def to_dict(self) -> dict:
        from .report import _plain

        return _plain(
            {
                "verdict": self.verdict.value,
                "witness": self.witness,
                "probes": self.probes,
                "hessian_verdict": self.hessian_verdict.value,
                "two_point_verdict": self.two_point_verdict.value,
                "consistent": self.consistent,
                "min_second_derivative": self.min_second_derivative,
                "min_inverse_curvature": self.min_inverse_curvature,
            }
        )


def inverse_curvature_second_derivative(phi: PhiFunction, u):
    """(-1/Φ'')'' = (Φ''''Φ'' - 2Φ'''²)/Φ''³ and its rounding scale."""
    d2, d3, d4 = phi.d2(u), phi.d3(u), phi.d4(u)
    val = (d4 * d2 - 2.0 * d3 * d3) / d2**3
    scale = (np.abs(d4 * d2) + 2.0 * d3 * d3) / np.abs(d2) ** 3
    return val, scale


def hessian_A(phi: PhiFunction, u, v):
    """Entries (h_uu, h_uv, h_vv) of the Hessian of (u, v) -> A(u, v), plus
    the magnitude of the terms they are assembled from."""
    w = u + v
    d2w, d2u, d3u = phi.d2(w), phi.d2(u), phi.d3(u)
    h_uu = d2w - d2u - d3u * v
    h_uv = d2w - d2u
    h_vv = d2w
    return h_uu, h_uv, h_vv, np.abs(d2w) + np.abs(d2u) + np.abs(d3u * v)


def hessian_two_point(phi: PhiFunction, a, b, t):
    """Hessian of (a, b) -> tΦ(a) + (1-t)Φ(b) - Φ(ta + (1-t)b), plus the
    magnitude of its constituent terms."""
    m = t * a + (1 - t) * b
    dm, da, db = phi.d2(m), phi.d2(a), phi.d2(b)
    h11 = t * da - t * t * dm
    h12 = -t * (1 - t) * dm
    h22 = (1 - t) * db - (1 - t) ** 2 * dm
    return h11, h12, h22, t * np.abs(da) + (1 - t) * np.abs(db) + t * (1 - t) * np.abs(dm) + np.abs(dm) * (t * t + (1 - t) ** 2)


def _psd_violation(h11, h12, h22, mag):
    """Smallest eigenvalue relative to the entry magnitudes; >= -tol means PSD.

    Singular PSD matrices (e.g. Hessians of 1-homogeneous maps) sit at an
    eigenvalue of 0 up to rounding, which the ``mag`` floor absorbs.
    """
    half_tr = 0.5 * (h11 + h22)
    rad = np.hypot(0.5 * (h11 - h22), h12)
    lam_min = half_tr - rad
    # the closed form loses accuracy when lam_min << rad; fall back to det/lam_max
    lam_max = half_tr + rad
    det = h11 * h22 - h12 * h12
    lam_min = np.where(lam_max > 0, np.minimum(lam_min, det / np.where(lam_max > 0, lam_max, 1.0)), lam_min)
    floor = np.maximum(mag, 1e-300)
    return lam_min / floor + ROUNDING_ULPS * np.finfo(float).eps


def _verdict_from(worst, flat):
    if flat:
        return Verdict.AFFINE
    return Verdict.ADMISSIBLE if worst >= -CONVEXITY_TOL else Verdict.REJECTED


def admissibility(phi: PhiFunction, probes: int = 2000, seed: int = 0) -> Admissibility:
    """Classify Φ by the convexity of -1/Φ'' and cross-check two other routes.

    The primary verdict tests Φ'' > 0 and (-1/Φ'')'' >= 0 at probe points.
    It is compared with positive-semidefiniteness of the Hessian of A on
    sampled (u, v) pairs and with convexity of the two-point entropy map.
    """
    rng = np.random.default_rng([seed, 3])
    u = sample_interior(phi, rng, probes, wide=True)
    d2 = phi.d2(u)
    d1 = phi.d1(u)
    flat = bool(np.all(np.abs(d2) <= 1e-12 * (1.0 + np.abs(d1))))
    witness = None
    min_d2 = float(np.min(d2))
    min_inv = float("nan")
    if flat:
        verdict = Verdict.AFFINE
    elif np.any(d2 <= 0):
        i = int(np.argmin(d2))
        verdict = Verdict.REJECTED
        witness = {"u": u[i], "condition": "phi'' > 0", "value": d2[i]}
    else:
        val, scale = inverse_curvature_second_derivative(phi, u)
        rel = val / np.maximum(scale, 1e-300)
        i = int(np.argmin(rel))
        min_inv = float(rel[i])
        if rel[i] < -CONVEXITY_TOL:
            verdict = Verdict.REJECTED
            witness = {"u": u[i], "condition": "(-1/phi'')'' >= 0", "value": val[i]}
        else:
            verdict = Verdict.ADMISSIBLE

    # Hessian of A on (u, v) pairs
    uu, vv = sample_pairs(phi, rng, probes, wide=True)
    worst_a = float(np.min(_psd_violation(*hessian_A(phi, uu, vv))))
    hessian_verdict = _verdict_from(worst_a, flat)

    # two-point entropy map
    a = sample_interior(phi, rng, probes, wide=True)
    b = sample_interior(phi, rng, probes, wide=True)
    t = rng.uniform(0.0, 1.0, probes)
    worst_tp = float(np.min(_psd_violation(*hessian_two_point(phi, a, b, t))))
    two_point_verdict = _verdict_from(worst_tp, flat)

    return Admissibility(
        verdict=verdict,
        witness=witness,
        probes=probes,
        hessian_verdict=hessian_verdict,
        two_point_verdict=two_point_verdict,
        min_second_derivative=min_d2,
        min_inverse_curvature=min_inv,
    )


def two_point_convexity_witness(phi: PhiFunction, trials: int = 20000, seed: int = 0):
    """Search for a chord violating convexity of the two-point entropy map.

    Returns ``None`` when no violation is found, else a dict with the chord
    endpoints, the weight t and the (positive) violation size.
    """
    rng = np.random.default_rng([seed, 4])

    def ent(a, b, t):
        return t * phi(a) + (1 - t) * phi(b) - phi(t * a + (1 - t) * b)

    a1 = sample_interior(phi, rng, trials, wide=True)
    b1 = sample_interior(phi, rng, trials, wide=True)
    a2 = sample_interior(phi, rng, trials, wide=True)
    b2 = sample_interior(phi, rng, trials, wide=True)
    t = rng.uniform(0.0, 1.0, trials)
    s = rng.uniform(0.0, 1.0, trials)
    mid = ent(s * a1 + (1 - s) * a2, s * b1 + (1 - s) * b2, t)
    chord = s * ent(a1, b1, t) + (1 - s) * ent(a2, b2, t)
    scale = np.abs(chord) + np.abs(mid) + 1e-300
    gap = (mid - chord) / scale
    i = int(np.argmax(gap))
    if gap[i] <= 1e-9:
        return None
    return {
        "a1": a1[i], "b1": b1[i], "a2": a2[i], "b2": b2[i], "t": t[i], "s": s[i],
        "midpoint_value": mid[i], "chord_value": chord[i], "violation": mid[i] - chord[i],
    }


def check_derivatives(phi: PhiFunction, probes: int = 64, seed: int = 0) -> float:
    """Largest relative mismatch between central differences and d1..d4."""
    rng = np.random.default_rng([seed, 5])
    u = sample_interior(phi, rng, probes)
    worst = 0.0
    for k in range(4):
        h = 1e-5 * np.maximum(1.0, np.abs(u))
        if math.isfinite(phi.lo):
            h = np.minimum(h, 1e-3 * (u - phi.lo))
        if math.isfinite(phi.hi):
            h = np.minimum(h, 1e-3 * (phi.hi - u))
        fd = (phi.d(k, u + h) - phi.d(k, u - h)) / (2 * h)
        exact = phi.d(k + 1, u)
        scale = np.maximum(np.abs(exact), np.abs(phi.d(k, u)) / np.maximum(np.abs(u), 1.0)) + 1e-12
        worst = max(worst, float(np.max(np.abs(fd - exact) / scale)))
    return worst
