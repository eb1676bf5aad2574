"""Registry of entropic inequalities, function samplers, sweeps and searches.

Every inequality is written ``lhs <= rhs``.  A case's slack is
``(rhs - lhs) / max(|lhs|, |rhs|, 1e-30)``, with a small allowance for the
rounding error of evaluating both sides (see :data:`ROUNDING_ULPS`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .measures import (
    DiscreteMeasure,
    MeasureKind,
    convolve,
    make_measure,
    tensorisation_gap,
    tv_distance,
)
from .phi import (
    Family,
    PhiFunction,
    ROUNDING_ULPS,
    _mag_A,
    _mag_B,
    transform_A,
    transform_B,
    transform_C,
    working_range,
)
from .queue import (
    QueueParams,
    carre_du_champ,
    gamma_two,
    mehler_law,
    semigroup_window,
)
from .report import VerificationReport, inequality_report

LAB_TAIL = 1e-30
SLACK_TOL = 1e-9
_EPS = np.finfo(float).eps


# --- cached measures ------------------------------------------------------


@lru_cache(maxsize=512)
def poisson(rho: float) -> DiscreteMeasure:
    return make_measure(MeasureKind.POISSON, tail_tol=LAB_TAIL, rho=rho)


@lru_cache(maxsize=512)
def binomial(n: int, p: float) -> DiscreteMeasure:
    return make_measure(MeasureKind.BINOMIAL, n=n, p=p)


@lru_cache(maxsize=512)
def binpoi(n: int, p: float, rho: float) -> DiscreteMeasure:
    return convolve(binomial(n, p), poisson(rho))


@lru_cache(maxsize=512)
def bern_product(p_list: tuple) -> DiscreteMeasure:
    return make_measure(MeasureKind.BERN_PRODUCT, p_list=p_list)


# --- small helpers on weight vectors -------------------------------------


def _mean(w, v):
    return math.fsum(w * v)


def _ent(phi: PhiFunction, w, v):
    """(Φ-entropy, rounding magnitude) of v under weights w, in centred form."""
    m = math.fsum(w * v)
    mv = np.full_like(v, m)
    ent = math.fsum(w * transform_A(phi, mv, v - m, check=False))
    return ent, math.fsum(w * _mag_A(phi, mv, v - m))


def _ent_of(phi, measure: DiscreteMeasure, f):
    w = measure.weights
    return _ent(phi, w, f[: len(w)])


def _a_up(phi, f):
    """A(f, Df) on 0..W-1 and its rounding magnitude."""
    d = f[1:] - f[:-1]
    return transform_A(phi, f[:-1], d), _mag_A(phi, f[:-1], d)


def _a_down(phi, f):
    """A(f, D*f) on 1..W (index k holds state k; index 0 is 0)."""
    d = f[:-1] - f[1:]
    out = np.zeros(len(f))
    mag = np.zeros(len(f))
    out[1:] = transform_A(phi, f[1:], d)
    mag[1:] = _mag_A(phi, f[1:], d)
    return out, mag


def _a_tau(phi, f):
    """A(τ(f, Df)) = A(f(·+1), -Df) on 0..W-1."""
    d = f[1:] - f[:-1]
    return transform_A(phi, f[1:], -d), _mag_A(phi, f[1:], -d)


def _b_up(phi, f):
    d = f[1:] - f[:-1]
    return transform_B(phi, f[:-1], d), _mag_B(phi, f[:-1], d)


def _c_up(phi, f):
    d = f[1:] - f[:-1]
    c = transform_C(phi, f[:-1], d)
    return c, np.abs(c)


def _expect(w, vals_mag):
    vals, mag = vals_mag
    k = len(w)
    return math.fsum(w * vals[:k]), math.fsum(w * mag[:k])


# --- registry -------------------------------------------------------------


class InequalityId(enum.Enum):
    TWO_POINT_A = "TWO_POINT_A"
    TWO_POINT_B = "TWO_POINT_B"
    BERN_PRODUCT = "BERN_PRODUCT"
    BINOMIAL = "BINOMIAL"
    BINOMIAL_ALT = "BINOMIAL_ALT"
    POISSON_A = "POISSON_A"
    POISSON_B_LIMIT = "POISSON_B_LIMIT"
    BINPOI = "BINPOI"
    ENTROPY_DECAY = "ENTROPY_DECAY"
    TV_ENT = "TV_ENT"
    MIXED_BC_LIMIT = "MIXED_BC_LIMIT"
    GAMMA2_GE = "GAMMA2_GE"
    TENSORISATION = "TENSORISATION"
    VARIATIONAL = "VARIATIONAL"


DESCRIPTIONS = {
    InequalityId.TWO_POINT_A: "Bernoulli(p): Ent[f] <= pq <A(f, Df)>, D taken mod 2",
    InequalityId.TWO_POINT_B: "Bernoulli(p): Ent[f] <= pq <B(f, Df)>",
    InequalityId.BERN_PRODUCT: "Bernoulli convolution M: Ent_M[f] <= C_M <(n-h)A(f,Df) + h A(f,D*f)>, C_M = max p_i q_i",
    InequalityId.BINOMIAL: "Binomial(n,p): Ent[f] <= pq <(n-h)A(f,Df) + h A(f,D*f)>",
    InequalityId.BINOMIAL_ALT: "Binomial(n,p): Ent[f] <= npq <q A(f,Df) + p A(tau(f,Df))> under Binomial(n-1,p)",
    InequalityId.POISSON_A: "Poisson(rho): Ent[f] <= rho <A(f, Df)>",
    InequalityId.POISSON_B_LIMIT: "Poisson(rho): Ent[f] <= rho <B(f, Df)> (infinite-horizon interpolation)",
    InequalityId.BINPOI: "Binomial(n,p)*Poisson(rho): Ent <= rho<A(f,Df)>_{M_n} + npq<qA + pA(tau)>_{M_{n-1}}",
    InequalityId.ENTROPY_DECAY: "Ent_Poisson[P_t f] <= exp(-c mu t) Ent_Poisson[f], c = 2 for u^2, else 1",
    InequalityId.TV_ENT: "2 TV(P_t(.)(n), Poisson(rho))^2 <= exp(-mu t) log(e^rho rho^-n n!)",
    InequalityId.MIXED_BC_LIMIT: "Poisson(rho): Ent[f] <= (rho/2) <(2/3)B(f,Df) + (1/3)C(f,Df)>",
    InequalityId.GAMMA2_GE: "(mu/2) Gamma <= Gamma_2 pointwise and mu <Gamma> <= <Gamma_2> under Poisson(rho)",
    InequalityId.TENSORISATION: "Ent_{Q1 x Q2}[F] <= <Ent_{Q1}[F] + Ent_{Q2}[F]> on Bernoulli x Poisson grids",
    InequalityId.VARIATIONAL: "Ent[g] + <(Phi'(g) - Phi'(<g>))(f - g)> <= Ent[f]",
}

# tags whose statement involves no Φ (the function argument is unused or a
# plain real function)
PHI_FREE = {InequalityId.TV_ENT, InequalityId.GAMMA2_GE}


@dataclass
class Context:
    """Parameters of one case; unset values are drawn by :func:`fill_context`."""

    p: float | None = None
    n: int | None = None
    rho: float | None = None
    p_list: tuple | None = None
    t: float | None = None
    lam: float | None = None
    mu: float | None = None
    p2: float | None = None  # second Bernoulli parameter for tensorisation grids

    def as_dict(self):
        return {k: v for k, v in self.__dict__.items() if v is not None}


def fill_context(tag: InequalityId, ctx: Context, rng: np.random.Generator) -> Context:
    c = Context(**ctx.__dict__)
    if c.p is None:
        c.p = float(rng.uniform(0.02, 0.98))
    if c.n is None:
        c.n = int(rng.integers(1 if tag in (InequalityId.BINOMIAL_ALT,) else 0, 12))
        if tag in (InequalityId.BERN_PRODUCT, InequalityId.BINOMIAL):
            c.n = max(c.n, 1)
        if tag is InequalityId.BERN_PRODUCT and c.p_list is not None:
            c.n = len(c.p_list)
    if c.p_list is None:
        c.p_list = tuple(float(x) for x in rng.uniform(0.02, 0.98, max(c.n, 1)))
    if c.lam is None:
        c.lam = float(rng.uniform(0.2, 4.0))
    if c.mu is None:
        c.mu = float(rng.uniform(0.2, 3.0))
    if c.rho is None:
        c.rho = c.lam / c.mu if tag in (InequalityId.ENTROPY_DECAY, InequalityId.TV_ENT, InequalityId.GAMMA2_GE) else float(rng.uniform(0.1, 8.0))
    if c.t is None:
        c.t = float(rng.uniform(0.05, 3.0))
    if c.p2 is None:
        c.p2 = float(rng.uniform(0.02, 0.98))
    return c


def required_window(tag: InequalityId, ctx: Context) -> int:
    """Number of values f(0..W-1) a case needs (at least 2)."""
    tag = InequalityId(tag)
    if tag in (InequalityId.TWO_POINT_A, InequalityId.TWO_POINT_B):
        return 2
    if tag is InequalityId.BERN_PRODUCT:
        return len(ctx.p_list) + 2
    if tag in (InequalityId.BINOMIAL, InequalityId.BINOMIAL_ALT):
        return ctx.n + 2
    if tag in (InequalityId.POISSON_A, InequalityId.POISSON_B_LIMIT, InequalityId.MIXED_BC_LIMIT, InequalityId.VARIATIONAL):
        return poisson(ctx.rho).n_max + 2
    if tag is InequalityId.BINPOI:
        return ctx.n + poisson(ctx.rho).n_max + 2
    if tag is InequalityId.ENTROPY_DECAY:
        k = poisson(ctx.lam / ctx.mu).n_max
        return 2 * k + 3
    if tag is InequalityId.TV_ENT:
        return 2
    if tag is InequalityId.GAMMA2_GE:
        return poisson(ctx.lam / ctx.mu).n_max + 4
    if tag is InequalityId.TENSORISATION:
        return 2 * (poisson(ctx.rho).n_max + 1)
    raise ValueError(tag)  # pragma: no cover


def _params(ctx: Context) -> QueueParams:
    return QueueParams(ctx.lam, ctx.mu)


def sides(tag: InequalityId, phi: PhiFunction | None, f: np.ndarray, ctx: Context, g: np.ndarray | None = None):
    """Return (lhs, rhs, rounding magnitude) arrays for one case."""
    tag = InequalityId(tag)
    f = np.asarray(f, dtype=float)
    if tag not in PHI_FREE:
        phi.require(f)
    if tag in (InequalityId.TWO_POINT_A, InequalityId.TWO_POINT_B):
        p = ctx.p
        q = 1.0 - p
        a, b = f[0], f[1]
        lhs, mag_l = _ent(phi, np.array([q, p]), f[:2])
        if tag is InequalityId.TWO_POINT_A:
            up = transform_A(phi, a, b - a)
            down = transform_A(phi, b, a - b)
            rhs = p * q * (q * up + p * down)
            mag_r = p * q * (q * _mag_A(phi, a, b - a) + p * _mag_A(phi, b, a - b))
        else:
            rhs = p * q * transform_B(phi, a, b - a)
            mag_r = p * q * _mag_B(phi, a, b - a)
        return [lhs], [float(rhs)], [mag_l + float(mag_r)]
    if tag in (InequalityId.BERN_PRODUCT, InequalityId.BINOMIAL):
        if tag is InequalityId.BERN_PRODUCT:
            m = bern_product(tuple(ctx.p_list))
            const = max(x * (1 - x) for x in ctx.p_list)
            n = len(ctx.p_list)
        else:
            m = binomial(ctx.n, ctx.p)
            const = ctx.p * (1 - ctx.p)
            n = ctx.n
        w = m.weights
        k = len(w)
        h = np.arange(k)
        up, mu_ = _a_up(phi, f)
        down, md = _a_down(phi, f)
        terms = (n - h) * up[:k] + h * down[:k]
        mags = (n - h) * mu_[:k] + h * md[:k]
        lhs, mag_l = _ent_of(phi, m, f)
        return [lhs], [const * math.fsum(w * terms)], [mag_l + const * math.fsum(w * mags)]
    if tag is InequalityId.BINOMIAL_ALT:
        n, p = ctx.n, ctx.p
        q = 1 - p
        lhs, mag_l = _ent_of(phi, binomial(n, p), f)
        w = binomial(n - 1, p).weights
        up, mup = _a_up(phi, f)
        tau, mtau = _a_tau(phi, f)
        k = len(w)
        rhs = n * p * q * math.fsum(w * (q * up[:k] + p * tau[:k]))
        mag_r = n * p * q * math.fsum(w * (q * mup[:k] + p * mtau[:k]))
        return [lhs], [rhs], [mag_l + mag_r]
    if tag in (InequalityId.POISSON_A, InequalityId.POISSON_B_LIMIT, InequalityId.MIXED_BC_LIMIT):
        m = poisson(ctx.rho)
        w = m.weights
        lhs, mag_l = _ent_of(phi, m, f)
        if tag is InequalityId.POISSON_A:
            e, me = _expect(w, _a_up(phi, f))
            return [lhs], [ctx.rho * e], [mag_l + ctx.rho * me]
        if tag is InequalityId.POISSON_B_LIMIT:
            e, me = _expect(w, _b_up(phi, f))
            return [lhs], [ctx.rho * e], [mag_l + ctx.rho * me]
        eb, mb = _expect(w, _b_up(phi, f))
        ec, mc = _expect(w, _c_up(phi, f))
        return [lhs], [0.5 * ctx.rho * (2 / 3 * eb + 1 / 3 * ec)], [mag_l + 0.5 * ctx.rho * (mb + mc)]
    if tag is InequalityId.BINPOI:
        n, p, rho = ctx.n, ctx.p, ctx.rho
        q = 1 - p
        mn = binpoi(n, p, rho)
        lhs, mag_l = _ent_of(phi, mn, f)
        e1, m1 = _expect(mn.weights, _a_up(phi, f))
        rhs, mag_r = rho * e1, rho * m1
        if n >= 1:
            w = binpoi(n - 1, p, rho).weights
            up, mup = _a_up(phi, f)
            tau, mtau = _a_tau(phi, f)
            k = len(w)
            rhs += n * p * q * math.fsum(w * (q * up[:k] + p * tau[:k]))
            mag_r += n * p * q * math.fsum(w * (q * mup[:k] + p * mtau[:k]))
        return [lhs], [rhs], [mag_l + mag_r]
    if tag is InequalityId.ENTROPY_DECAY:
        params = _params(ctx)
        m = poisson(params.rho)
        ptf = semigroup_window(params, ctx.t, f, m.n_max, LAB_TAIL)
        lhs, mag_l = _ent_of(phi, m, ptf)
        e0, mag0 = _ent_of(phi, m, f)
        c = 2.0 if phi.family is Family.P2 else 1.0
        decay = math.exp(-c * params.mu * ctx.t)
        return [lhs], [decay * e0], [mag_l + decay * mag0]
    if tag is InequalityId.TV_ENT:
        params = _params(ctx)
        n = ctx.n
        tv = tv_distance(mehler_law(params, ctx.t, n, LAB_TAIL), poisson(params.rho))
        rho = params.rho
        rhs = math.exp(-params.mu * ctx.t) * (rho - n * math.log(rho) + math.lgamma(n + 1))
        return [2 * tv * tv], [rhs], [0.0]
    if tag is InequalityId.GAMMA2_GE:
        params = _params(ctx)
        gam = carre_du_champ(params, f)
        g2 = gamma_two(params, f)
        k = len(g2)
        m = poisson(params.rho)
        w = m.weights
        lhs = list(0.5 * params.mu * gam[:k]) + [params.mu * math.fsum(w * gam[: len(w)])]
        rhs = list(g2) + [math.fsum(w * g2[: len(w)])]
        # Γ₂ from its definition cancels terms of size (λ + nμ)² |f|²
        n = np.arange(k)
        mag = list((params.lam + (n + 2) * params.mu) ** 2 * np.max(np.abs(f)) ** 2 * 16)
        mag.append(math.fsum(w * np.array(mag[: len(w)])))
        return lhs, rhs, mag
    if tag is InequalityId.TENSORISATION:
        k = poisson(ctx.rho).n_max + 1
        F = f[: 2 * k].reshape(2, k)
        w1 = np.array([1 - ctx.p, ctx.p])
        w2 = poisson(ctx.rho).weights
        gap = tensorisation_gap(w1, w2, phi, F)
        joint = np.outer(w1, w2)
        total = math.fsum((joint * phi(F)).ravel()) - float(phi(math.fsum((joint * F).ravel())))
        mag = 4 * math.fsum((joint * np.abs(phi(F))).ravel())
        return [total], [total + gap], [mag]
    if tag is InequalityId.VARIATIONAL:
        m = poisson(ctx.rho)
        w = m.weights
        k = len(w)
        if g is None:
            raise ValueError("VARIATIONAL needs a competitor g")
        g = np.asarray(g, dtype=float)
        phi.require(g[:k])
        ent_f, mf = _ent(phi, w, f[:k])
        ent_g, mg = _ent(phi, w, g[:k])
        mean_g = math.fsum(w * g[:k])
        br = (phi.d1(g[:k]) - phi.d1(mean_g)) * (f[:k] - g[:k])
        return [ent_g + math.fsum(w * br)], [ent_f], [mf + mg + math.fsum(w * np.abs(br))]
    raise ValueError(tag)  # pragma: no cover


def _report(name, lhs, rhs, mag, tol, witness, seed=None, **details) -> VerificationReport:
    return inequality_report(
        name,
        lhs,
        rhs,
        tol,
        rounding=ROUNDING_ULPS * _EPS * np.asarray(mag, dtype=float),
        witness_fn=lambda i: witness(i),
        seed=seed,
        **details,
    )


def evaluate(
    tag: InequalityId | str,
    phi: PhiFunction | None,
    f,
    ctx: Context | None = None,
    g=None,
    tolerance: float = SLACK_TOL,
) -> VerificationReport:
    """Evaluate one case; unset context values raise instead of being drawn."""
    tag = InequalityId(tag)
    ctx = ctx or Context()
    f = np.asarray(f, dtype=float)
    need = required_window(tag, ctx)
    if len(f) < need:
        raise ValueError(f"{tag.value} needs f on 0..{need - 1}, got {len(f)} values")
    if tag not in PHI_FREE:
        phi.require(f[:need])
    lhs, rhs, mag = sides(tag, phi, f, ctx, g)
    name = tag.value if phi is None else f"{tag.value}[{phi.name}]"
    return _report(name, lhs, rhs, mag, tolerance, lambda i: {"context": ctx.as_dict(), "index": i})


# --- function samplers ----------------------------------------------------


class SamplerFamily(enum.Enum):
    RANDOM_BOUNDED = "RANDOM_BOUNDED"
    LINEAR = "LINEAR"
    EXP_TILT = "EXP_TILT"
    INDICATOR = "INDICATOR"
    PERTURBED_CONSTANT = "PERTURBED_CONSTANT"


@dataclass
class FunctionSampler:
    """Draws functions on a window that map strictly into the interval of Φ.

    Family parameters (all optional, drawn when absent):
    RANDOM_BOUNDED(lo, hi), LINEAR(a, b), EXP_TILT(theta), INDICATOR(set),
    PERTURBED_CONSTANT(c, eps) with eps >= 0.01.
    """

    family: SamplerFamily | None = None
    params: dict = field(default_factory=dict)

    def draw(self, phi: PhiFunction | None, window: int, rng: np.random.Generator) -> np.ndarray:
        fam = self.family
        if fam is None:
            fam = list(SamplerFamily)[int(rng.integers(len(SamplerFamily)))]
        fam = SamplerFamily(fam)
        lo, hi = working_range(phi) if phi is not None else (-10.0, 10.0)
        n = np.arange(window, dtype=float)
        pr = self.params
        if fam is SamplerFamily.RANDOM_BOUNDED:
            a, b = pr.get("lo", lo), pr.get("hi", hi)
            if phi is not None and math.isfinite(phi.lo) and phi.lo == 0.0 and "lo" not in pr:
                # log-uniform on half-lines so that small values are explored
                f = np.exp(rng.uniform(math.log(a), math.log(b), window))
            else:
                f = rng.uniform(a, b, window)
        elif fam is SamplerFamily.LINEAR:
            if "a" in pr and "b" in pr:
                f = pr["a"] + pr["b"] * n
            else:
                # endpoints drawn inside the working range keep the line inside it
                start, end = rng.uniform(lo, hi, 2)
                f = start + (end - start) * n / max(window - 1, 1)
        elif fam is SamplerFamily.EXP_TILT:
            theta = pr.get("theta", float(rng.uniform(-0.5, 0.5)))
            theta = float(np.clip(theta, -0.5, 0.5))
            base = lo if phi is None or not math.isfinite(phi.lo) else phi.lo
            scale = float(rng.uniform(0.2, 2.0)) * (hi - lo) / 20.0
            if phi is not None and math.isfinite(phi.hi) and not math.isfinite(phi.lo):
                f = phi.hi - scale * np.exp(theta * n) - (phi.hi - hi)
            else:
                f = base + (lo - base) + scale * np.exp(theta * n)
        elif fam is SamplerFamily.INDICATOR:
            c1, c2 = rng.uniform(lo, hi, 2)
            if "set" in pr:
                mask = np.isin(np.arange(window), list(pr["set"]))
            else:
                mask = rng.random(window) < 0.5
            f = np.where(mask, c2, c1)
        else:
            c = pr.get("c", float(rng.uniform(lo, hi)))
            eps = max(pr.get("eps", float(rng.uniform(0.01, 0.2))), 0.01)
            span = min(abs(c), 1.0) if phi is not None and phi.lo == 0.0 else 1.0
            f = c + eps * span * rng.uniform(-1.0, 1.0, window)
        f = np.asarray(f, dtype=float)
        if phi is not None:
            f = project_into(phi, f)
        return f


def project_into(phi: PhiFunction, f: np.ndarray) -> np.ndarray:
    """Clip values into the closed working range of Φ's interval."""
    lo, hi = working_range(phi)
    if math.isfinite(phi.lo) and math.isfinite(phi.hi):
        return np.clip(f, lo, hi)
    if math.isfinite(phi.lo):
        return np.maximum(f, lo)
    if math.isfinite(phi.hi):
        return np.minimum(f, hi)
    return f


# --- sweeps ---------------------------------------------------------------


def sweep(
    tag: InequalityId | str,
    phi: PhiFunction | None,
    ctx: Context | None = None,
    sampler: FunctionSampler | None = None,
    cases: int = 1000,
    seed: int = 0,
    tolerance: float = SLACK_TOL,
) -> VerificationReport:
    """Evaluate ``cases`` seeded functions; case i uses the stream (seed, i)."""
    tag = InequalityId(tag)
    sampler = sampler or FunctionSampler()
    ctx = ctx or Context()
    lhs, rhs, mag, wit = [], [], [], []
    for case in range(cases):
        rng = np.random.default_rng([seed, case, 17])
        c = fill_context(tag, ctx, rng)
        window = required_window(tag, c)
        samp_phi = None if tag in PHI_FREE else phi
        f = sampler.draw(samp_phi, window, rng)
        g = None
        if tag is InequalityId.VARIATIONAL:
            g = sampler.draw(samp_phi, window, rng)
        l_, r_, m_ = sides(tag, phi, f, c, g)
        lhs.extend(l_)
        rhs.extend(r_)
        mag.extend(m_)
        wit.extend([{"case": case, "context": c.as_dict()}] * len(l_))
    name = tag.value if phi is None else f"{tag.value}[{phi.name}]"
    rep = _report(name, lhs, rhs, mag, tolerance, lambda i: wit[i], seed=seed)
    rep.case_count = cases
    return rep


# --- two-point U function ------------------------------------------------------


@dataclass
class TwoPointU:
    a: float
    b: float
    alpha: float
    beta: float
    u_max: float
    du0: float
    du1: float
    du1_printed: float
    grid_nonpositive: bool
    criterion: bool
    printed_criterion: bool
    ambiguous: bool

    @property
    def agrees(self) -> bool:
        return self.ambiguous or self.grid_nonpositive == self.criterion


def two_point_U(phi: PhiFunction, f, g, p_grid: int = 10_000, tol: float = 1e-12) -> TwoPointU:
    """U(p) = Ent_{Bernoulli(p)}[f] - pq <Bernoulli(p), g> and its endpoint slopes.

    U'(0) = A(a, b-a) - g(0) and U'(1) = g(1) - A(b, a-b), from differentiating
    U directly.  ``du1_printed`` keeps the alternative A(a, b-a) + g(1) for
    comparison.
    """
    a, b = float(f[0]), float(f[1])
    al, be = float(g[0]), float(g[1])
    phi.require(np.array([a, b]))
    p = np.linspace(0.0, 1.0, p_grid)
    q = 1.0 - p
    U = q * phi(a) + p * phi(b) - phi(q * a + p * b) - p * q * (q * al + p * be)
    scale = abs(phi(a)) + abs(phi(b)) + abs(al) + abs(be) + 1e-300
    du0 = float(transform_A(phi, a, b - a)) - al
    du1 = be - float(transform_A(phi, b, a - b))
    du1_printed = float(transform_A(phi, a, b - a)) + be
    # U vanishes at both endpoints, so only the interior grid is informative
    u_max = float(np.max(U[1:-1]))
    grid_ok = u_max <= tol * scale
    crit = du0 <= 0.0 <= du1
    crit_printed = du0 <= 0.0 <= du1_printed
    # slopes this close to zero move U by less than the grid can resolve
    ambiguous = min(abs(du0), abs(du1)) < 1e-6 * scale
    return TwoPointU(a, b, al, be, u_max, du0, du1, du1_printed, grid_ok, crit, crit_printed, ambiguous)


@dataclass
class TwoPointSweep:
    cases: int
    agreements: int
    ambiguous: int
    printed_disagreements: int
    witness: dict | None

    @property
    def passed(self) -> bool:
        return self.agreements + self.ambiguous == self.cases


def two_point_U_sweep(phi: PhiFunction, cases: int = 500, seed: int = 0, p_grid: int = 10_000) -> TwoPointSweep:
    """Randomised check that U <= 0 on the grid iff U'(0) <= 0 <= U'(1).

    g is A(f, Df) with each value rescaled by an independent factor in
    [0.3, 3], so both signs of each slope occur.
    """
    agree = amb = printed_bad = 0
    witness = None
    for case in range(cases):
        rng = np.random.default_rng([seed, case, 19])
        a, b = FunctionSampler(SamplerFamily.RANDOM_BOUNDED).draw(phi, 2, rng)
        c0, c1 = rng.uniform(0.3, 3.0, 2)
        g = (c0 * float(transform_A(phi, a, b - a)), c1 * float(transform_A(phi, b, a - b)))
        res = two_point_U(phi, (a, b), g, p_grid)
        if res.ambiguous:
            amb += 1
            continue
        if res.agrees:
            agree += 1
        elif witness is None:
            witness = res.__dict__
        if res.printed_criterion != res.grid_nonpositive:
            printed_bad += 1
    return TwoPointSweep(cases, agree, amb, printed_bad, witness)


# --- extremal search ------------------------------------------------------


@dataclass
class ExtremalResult:
    f: np.ndarray
    ratio: float
    evaluations: int
    converged: bool
    history: list
    restarts: int

    @property
    def monotone(self) -> bool:
        return all(b >= a for a, b in zip(self.history, self.history[1:]))


def _ratio(tag, phi, f, ctx, invert):
    lhs, rhs, mag = sides(tag, phi, f, ctx)
    lhs, rhs = lhs[0], rhs[0]
    # near-constant f make both sides pure rounding noise; such points are
    # never accepted as improvements
    floor = 1e-5 * mag[0]
    if invert:
        return rhs / lhs if lhs > floor else -math.inf
    return lhs / rhs if rhs > floor else -math.inf


def find_extremal(
    tag: InequalityId | str,
    phi: PhiFunction,
    ctx: Context,
    init,
    budget: int = 20_000,
    restarts: int = 5,
    seed: int = 0,
    invert: bool = False,
    objective: Callable | None = None,
) -> ExtremalResult:
    """Derivative-free coordinate search maximising lhs/rhs (or rhs/lhs when
    ``invert``), with step halving and seeded restarts; values stay in Φ's
    working range.  The recorded best ratio never decreases."""
    tag = InequalityId(tag)
    init = project_into(phi, np.asarray(init, dtype=float))
    score = objective or (lambda f: _ratio(tag, phi, f, ctx, invert))
    lo, hi = working_range(phi)
    span = hi - lo
    best_f, best = init.copy(), score(init)
    history = [best]
    evals = 1
    converged = False
    rng = np.random.default_rng([seed, 23])
    per_restart = max(budget // restarts, 1)
    for r in range(restarts):
        if r == 0:
            cur = init.copy()
        else:
            cur = project_into(phi, best_f + 0.05 * span * rng.standard_normal(len(best_f)))
        cur_val = score(cur)
        evals += 1
        step = 0.1 * span
        used = 0
        while used < per_restart and step > 1e-9 * span:
            improved = False
            for i in range(len(cur)):
                for sgn in (1.0, -1.0):
                    trial = cur.copy()
                    trial[i] = trial[i] + sgn * step
                    trial = project_into(phi, trial)
                    if trial[i] == cur[i]:
                        continue
                    val = score(trial)
                    used += 1
                    if val > cur_val:
                        cur, cur_val = trial, val
                        improved = True
                        break
                if used >= per_restart:
                    break
            if not improved:
                step *= 0.5
        evals += used
        if step <= 1e-9 * span:
            converged = True
        if cur_val > best:
            best, best_f = cur_val, cur.copy()
        history.append(best)
    return ExtremalResult(best_f, best, evals, converged, history, restarts)


@dataclass
class BestConstant:
    value: float
    witness: np.ndarray
    sampled_min: float
    search: ExtremalResult | None
    params: dict


def dissipation_ratio(phi: PhiFunction, params: QueueParams, f: np.ndarray) -> float:
    """λ <B(f, Df)> / (μ Ent[f]) under Poisson(ρ)."""
    m = poisson(params.rho)
    w = m.weights
    ent, mag = _ent_of(phi, m, f)
    b, _ = _expect(w, _b_up(phi, f))
    if ent <= 1e-8 * mag:
        return math.inf
    return params.lam * b / (params.mu * ent)


def best_constant(
    phi: PhiFunction,
    params: QueueParams,
    sampler: FunctionSampler | None = None,
    candidates: int = 200,
    budget: int = 20_000,
    seed: int = 0,
) -> BestConstant:
    """Empirical infimum over f of λ<B(f,Df)>/(μ Ent[f]) under Poisson(ρ).

    Seeded candidates from the sampler (mixing all families, linear functions
    included) are followed by a coordinate search from the best one.  The
    value is an upper estimate of the sharp constant; it is not certified.
    """
    if params.mu <= 0:
        raise ValueError("need mu > 0")
    sampler = sampler or FunctionSampler()
    window = poisson(params.rho).n_max + 2
    best_f, best = None, math.inf
    for case in range(candidates):
        rng = np.random.default_rng([seed, case, 29])
        f = sampler.draw(phi, window, rng)
        r = dissipation_ratio(phi, params, f)
        if r < best:
            best, best_f = r, f
    sampled = best
    res = find_extremal(
        InequalityId.POISSON_B_LIMIT,
        phi,
        Context(rho=params.rho),
        best_f,
        budget=budget,
        seed=seed,
        objective=lambda f: -dissipation_ratio(phi, params, f),
    )
    if -res.ratio < best:
        best, best_f = -res.ratio, res.f
    return BestConstant(best, best_f, sampled, res, {"lam": params.lam, "mu": params.mu})


# --- non-admissible witness for sub-additivity ----------------------------


def tensorisation_witness(phi: PhiFunction, trials: int = 20_000, seed: int = 0):
    """Search 2x2 product grids of Bernoulli laws for a sub-additivity failure."""
    rng = np.random.default_rng([seed, 31])
    lo, hi = (1e-3, 1e3) if phi.lo == 0.0 and not math.isfinite(phi.hi) else working_range(phi)
    for trial in range(trials):
        p1, p2 = rng.uniform(0.01, 0.99, 2)
        if phi.lo == 0.0:
            F = np.exp(rng.uniform(math.log(lo), math.log(hi), (2, 2)))
        else:
            F = rng.uniform(lo, hi, (2, 2))
        gap = tensorisation_gap(np.array([1 - p1, p1]), np.array([1 - p2, p2]), phi, F)
        scale = float(np.sum(np.abs(phi(F))))
        if gap < -1e-9 * scale:
            return {"p1": p1, "p2": p2, "F": F.tolist(), "gap": gap, "trial": trial}
    return None
