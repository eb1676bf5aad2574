"""The M/M/∞ queue: generator, discrete gradients, Mehler semigroup, Γ calculus.

States are the integers 0, 1, 2, ...; a function on states is a numpy vector
(or a :class:`GridFunction`) indexed by the state.  Operators that look one
step ahead shrink the window by one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.stats import poisson as poisson_dist

from .measures import (
    FINE_TAIL,
    DiscreteMeasure,
    GridFunction,
    MeasureKind,
    convolve,
    expectation,
    make_measure,
    phi_entropy,
    variance,
)
from .phi import PhiFunction, sample_interior, transform_A, transform_B, transform_C
from .quadrature import adaptive_gauss_legendre
from .report import VerificationReport, identity_report, inequality_report


@dataclass(frozen=True)
class QueueParams:
    """Arrival rate ``lam`` and per-customer service rate ``mu``."""

    lam: float
    mu: float

    def __post_init__(self):
        if self.lam < 0 or self.mu < 0 or not (math.isfinite(self.lam) and math.isfinite(self.mu)):
            raise ValueError("rates must be finite and non-negative")
        if self.lam + self.mu <= 0:
            raise ValueError("need lam + mu > 0")

    @property
    def rho(self) -> float:
        if self.mu == 0:
            raise ValueError("rho = lam/mu is undefined when mu = 0")
        return self.lam / self.mu

    def p(self, t: float) -> float:
        return math.exp(-self.mu * t)

    def q(self, t: float) -> float:
        return -math.expm1(-self.mu * t)

    def poisson_intensity(self, t: float) -> float:
        """ρ q(t), continued to λ t when μ = 0."""
        if self.mu == 0:
            return self.lam * t
        return self.rho * self.q(t)

    def scaled(self, n: float) -> "QueueParams":
        """Input rate multiplied by ``n``, service rate unchanged."""
        return QueueParams(self.lam * n, self.mu)


def _vals(f) -> np.ndarray:
    return f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)


# --- gradients and generator ---------------------------------------------


def grad_D(v: np.ndarray) -> np.ndarray:
    """D f(n) = f(n+1) - f(n) on 0..W-1."""
    return v[1:] - v[:-1]


def grad_Dstar(v: np.ndarray) -> np.ndarray:
    """D* f(n) = f(n-1) - f(n) on 0..W; the n = 0 entry is a 0 placeholder.

    f(-1) is never needed: every use of D* at n = 0 carries a factor n.
    """
    out = np.empty_like(v)
    out[0] = 0.0
    out[1:] = v[:-1] - v[1:]
    return out


def gradient_D(f: GridFunction) -> GridFunction:
    return GridFunction(grad_D(_vals(f)))


def gradient_Dstar(f: GridFunction) -> GridFunction:
    return GridFunction(grad_Dstar(_vals(f)))


def apply_generator(params: QueueParams, v: np.ndarray) -> np.ndarray:
    """L f(n) = n μ D*f(n) + λ D f(n) on 0..W-1."""
    v = np.asarray(v, dtype=float)
    n = np.arange(len(v) - 1)
    return n * params.mu * grad_Dstar(v)[:-1] + params.lam * grad_D(v)


def generator_apply(params: QueueParams, f: GridFunction) -> GridFunction:
    return GridFunction(apply_generator(params, _vals(f)))


def apply_mm1_generator(params: QueueParams, v: np.ndarray) -> np.ndarray:
    """Single-server queue: L f(n) = μ 1{n>=1} D*f(n) + λ D f(n)."""
    v = np.asarray(v, dtype=float)
    busy = (np.arange(len(v) - 1) >= 1).astype(float)
    return busy * params.mu * grad_Dstar(v)[:-1] + params.lam * grad_D(v)


# --- semigroup ------------------------------------------------------------


@lru_cache(maxsize=4096)
def _mehler_cached(lam: float, mu: float, t: float, n: int, tail_tol: float) -> DiscreteMeasure:
    params = QueueParams(lam, mu)
    p = params.p(t)
    law = convolve(
        make_measure(MeasureKind.BINOMIAL, n=n, p=p),
        make_measure(MeasureKind.POISSON, tail_tol=tail_tol, rho=params.poisson_intensity(t)),
    )
    return DiscreteMeasure(
        law.log_weights, law.tail_bound, MeasureKind.BINPOI, {"n": n, "p": p, "rho": params.poisson_intensity(t)}
    )


def mehler_law(params: QueueParams, t: float, n: int, tail_tol: float = FINE_TAIL) -> DiscreteMeasure:
    """Law of X_t given X_0 = n: Binomial(n, e^{-μt}) * Poisson(ρ(1 - e^{-μt}))."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if n < 0 or int(n) != n:
        raise ValueError("n must be a state in N")
    # the lru_cache is safe for concurrent readers; a racing insert only recomputes
    return _mehler_cached(float(params.lam), float(params.mu), float(t), int(n), float(tail_tol))


def semigroup_apply(params: QueueParams, t: float, f, n: int, tail_tol: float = FINE_TAIL) -> float:
    """P_t f(n) = E[f(X_t) | X_0 = n]."""
    return expectation(mehler_law(params, t, n, tail_tol), f)


def transition_kernel(params: QueueParams, t: float, n_max: int, tail_tol: float = FINE_TAIL):
    """Matrix whose row k is the law of X_t given X_0 = k, for k = 0..n_max.

    Built by adding one Bernoulli(p) customer at a time to the Poisson part;
    every step is a positive combination, so rows are accurate atom-wise.
    Returns the matrix and the (common) tail bound of each row.
    """
    p, q = params.p(t), params.q(t)
    pois = make_measure(MeasureKind.POISSON, tail_tol=tail_tol, rho=params.poisson_intensity(t))
    width = len(pois.log_weights)
    K = np.zeros((n_max + 1, n_max + width))
    K[0, :width] = pois.weights
    for k in range(n_max):
        K[k + 1] = q * K[k]
        K[k + 1, 1:] += p * K[k, :-1]
    return K, pois.tail_bound


def semigroup_window(params: QueueParams, t: float, f, n_max: int, tail_tol: float = FINE_TAIL) -> np.ndarray:
    """P_t f on states 0..n_max; ``f`` must cover the kernel's support."""
    K, _ = transition_kernel(params, t, n_max, tail_tol)
    v = _vals(f)
    if len(v) < K.shape[1]:
        raise IndexError(f"function window {len(v) - 1} too small, need {K.shape[1] - 1}")
    return K @ v[: K.shape[1]]


def kernel_width(params: QueueParams, t: float, n_max: int, tail_tol: float = FINE_TAIL) -> int:
    pois = make_measure(MeasureKind.POISSON, tail_tol=tail_tol, rho=params.poisson_intensity(t))
    return n_max + len(pois.log_weights)


# --- Γ calculus -----------------------------------------------------------


def gamma_bilinear(params: QueueParams, f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Γ(f, g) = (L(fg) - f Lg - g Lf)/2 on 0..W-1."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    return 0.5 * (apply_generator(params, f * g) - f[:-1] * apply_generator(params, g) - g[:-1] * apply_generator(params, f))


def carre_du_champ(params: QueueParams, f) -> np.ndarray:
    """Γ(f, f) from its definition; values on 0..W-1."""
    v = _vals(f)
    return gamma_bilinear(params, v, v)


def gamma_two(params: QueueParams, f) -> np.ndarray:
    """Γ₂(f, f) = (L Γ(f,f) - 2 Γ(f, Lf))/2 from the definition; values on 0..W-2."""
    v = _vals(f)
    lf = apply_generator(params, v)
    g = gamma_bilinear(params, v, v)
    return 0.5 * (apply_generator(params, g) - 2.0 * gamma_bilinear(params, v[:-1], lf))


def carre_du_champ_closed(params: QueueParams, f) -> np.ndarray:
    v = _vals(f)
    n = np.arange(len(v) - 1)
    return 0.5 * (n * params.mu * grad_Dstar(v)[:-1] ** 2 + params.lam * grad_D(v) ** 2)


def gamma_two_closed(params: QueueParams, f) -> np.ndarray:
    """Closed form: 2Γ₂ = (3/2)λμ|Df|² + (n/2)μ²|D*f|² + R with
    2R = n(n-1)μ²|D*D*f|² + 2nλμ|DD*f|² + λ²|DDf|²."""
    v = _vals(f)
    lam, mu = params.lam, params.mu
    m = len(v) - 2
    n = np.arange(m)
    d = grad_D(v)[:m]
    ds = grad_Dstar(v)[:m]
    # D*D* f(n) = f(n-2) - 2 f(n-1) + f(n): only read where n(n-1) != 0
    dsds = np.zeros(m)
    dsds[2:] = v[: m - 2] - 2 * v[1 : m - 1] + v[2:m]
    # DD* f(n) = 2 f(n) - f(n-1) - f(n+1): only read where n != 0
    dds = np.zeros(m)
    dds[1:] = 2 * v[1:m] - v[: m - 1] - v[2 : m + 1]
    dd = v[2 : m + 2] - 2 * v[1 : m + 1] + v[:m]
    r2 = n * (n - 1) * mu**2 * dsds**2 + 2 * n * lam * mu * dds**2 + lam**2 * dd**2
    return 0.5 * (1.5 * lam * mu * d**2 + 0.5 * n * mu**2 * ds**2 + 0.5 * r2)


# --- spectrum -------------------------------------------------------------


def eigenfunction(params: QueueParams, alpha: float, n_max: int) -> GridFunction:
    """Solution of L f = α f with f(0) = 1, from the three-term recursion
    λ f(n+1) = (λ + α + nμ) f(n) - nμ f(n-1)."""
    if params.lam <= 0:
        raise ValueError("the recursion needs lam > 0")
    f = np.empty(n_max + 1)
    f[0] = 1.0
    if n_max >= 1:
        f[1] = (params.lam + alpha) * f[0] / params.lam
    for n in range(1, n_max):
        f[n + 1] = ((params.lam + alpha + n * params.mu) * f[n] - n * params.mu * f[n - 1]) / params.lam
    return GridFunction(f)


def eigen_residual(params: QueueParams, alpha: float, f) -> float:
    """max |L f - α f| / max(1, |f|) over the interior states."""
    v = _vals(f)
    res = apply_generator(params, v) - alpha * v[:-1]
    return float(np.max(np.abs(res) / np.maximum(1.0, np.abs(v[:-1]))))


@dataclass
class SpectralResult:
    gap: float
    eigenvalues: np.ndarray
    trunc: int
    tail_mass: float


def spectral_gap(params: QueueParams, trunc: int = 300, full: bool = False):
    """Gap of the generator restricted to {0..trunc} (no arrivals at trunc).

    The tridiagonal generator is conjugated by diag(sqrt(Q(n))), Q = Poisson(ρ),
    which gives a symmetric matrix with the same spectrum.
    """
    if params.lam <= 0 or params.mu <= 0:
        raise ValueError("spectral gap needs lam > 0 and mu > 0")
    tail = float(poisson_dist.sf(trunc, params.rho))
    if tail > 1e-8:
        raise ValueError(
            f"trunc={trunc} leaves Poisson({params.rho:g}) tail mass {tail:.2e} > 1e-8; "
            f"use trunc >= {int(params.rho + 12 * math.sqrt(params.rho) + 40)}"
        )
    n = np.arange(trunc + 1, dtype=float)
    diag = -(params.lam * (n < trunc) + n * params.mu)
    off = np.sqrt(params.lam * params.mu * n[1:])
    evals = eigh_tridiagonal(diag, off, eigvals_only=True)
    evals = np.sort(evals)[::-1]
    gap = float(-evals[1])
    res = SpectralResult(gap, evals, trunc, tail)
    return res if full else gap


# --- entropy decay --------------------------------------------------------


@dataclass
class DecayCurve:
    times: np.ndarray
    values: np.ndarray
    initial: float
    rate: float
    bound: np.ndarray = field(init=False)

    def __post_init__(self):
        self.bound = np.exp(-self.rate * self.times) * self.initial

    @property
    def monotone(self) -> bool:
        v = np.concatenate([[self.initial], self.values])
        return bool(np.all(np.diff(v) <= 1e-12 * max(self.initial, 1e-300)))

    @property
    def within_bound(self) -> bool:
        return bool(np.all(self.values <= self.bound * (1 + 1e-9) + 1e-300))

    def rows(self):
        return [(float(t), float(v), float(b)) for t, v, b in zip(self.times, self.values, self.bound)]


def poisson_support(params: QueueParams, tail_tol: float = FINE_TAIL) -> DiscreteMeasure:
    return make_measure(MeasureKind.POISSON, tail_tol=tail_tol, rho=params.rho)


def entropy_decay_curve(params: QueueParams, phi: PhiFunction, f, times, tail_tol: float = FINE_TAIL) -> DecayCurve:
    """t -> Ent_{Poisson(ρ)}[P_t f] with the bound e^{-cμt} Ent[f] (c = 2 for u², else 1)."""
    from .phi import Family

    q_meas = poisson_support(params, tail_tol)
    v = _vals(f)
    n_max = q_meas.n_max
    times = np.asarray(times, dtype=float)
    vals = np.empty(len(times))
    for i, t in enumerate(times):
        ptf = semigroup_window(params, t, v, n_max, tail_tol)
        vals[i] = phi_entropy(q_meas, phi, ptf)
    c = 2.0 if phi.family is Family.P2 else 1.0
    return DecayCurve(times, vals, phi_entropy(q_meas, phi, v), c * params.mu)


# --- identities -----------------------------------------------------------


class QueueIdentity(enum.Enum):
    POLARIZED = "POLARIZED"
    COMMUT_INF = "COMMUT_INF"
    COMMUT_SG = "COMMUT_SG"
    IPP_SG = "IPP_SG"
    PROPB_POI = "PROPB_POI"
    MEHLER_MOMENTS = "MEHLER_MOMENTS"
    GAMMA_LINEAR = "GAMMA_LINEAR"
    ENT_LOC = "ENT_LOC"
    MM1_INV = "MM1_INV"
    MM1_COMMUT_INF = "MM1_COMMUT_INF"


def _random_params(rng) -> QueueParams:
    return QueueParams(float(rng.uniform(0.1, 5.0)), float(rng.uniform(0.1, 3.0)))


def _abs_scale(*terms):
    return sum(np.abs(t) for t in terms)


def _identity_case(tag: QueueIdentity, rng, params: QueueParams, phi: PhiFunction | None, t, n):
    """One random case: arrays (lhs, rhs, scale) and a witness dict."""
    lam, mu = params.lam, params.mu
    if tag is QueueIdentity.POLARIZED:
        v = rng.uniform(-5, 5, 40)
        ext = np.concatenate([[rng.uniform(-5, 5)], v])  # arbitrary value for f(-1)
        lhs = apply_generator(params, v)
        m = np.arange(len(v) - 1)
        lap = 2 * ext[1:-1] - ext[:-2] - ext[2:]  # DD*f(n) for n = 0..W-1
        dstar = ext[:-2] - ext[1:-1]
        rhs = -lam * lap + (m * mu - lam) * dstar
        return lhs, rhs, _abs_scale(lam * lap, m * mu * dstar, lam * dstar), {}
    if tag is QueueIdentity.COMMUT_INF:
        v = rng.uniform(-5, 5, 40)
        lhs = apply_generator(params, grad_D(v)) - grad_D(apply_generator(params, v))
        rhs = mu * grad_D(v)[:-1]
        m = np.arange(len(v) - 2)
        return lhs, rhs, _abs_scale((lam + m * mu) * np.abs(v[:-2]) * 8, rhs), {}
    if tag in (QueueIdentity.COMMUT_SG, QueueIdentity.IPP_SG, QueueIdentity.MEHLER_MOMENTS):
        tt = float(rng.uniform(0.0, 3.0)) if t is None else t
        nn = int(rng.integers(0 if tag is not QueueIdentity.IPP_SG else 1, 30)) if n is None else n
        width = kernel_width(params, tt, nn + 1) + 2
        v = rng.uniform(-5, 5, width)
        wit = {"t": tt, "n": nn}
        if tag is QueueIdentity.COMMUT_SG:
            w1 = mehler_law(params, tt, nn + 1).weights
            w0 = mehler_law(params, tt, nn).weights
            a = w1 * v[: len(w1)]
            b = w0 * v[: len(w0)]
            c = w0 * grad_D(v)[: len(w0)]
            lhs = math.fsum(a) - math.fsum(b)
            rhs = params.p(tt) * math.fsum(c)
            return [lhs], [rhs], [math.fsum(np.abs(a)) + math.fsum(np.abs(b))], wit
        if tag is QueueIdentity.IPP_SG:
            p, q = params.p(tt), params.q(tt)
            wn = mehler_law(params, tt, nn).weights
            wm = mehler_law(params, tt, nn - 1).weights
            a = mu * wn * np.arange(len(wn)) * v[: len(wn)]
            b = mu * nn * p * wm * v[1 : len(wm) + 1]
            c = lam * q * wn * v[1 : len(wn) + 1]
            return [math.fsum(a)], [math.fsum(b) + math.fsum(c)], [math.fsum(np.abs(a)) + math.fsum(np.abs(b)) + math.fsum(np.abs(c))], wit
        law = mehler_law(params, tt, nn)
        p, q = params.p(tt), params.q(tt)
        mean, var = law.mean(), law.variance()
        # ρq(t) and (np + ρ) q(t); ρ q is continued to λ t when μ = 0
        lhs = [mean, var]
        rhs = [nn * p + params.poisson_intensity(tt), nn * p * q + params.poisson_intensity(tt)]
        return lhs, rhs, [abs(r) for r in rhs], wit
    if tag is QueueIdentity.PROPB_POI:
        q_meas = poisson_support(params)
        k = q_meas.n_max
        g = sample_interior(phi, rng, k + 2)
        w = q_meas.weights
        lg = apply_generator(params, g)[: k + 1]
        a = w * phi.d1(g[: k + 1]) * lg
        b = -lam * w * transform_B(phi, g[: k + 1], grad_D(g)[: k + 1])
        return [math.fsum(a)], [math.fsum(b)], [math.fsum(np.abs(a)) + math.fsum(np.abs(b))], {"rho": params.rho}
    if tag is QueueIdentity.GAMMA_LINEAR:
        v = np.arange(40, dtype=float)
        m = np.arange(38)
        two_gamma = 2 * carre_du_champ(params, v)[:38]
        four_gamma2 = 4 * gamma_two(params, v)
        lhs = np.concatenate([two_gamma, four_gamma2])
        rhs = np.concatenate([lam + m * mu, 3 * lam * mu + m * mu**2])
        # definition-based Γ and Γ₂ cancel terms of size ~ (λ + nμ) n² and its square
        sc = np.concatenate([(lam + m * mu) * (m + 1) ** 2, (lam + m * mu) ** 2 * (m + 1) ** 2])
        return lhs, rhs, sc, {}
    if tag is QueueIdentity.MM1_INV:
        rho = float(rng.uniform(0.05, 0.95))
        mm1 = QueueParams(rho * params.mu, params.mu)
        geo = make_measure(MeasureKind.GEOMETRIC, tail_tol=FINE_TAIL, rho=rho)
        v = rng.uniform(-5, 5, geo.n_max + 2)
        terms = geo.weights * apply_mm1_generator(mm1, v)
        return [math.fsum(terms)], [0.0], [math.fsum(np.abs(terms)) + math.fsum(geo.weights * np.abs(v[:-1]))], {"rho": rho}
    if tag is QueueIdentity.MM1_COMMUT_INF:
        v = rng.uniform(-5, 5, 40)
        lhs = apply_mm1_generator(params, grad_D(v)) - grad_D(apply_mm1_generator(params, v))
        rhs = np.zeros_like(lhs)
        # the single server idles at 0: [L, D] f(0) = μ D f(0), zero elsewhere
        rhs[0] = mu * grad_D(v)[0]
        return lhs, rhs, _abs_scale((lam + mu) * np.abs(v[:-2]) * 8, rhs), {}
    raise ValueError(tag)  # pragma: no cover


def check_queue_identity(
    tag: QueueIdentity | str,
    params: QueueParams | None = None,
    phi: PhiFunction | None = None,
    cases: int = 1000,
    seed: int = 0,
    t: float | None = None,
    n: int | None = None,
    f=None,
    tolerance: float | None = None,
) -> VerificationReport:
    """Check a semigroup-level identity over seeded random cases.

    ``params`` fixes the rates (otherwise drawn per case).  ENT_LOC needs
    ``phi`` and evaluates one time integral per case (use few cases).
    """
    tag = QueueIdentity(tag)
    if tag is QueueIdentity.ENT_LOC:
        return _check_ent_loc(params, phi, cases, seed, t, n, f, tolerance or 1e-7)
    if tag is QueueIdentity.PROPB_POI and phi is None:
        raise ValueError("PROPB_POI needs a Φ")
    lhs, rhs, scale, wit = [], [], [], []
    for case in range(cases):
        rng = np.random.default_rng([seed, case, 11])
        pr = params if params is not None else _random_params(rng)
        l_, r_, s_, w_ = _identity_case(tag, rng, pr, phi, t, n)
        lhs.extend(np.atleast_1d(l_))
        rhs.extend(np.atleast_1d(r_))
        scale.extend(np.atleast_1d(s_))
        wit.extend([{"case": case, "lam": pr.lam, "mu": pr.mu, **w_}] * len(np.atleast_1d(l_)))
    name = tag.value if phi is None else f"{tag.value}[{phi.name}]"
    rep = identity_report(name, lhs, rhs, scale, tolerance or 1e-10, witness_fn=lambda i: wit[i], seed=seed)
    rep.case_count = cases
    return rep


# --- ENT_LOC: entropy along the semigroup as a time integral --------------


def ent_loc_integrand(params: QueueParams, phi: PhiFunction, f: np.ndarray, t: float, s: float, n: int) -> float:
    """λ P_s[A(F, DF)](n) + μ P_s[h A(F, D*F)](n) with F = P_{t-s} f."""
    law = mehler_law(params, s, n)
    k = law.n_max + 1  # F needed on 0..k
    F = semigroup_window(params, t - s, f, k)
    w = law.weights
    h = np.arange(len(w))
    a_up = transform_A(phi, F[: len(w)], grad_D(F)[: len(w)])
    dstar = grad_Dstar(F)[: len(w)]
    a_down = np.zeros(len(w))
    a_down[1:] = transform_A(phi, F[1 : len(w)], dstar[1:])
    return params.lam * math.fsum(w * a_up) + params.mu * math.fsum(w * h * a_down)


def ent_loc_sides(params: QueueParams, phi: PhiFunction, f, t: float, n: int):
    v = _vals(f)
    lhs = phi_entropy(mehler_law(params, t, n), phi, v)
    res = adaptive_gauss_legendre(
        lambda ss: np.array([ent_loc_integrand(params, phi, v, t, x, n) for x in np.atleast_1d(ss)]),
        0.0,
        t,
        abs_tol=1e-300,
        rel_tol=1e-9,
        order=10,
        max_level=20,
    )
    return lhs, res


def _check_ent_loc(params, phi, cases, seed, t, n, f, tolerance):
    if phi is None:
        raise ValueError("ENT_LOC needs a Φ")
    lhs, rhs, wit, flags = [], [], [], []
    for case in range(cases):
        rng = np.random.default_rng([seed, case, 13])
        pr = params if params is not None else _random_params(rng)
        tt = float(rng.uniform(0.1, 2.0)) if t is None else t
        nn = int(rng.integers(0, 10)) if n is None else n
        width = kernel_width(pr, tt, kernel_width(pr, tt, nn) + 2) + 2
        if f is None:
            v = sample_interior(phi, rng, width)
        else:
            v = _vals(f)
        left, res = ent_loc_sides(pr, phi, v, tt, nn)
        if not res.converged:
            flags.append(f"quadrature-not-converged(case {case})")
        lhs.append(left)
        rhs.append(res.value)
        wit.append({"lam": pr.lam, "mu": pr.mu, "t": tt, "n": nn})
    rep = identity_report(f"ENT_LOC[{phi.name}]", lhs, rhs, 0.0, tolerance, witness_fn=lambda i: wit[i], seed=seed)
    rep.flags.extend(flags)
    rep.passed = rep.passed and not flags
    return rep


# --- local inequalities ---------------------------------------------------


class LocalVariant(enum.Enum):
    MMI_LOC = "MMI_LOC"
    MMI_LOC_NEW = "MMI_LOC_NEW"
    LOCAL_POINCARE = "LOCAL_POINCARE"


def local_transforms(phi: PhiFunction, v: np.ndarray):
    """A(f, Df), A(τ(f, Df)) and C(f, Df) on 0..W-1."""
    d = grad_D(v)
    a = transform_A(phi, v[:-1], d)
    a_tau = transform_A(phi, v[1:], -d)
    c = transform_C(phi, v[:-1], d)
    return a, a_tau, c


def local_sides(variant: LocalVariant | str, params: QueueParams, phi: PhiFunction | None, f, t: float, n: int):
    """(LHS, RHS) of a local inequality under the law of X_t given X_0 = n."""
    variant = LocalVariant(variant)
    v = _vals(f)
    p, q = params.p(t), params.q(t)
    rq = params.poisson_intensity(t)
    law_n = mehler_law(params, t, n)

    def at(state, g):
        if state < 0:
            return 0.0
        return expectation(mehler_law(params, t, state), g)

    if variant is LocalVariant.LOCAL_POINCARE:
        d2 = grad_D(v) ** 2
        lhs = variance(law_n, v)
        rhs = rq * at(n, d2) + (n * p * q * at(n - 1, d2) if n >= 1 else 0.0)
        return lhs, rhs
    a, a_tau, c = local_transforms(phi, v)
    lhs = phi_entropy(law_n, phi, v)
    if variant is LocalVariant.MMI_LOC:
        rhs = rq * at(n, a)
        if n >= 1:
            rhs += n * p * q * at(n - 1, q * a + p * a_tau)
        return lhs, rhs
    # the ρ-weighted bracket; with μ = 0 the ρ q-type factors are continued
    # through ρ = (ρq)/q, which needs q > 0
    if params.mu == 0:
        raise ValueError("MMI_LOC_NEW needs mu > 0")
    rho = params.rho
    g_n = (1 - p**3) / 3 * a + q**2 * (2 + p) / 6 * (a_tau + 0.5 * c)
    rhs = rho * at(n, g_n)
    if n >= 1:
        g_m = (1 - p**2) * a_tau + 0.5 * q**2 * c
        rhs += 0.5 * n * p * at(n - 1, g_m)
    return lhs, rhs


def local_inequality_eval(
    variant: LocalVariant | str, params: QueueParams, phi: PhiFunction | None, f, t: float, n: int, tolerance: float = 1e-9
) -> VerificationReport:
    variant = LocalVariant(variant)
    lhs, rhs = local_sides(variant, params, phi, f, t, n)
    name = variant.value if phi is None else f"{variant.value}[{phi.name}]"
    return inequality_report(name, [lhs], [rhs], tolerance, witness_fn=lambda i: {"t": t, "n": n}, t=t, n=n)


def local_window(params: QueueParams, t: float, n: int) -> int:
    """Window length a function needs for the local inequalities at (t, n)."""
    return kernel_width(params, t, n) + 2
