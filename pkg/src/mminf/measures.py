"""Probability measures on {0, ..., N} stored as log-weights with a certified tail.

Every constructor returns raw (un-renormalised) weights; the mass that was cut
off is carried as ``tail_bound`` so that expectations of bounded functions are
exact up to ``tail_bound * sup|f|``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from .phi import PhiFunction, transform_A
from .report import VerificationReport, identity_report

DEFAULT_TAIL = 1e-12
# tighter cut for entropy comparisons, where a 1e-12 truncation would bias equality cases
FINE_TAIL = 1e-16


class MeasureKind(enum.Enum):
    BERNOULLI = "BERNOULLI"
    BINOMIAL = "BINOMIAL"
    POISSON = "POISSON"
    BINPOI = "BINPOI"
    BERN_PRODUCT = "BERN_PRODUCT"
    GEOMETRIC = "GEOMETRIC"
    GENERIC = "GENERIC"


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DiscreteMeasure:
    log_weights: np.ndarray
    tail_bound: float = 0.0
    kind: MeasureKind = MeasureKind.GENERIC
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "log_weights", _frozen(self.log_weights))
        if self.log_weights.ndim != 1 or len(self.log_weights) == 0:
            raise ValueError("log_weights must be a non-empty vector")
        if np.any(np.isnan(self.log_weights)) or np.any(self.log_weights == np.inf):
            raise ValueError("log_weights must be finite or -inf")
        if self.tail_bound < 0:
            raise ValueError("tail_bound must be non-negative")

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def n_max(self) -> int:
        return len(self.log_weights) - 1

    @property
    def mass(self) -> float:
        return math.fsum(self.weights)

    def mean(self) -> float:
        return math.fsum(self.weights * np.arange(len(self.log_weights)))

    def variance(self) -> float:
        k = np.arange(len(self.log_weights), dtype=float)
        m = self.mean()
        return math.fsum(self.weights * (k - m) ** 2)

    def padded(self, length: int) -> np.ndarray:
        """Weights zero-padded (or checked) to ``length`` atoms."""
        w = self.weights
        if length < len(w):
            if np.any(w[length:] > 0):
                raise ValueError("cannot truncate a measure with mass beyond the requested length")
            return w[:length]
        return np.concatenate([w, np.zeros(length - len(w))])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "params": {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params.items()},
            "window": self.n_max,
            "values": [float(x) for x in self.weights],
            "tail_bound": self.tail_bound,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteMeasure":
        kind = MeasureKind(data["kind"])
        if kind is not MeasureKind.GENERIC:
            params = dict(data["params"])
            if "p_list" in params:
                params["p_list"] = tuple(params["p_list"])
            return make_measure(kind, **params)
        with np.errstate(divide="ignore"):
            lw = np.log(np.asarray(data["values"], dtype=float))
        return cls(lw, float(data.get("tail_bound", 0.0)), kind, dict(data.get("params", {})))


# --- constructors ---------------------------------------------------------


def _binomial(n: int, p: float) -> DiscreteMeasure:
    if n < 0 or int(n) != n:
        raise ValueError("binomial size must be a non-negative integer")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    n = int(n)
    k = np.arange(n + 1)
    if p == 0.0:
        lw = np.where(k == 0, 0.0, -np.inf)
    elif p == 1.0:
        lw = np.where(k == n, 0.0, -np.inf)
    else:
        lw = binom.logpmf(k, n, p)
    return DiscreteMeasure(lw, 0.0, MeasureKind.BINOMIAL, {"n": n, "p": p})


# log(k!) - [(k + 1/2) log k - k + log(2π)/2] for k = 0..15
_STIRLING_REMAINDER = np.array([
    0.0,
    0.08106146679532725821967,
    0.04134069595540929409382,
    0.02767792568499833914879,
    0.02079067210376509311152,
    0.01664469118982119216319,
    0.01387612882307074799875,
    0.01189670994589177009506,
    0.01041126526197209649748,
    0.009255462182712732917729,
    0.008330563433362871256469,
    0.007573675487951840794972,
    0.006942840107209529865664,
    0.00640899418800420706844,
    0.005951370112758847735624,
    0.005554733551962801371039,
])


def _stirling_remainder(k: np.ndarray) -> np.ndarray:
    out = np.empty_like(k)
    small = k <= 15
    out[small] = _STIRLING_REMAINDER[k[small].astype(int)]
    n = k[~small]
    nn = n * n
    out[~small] = (1 / 12 - (1 / 360 - (1 / 1260 - (1 / 1680 - 1 / (1188 * nn)) / nn) / nn) / nn) / n
    return out


def _deviance(x: np.ndarray, m: float) -> np.ndarray:
    """x log(x/m) + m - x without cancellation when x is close to m."""
    out = np.empty_like(x)
    near = np.abs(x - m) < 0.1 * (x + m)
    xn = x[near]
    v = (xn - m) / (xn + m)
    acc = (xn - m) * v
    term = 2.0 * xn * v
    v2 = v * v
    for j in range(1, 40):
        term = term * v2
        acc = acc + term / (2 * j + 1)
        if np.all(np.abs(term) <= 1e-17 * np.abs(acc)):
            break
    out[near] = acc
    # far from m: m h(y) with h(y) = (1 + y) log(1 + y) - y has no large cancellation
    y = x[~near] / m - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        out[~near] = m * np.where(y > -1.0, (1.0 + y) * np.log1p(y) - y, 1.0)
    return out


def poisson_log_pmf(rho: float, k: np.ndarray) -> np.ndarray:
    """log of e^{-ρ} ρ^k / k!, in the saddle-point form (Stirling remainder
    plus deviance), accurate to a few ulps even for large ρ and k."""
    k = np.asarray(k, dtype=float)
    if rho == 0.0:
        return np.where(k == 0, 0.0, -np.inf)
    out = np.full(k.shape, -rho)
    pos = k > 0
    kp = k[pos]
    out[pos] = -_stirling_remainder(kp) - _deviance(kp, rho) - 0.5 * np.log(2 * math.pi * kp)
    return out


def _poisson(rho: float, tail_tol: float = DEFAULT_TAIL) -> DiscreteMeasure:
    if rho < 0 or not math.isfinite(rho):
        raise ValueError("Poisson intensity must be finite and non-negative")
    if rho == 0.0:
        return DiscreteMeasure([0.0], 0.0, MeasureKind.POISSON, {"rho": 0.0})
    # beyond k_big the pmf ratio rho/(k+1) is below r < 1, so the tail past
    # k_big is bounded by a geometric series
    k_big = int(math.ceil(rho + 20.0 * math.sqrt(rho) + 60.0))
    lw = poisson_log_pmf(rho, np.arange(k_big + 1))
    r = rho / (k_big + 1.0)
    log_far = lw[-1] + math.log(r) - math.log1p(-r)
    # log of mass strictly beyond index N, for N = 0..k_big
    rev = np.logaddexp.accumulate(lw[::-1])[::-1]
    log_beyond = np.logaddexp(np.concatenate([rev[1:], [-np.inf]]), log_far)
    log_tol = math.log(tail_tol) if tail_tol > 0 else -np.inf
    ok = np.nonzero(log_beyond < log_tol)[0]
    if len(ok) == 0:
        raise ValueError("tail tolerance cannot be certified; lower rho or raise tail_tol")
    n_cut = int(max(ok[0], 0))
    return DiscreteMeasure(lw[: n_cut + 1], float(math.exp(log_beyond[n_cut])), MeasureKind.POISSON, {"rho": rho})


def _geometric(rho: float, tail_tol: float = DEFAULT_TAIL) -> DiscreteMeasure:
    """Q(n) = (1 - rho) rho^n, the invariant law of the single-server queue."""
    if not 0.0 <= rho < 1.0:
        raise ValueError("geometric measure needs 0 <= rho < 1 to be normalisable")
    if rho == 0.0:
        return DiscreteMeasure([0.0], 0.0, MeasureKind.GEOMETRIC, {"rho": 0.0})
    # tail beyond N is rho^(N+1)
    n_cut = max(0, int(math.floor(math.log(tail_tol) / math.log(rho))))
    k = np.arange(n_cut + 1)
    lw = math.log1p(-rho) + k * math.log(rho)
    return DiscreteMeasure(lw, rho ** (n_cut + 1), MeasureKind.GEOMETRIC, {"rho": rho})


def make_measure(kind: MeasureKind | str, tail_tol: float = DEFAULT_TAIL, **params) -> DiscreteMeasure:
    """Build a named measure.

    ``BERNOULLI(p)``, ``BINOMIAL(n, p)``, ``POISSON(rho)``,
    ``BINPOI(n, p, rho)``, ``BERN_PRODUCT(p_list)``, ``GEOMETRIC(rho)``.
    """
    kind = MeasureKind(kind)
    if kind is MeasureKind.BERNOULLI:
        m = _binomial(1, params["p"])
        return DiscreteMeasure(m.log_weights, 0.0, kind, {"p": params["p"]})
    if kind is MeasureKind.BINOMIAL:
        return _binomial(params["n"], params["p"])
    if kind is MeasureKind.POISSON:
        return _poisson(params["rho"], tail_tol)
    if kind is MeasureKind.BINPOI:
        n, p, rho = params["n"], params["p"], params["rho"]
        m = convolve(_binomial(n, p), _poisson(rho, tail_tol))
        return DiscreteMeasure(m.log_weights, m.tail_bound, kind, {"n": n, "p": p, "rho": rho})
    if kind is MeasureKind.BERN_PRODUCT:
        p_list = tuple(float(p) for p in params["p_list"])
        m = dirac(0)
        for p in p_list:
            m = convolve(m, _binomial(1, p))
        return DiscreteMeasure(m.log_weights, 0.0, kind, {"p_list": p_list})
    if kind is MeasureKind.GEOMETRIC:
        return _geometric(params["rho"], tail_tol)
    raise ValueError(f"cannot construct {kind.value} by name; use DiscreteMeasure directly")


def dirac(n: int) -> DiscreteMeasure:
    lw = np.full(n + 1, -np.inf)
    lw[n] = 0.0
    return DiscreteMeasure(lw, 0.0, MeasureKind.GENERIC, {"dirac": n})


def convolve(m1: DiscreteMeasure, m2: DiscreteMeasure) -> DiscreteMeasure:
    """Law of the sum of independent draws; log-sum-exp accumulation per atom."""
    a, b = m1.log_weights, m2.log_weights
    if len(a) > len(b):
        a, b = b, a
    out = np.full(len(a) + len(b) - 1, -np.inf)
    for j, la in enumerate(a):
        if la == -np.inf:
            continue
        seg = out[j : j + len(b)]
        np.logaddexp(seg, la + b, out=seg)
    return DiscreteMeasure(out, m1.tail_bound + m2.tail_bound, MeasureKind.GENERIC, {})


# --- functions on a window ------------------------------------------------


@dataclass(frozen=True)
class GridFunction:
    """Values f(0..W) of a function on the integers, with declared codomain (lo, hi)."""

    values: np.ndarray
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        v = self.values
        if v.ndim != 1 or len(v) == 0:
            raise ValueError("values must be a non-empty vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        if not (np.all(v > self.lo) and np.all(v < self.hi)):
            raise ValueError(f"values escape the codomain ({self.lo}, {self.hi})")

    @classmethod
    def from_callable(cls, fn: Callable[[np.ndarray], np.ndarray], window: int, lo=-math.inf, hi=math.inf):
        n = np.arange(window + 1)
        return cls(np.asarray(fn(n), dtype=float) * np.ones(window + 1), lo, hi)

    @classmethod
    def for_phi(cls, values, phi: PhiFunction) -> "GridFunction":
        return cls(values, phi.lo, phi.hi)

    @property
    def window(self) -> int:
        return len(self.values) - 1

    def __call__(self, n):
        n = np.asarray(n)
        if np.any(n < 0) or np.any(n > self.window):
            raise IndexError(f"evaluation outside window 0..{self.window}")
        return self.values[n]

    def shifted(self, k: int) -> np.ndarray:
        """Array n -> f(n + k) on 0..W-k (k >= 0)."""
        if k < 0 or k > self.window:
            raise IndexError("shift exceeds window")
        return self.values[k:]

    def head(self, length: int) -> np.ndarray:
        if length > len(self.values):
            raise IndexError(f"need {length} values, window holds {len(self.values)}")
        return self.values[:length]

    def to_dict(self) -> dict:
        return {"window": self.window, "values": self.values.tolist(), "codomain": [self.lo, self.hi]}

    @classmethod
    def from_dict(cls, data: dict) -> "GridFunction":
        lo, hi = data.get("codomain", [-math.inf, math.inf])
        return cls(np.asarray(data["values"], dtype=float), float(lo), float(hi))


def _values(f, length: int) -> np.ndarray:
    if isinstance(f, GridFunction):
        return f.head(length)
    arr = np.asarray(f, dtype=float)
    if arr.ndim == 0:
        return np.full(length, float(arr))
    if len(arr) < length:
        raise IndexError(f"need {length} values, got {len(arr)}")
    return arr[:length]


def expectation(m: DiscreteMeasure, f) -> float:
    """⟨m, f⟩ with exactly rounded summation; ``f`` must cover the support."""
    w = m.weights
    return math.fsum(w * _values(f, len(w)))


def expectation_error(m: DiscreteMeasure, f) -> float:
    """Bound on the truncation error of :func:`expectation` for sup-bounded ``f``."""
    v = _values(f, len(m.log_weights))
    return m.tail_bound * float(np.max(np.abs(v)))


def phi_entropy(m: DiscreteMeasure, phi: PhiFunction, f) -> float:
    """⟨m, Φ(f)⟩ - Φ(⟨m, f⟩), evaluated as ⟨m, A(mean, f - mean)⟩.

    The centred form is algebraically equal and its error in the mean is
    second order, so nearly constant f keep their relative accuracy.
    """
    w = m.weights
    v = _values(f, len(w))
    phi.require(v)
    mean = math.fsum(w * v)
    if not phi.contains(mean):
        raise AssertionError("mean escaped the interval of Φ")
    return math.fsum(w * transform_A(phi, np.full_like(v, mean), v - mean, check=False))


def variance(m: DiscreteMeasure, f) -> float:
    w = m.weights
    v = _values(f, len(w))
    mean = math.fsum(w * v)
    return math.fsum(w * (v - mean) ** 2)


def tv_distance(m1: DiscreteMeasure, m2: DiscreteMeasure, with_error: bool = False):
    """Half the l1 distance; with ``with_error`` also the worst-case tail error."""
    length = max(len(m1.log_weights), len(m2.log_weights))
    d = 0.5 * math.fsum(np.abs(m1.padded(length) - m2.padded(length)))
    err = 0.5 * (m1.tail_bound + m2.tail_bound)
    d = min(max(d, 0.0), 1.0)
    return (d, err) if with_error else d


# --- integration-by-parts identities -------------------------------------


class MeasureIdentity(enum.Enum):
    IPP_BIN = "IPP_BIN"
    IPP_BIN_BW = "IPP_BIN_BW"
    IPP_POI = "IPP_POI"
    IPP_BINPOI = "IPP_BINPOI"


def measure_identity_sides(tag: MeasureIdentity, f: np.ndarray, n: int = 0, p: float = 0.5, rho: float = 1.0,
                           tail_tol: float = FINE_TAIL):
    """Both sides of a binomial/Poisson integration-by-parts identity, plus a
    rounding scale.  ``f`` must cover the support plus one extra atom."""
    f = np.asarray(f, dtype=float)
    tag = MeasureIdentity(tag)
    if tag in (MeasureIdentity.IPP_BIN, MeasureIdentity.IPP_BIN_BW, MeasureIdentity.IPP_BINPOI) and n < 1:
        raise ValueError("binomial identities need n >= 1")
    q = 1.0 - p
    if tag is MeasureIdentity.IPP_BIN:
        big, small = _binomial(n, p), _binomial(n - 1, p)
        h = np.arange(n + 1)
        lhs_terms = big.weights * h * f[: n + 1]
        rhs_terms = n * p * small.weights * f[1 : n + 1]
    elif tag is MeasureIdentity.IPP_BIN_BW:
        big, small = _binomial(n, p), _binomial(n - 1, p)
        h = np.arange(n + 1)
        lhs_terms = big.weights * (n - h) * f[: n + 1]
        rhs_terms = n * q * small.weights * f[:n]
    elif tag is MeasureIdentity.IPP_POI:
        m = _poisson(rho, tail_tol)
        k = len(m.log_weights)
        lhs_terms = m.weights * np.arange(k) * f[:k]
        rhs_terms = rho * m.weights * f[1 : k + 1]
    else:
        big = convolve(_binomial(n, p), _poisson(rho, tail_tol))
        small = convolve(_binomial(n - 1, p), _poisson(rho, tail_tol))
        kb, ks = len(big.log_weights), len(small.log_weights)
        lhs_terms = big.weights * np.arange(kb) * f[:kb]
        rhs_terms = np.concatenate([n * p * small.weights * f[1 : ks + 1], rho * big.weights * f[1 : kb + 1]])
    lhs = math.fsum(lhs_terms)
    rhs = math.fsum(rhs_terms)
    scale = math.fsum(np.abs(lhs_terms)) + math.fsum(np.abs(rhs_terms))
    return lhs, rhs, scale


def required_window(tag: MeasureIdentity, n: int = 0, rho: float = 1.0, tail_tol: float = FINE_TAIL) -> int:
    tag = MeasureIdentity(tag)
    k = len(_poisson(rho, tail_tol).log_weights) if tag in (MeasureIdentity.IPP_POI, MeasureIdentity.IPP_BINPOI) else 1
    return n + k + 1


def check_measure_identity(
    tag: MeasureIdentity | str,
    cases: int = 1000,
    seed: int = 0,
    n: int | None = None,
    p: float | None = None,
    rho: float | None = None,
    f: Sequence[float] | GridFunction | None = None,
    tolerance: float = 1e-10,
) -> VerificationReport:
    """Check an integration-by-parts identity on seeded random parameters and
    bounded functions.  Fixed ``n``, ``p``, ``rho`` or ``f`` override the draw."""
    tag = MeasureIdentity(tag)
    lhs, rhs, scale, wit = [], [], [], []
    for case in range(cases):
        rng = np.random.default_rng([seed, case, 7])
        nn = n if n is not None else int(rng.integers(1, 30))
        pp = p if p is not None else float(rng.uniform(0.0, 1.0))
        rr = rho if rho is not None else float(rng.uniform(0.05, 20.0))
        width = required_window(tag, nn, rr)
        if f is None:
            ff = rng.uniform(-5.0, 5.0, width + 1)
        elif isinstance(f, GridFunction):
            ff = f.head(width + 1)
        else:
            ff = _values(np.asarray(f, dtype=float), width + 1)
        left, right, sc = measure_identity_sides(tag, ff, nn, pp, rr)
        lhs.append(left)
        rhs.append(right)
        scale.append(sc)
        wit.append({"n": nn, "p": pp, "rho": rr})
    return identity_report(tag.value, lhs, rhs, scale, tolerance, witness_fn=lambda i: wit[i], seed=seed)


# --- structural properties of Φ-entropies --------------------------------


def variational_gap(m: DiscreteMeasure, phi: PhiFunction, f, g) -> float:
    """Ent[f] - (Ent[g] + ⟨m, (Φ'(g) - Φ'(⟨g⟩))(f - g)⟩); non-negative for
    admissible Φ and zero at g = f."""
    w = m.weights
    fv, gv = _values(f, len(w)), _values(g, len(w))
    mg = math.fsum(w * gv)
    bracket = math.fsum(w * (phi.d1(gv) - phi.d1(mg)) * (fv - gv))
    return phi_entropy(m, phi, fv) - phi_entropy(m, phi, gv) - bracket


def tensorisation_gap(w1: np.ndarray, w2: np.ndarray, phi: PhiFunction, F: np.ndarray) -> float:
    """⟨Q, Ent_{Q1}[F] + Ent_{Q2}[F]⟩ - Ent_{Q1⊗Q2}[F] for F on a product grid.

    ``F[i, j]`` is the value at (i, j); ``w1`` and ``w2`` are the weights.  The
    gap is non-negative exactly when Φ-entropy is sub-additive on this product.
    """
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    F = np.asarray(F, dtype=float)
    joint = np.outer(w1, w2)
    total = math.fsum((joint * phi(F)).ravel()) - float(phi(math.fsum((joint * F).ravel())))
    # entropy in the first coordinate for each fixed j, averaged over j
    m1 = w1 @ F
    ent1 = w1 @ phi(F) - phi(m1)
    m2 = F @ w2
    ent2 = phi(F) @ w2 - phi(m2)
    return float(math.fsum(w2 * ent1) + math.fsum(w1 * ent2) - total)

