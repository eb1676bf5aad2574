"""Exact simulation of the M/M/∞ queue through its embedded jump chain.

From state n the queue waits an Exp(λ + nμ) time and then moves to n+1 with
probability λ/(λ + nμ), otherwise to n-1.  Path ``i`` of an experiment with
seed ``s`` draws from its own Philox stream keyed by ``(s, i)``, so results do
not depend on how paths are split across threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit
from scipy import stats

from .measures import DiscreteMeasure, MeasureKind
from .queue import QueueParams

_MIN_CHUNK = 32


def path_rng(seed: int, path: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, path], dtype=np.uint64)))


# --- kernels --------------------------------------------------------------


@njit(nogil=True, cache=True)
def _run_to(state, clock, t_end, lam, mu, exps, unifs):
    """Advance until t_end or until the draws run out.

    Returns (state, clock, done).  A holding time that overshoots t_end ends
    the run; by memorylessness the overshoot need not be kept.
    """
    for i in range(exps.shape[0]):
        rate = lam + state * mu
        if rate <= 0.0:
            return state, t_end, True
        clock += exps[i] / rate
        if clock > t_end:
            return state, t_end, True
        if unifs[i] * rate < lam:
            state += 1
        else:
            state -= 1
    return state, clock, False


@njit(nogil=True, cache=True)
def _run_record(state, clock, t_end, lam, mu, exps, unifs, times, states, count):
    """As _run_to, also appending (jump time, new state) to the buffers."""
    for i in range(exps.shape[0]):
        rate = lam + state * mu
        if rate <= 0.0:
            return state, t_end, True, count
        clock += exps[i] / rate
        if clock > t_end:
            return state, t_end, True, count
        if unifs[i] * rate < lam:
            state += 1
        else:
            state -= 1
        times[count] = clock
        states[count] = state
        count += 1
    return state, clock, False, count


@njit(nogil=True, cache=True)
def _run_sup(state, clock, t_end, lam, mu, exps, unifs, scale, rho, x, best):
    """As _run_to, tracking sup |state/scale - m(s)| with m(s) = ρ + (x-ρ)e^{-μs}.

    m is monotone, and the scaled state is constant between jumps, so the sup
    over each holding interval sits at one of its endpoints.
    """
    for i in range(exps.shape[0]):
        rate = lam + state * mu
        if rate <= 0.0:
            m_end = rho + (x - rho) * math.exp(-mu * t_end)
            best = max(best, abs(state / scale - m_end))
            return state, t_end, True, best
        nxt = clock + exps[i] / rate
        if nxt > t_end:
            m_end = rho + (x - rho) * math.exp(-mu * t_end)
            best = max(best, abs(state / scale - m_end))
            return state, t_end, True, best
        m_jump = rho + (x - rho) * math.exp(-mu * nxt)
        best = max(best, abs(state / scale - m_jump))
        clock = nxt
        if unifs[i] * rate < lam:
            state += 1
        else:
            state -= 1
        best = max(best, abs(state / scale - m_jump))
    return state, clock, False, best


def _chunk(params: QueueParams, n0: int, t: float) -> int:
    # expected number of jumps, bounded by the largest reachable rate
    peak = params.lam + max(n0, params.lam / params.mu if params.mu > 0 else n0 + params.lam * t) * params.mu
    return int(1.2 * peak * t + 4 * math.sqrt(peak * t + 1) + _MIN_CHUNK)


def _state_at(params: QueueParams, n0: int, t: float, rng: np.random.Generator) -> int:
    state, clock, done = n0, 0.0, False
    size = _chunk(params, n0, t)
    while not done:
        exps = rng.standard_exponential(size)
        unifs = rng.random(size)
        state, clock, done = _run_to(state, clock, t, params.lam, params.mu, exps, unifs)
    return int(state)


def _map_paths(fn, paths: int, workers: int):
    """Apply fn to path indices; results are in path order whatever ``workers`` is."""
    if workers <= 1:
        return [fn(i) for i in range(paths)]
    blocks = np.array_split(np.arange(paths), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(lambda idx: [fn(int(i)) for i in idx], blocks)
        return [r for part in parts for r in part]


# --- trajectories ---------------------------------------------------------


@dataclass
class Trajectory:
    """States visited and the times of the jumps between them.

    ``states[0]`` is the initial state and ``states[k]`` the state after the
    k-th jump at ``jump_times[k-1]``.
    """

    jump_times: np.ndarray
    states: np.ndarray
    seed: int
    path: int = 0
    t_max: float = math.inf

    def state_at(self, t: float) -> int:
        k = int(np.searchsorted(self.jump_times, t, side="right"))
        return int(self.states[k])

    def holding_times(self) -> np.ndarray:
        """Completed holding intervals (the last, censored one is dropped)."""
        return np.diff(np.concatenate([[0.0], self.jump_times]))

    def csv_rows(self):
        yield ("time", "state")
        yield (0.0, int(self.states[0]))
        for t, s in zip(self.jump_times, self.states[1:]):
            yield (float(t), int(s))


def simulate_path(params: QueueParams, n0: int, t_max: float, seed: int, path: int = 0) -> Trajectory:
    if n0 < 0:
        raise ValueError("initial state must be in N")
    rng = path_rng(seed, path)
    size = _chunk(params, n0, t_max)
    times = np.empty(0)
    states = np.empty(0, dtype=np.int64)
    state, clock, done, count = n0, 0.0, False, 0
    while not done:
        exps = rng.standard_exponential(size)
        unifs = rng.random(size)
        times = np.concatenate([times, np.empty(size)])
        states = np.concatenate([states, np.empty(size, dtype=np.int64)])
        state, clock, done, count = _run_record(state, clock, t_max, params.lam, params.mu, exps, unifs, times, states, count)
    return Trajectory(times[:count].copy(), np.concatenate([[n0], states[:count]]), seed, path, t_max)


def empirical_law(params: QueueParams, n0: int, t: float, paths: int, seed: int, workers: int = 1) -> DiscreteMeasure:
    """Frequencies of X_t over ``paths`` independent seeded paths."""
    if paths < 1:
        raise ValueError("need at least one path")
    finals = np.array(_map_paths(lambda i: _state_at(params, n0, t, path_rng(seed, i)), paths, workers))
    counts = np.bincount(finals)
    with np.errstate(divide="ignore"):
        lw = np.log(counts) - math.log(paths)
    return DiscreteMeasure(lw, 0.0, MeasureKind.GENERIC, {"paths": paths, "seed": seed, "n0": n0, "t": t})


def sample_states(params: QueueParams, n0: int, t: float, paths: int, seed: int, workers: int = 1) -> np.ndarray:
    return np.array(_map_paths(lambda i: _state_at(params, n0, t, path_rng(seed, i)), paths, workers))


# --- jump-chain statistics ------------------------------------------------


def pooled_holding_times(params: QueueParams, n0: int, t_max: float, paths: int, seed: int, state: int):
    """Holding times spent at ``state`` and the directions of the jumps out of it."""
    holds, ups = [], []
    for i in range(paths):
        tr = simulate_path(params, n0, t_max, seed, i)
        h = tr.holding_times()
        at = tr.states[:-1] == state
        holds.append(h[at])
        ups.append(np.diff(tr.states)[at] > 0)
    return np.concatenate(holds), np.concatenate(ups)


def holding_time_ks(params: QueueParams, state: int, holds: np.ndarray):
    """Kolmogorov-Smirnov test of holding times against Exp(λ + nμ)."""
    rate = params.lam + state * params.mu
    return stats.kstest(holds, "expon", args=(0.0, 1.0 / rate))


# --- Kelly scaling --------------------------------------------------------


@dataclass(frozen=True)
class ScalingConfig:
    N: int
    x: float
    y: float = 0.0
    t_max: float = 1.0
    paths: int = 100
    seed: int = 0

    @property
    def z0(self) -> int:
        """Initial state floor(N x + sqrt(N) y)."""
        z = math.floor(self.N * self.x + math.sqrt(self.N) * self.y)
        if z < 0:
            raise ValueError("initial state floor(Nx + sqrt(N) y) is negative")
        return z


def fluid_mean(params: QueueParams, x: float, t):
    """m(t) = ρ + (x - ρ) e^{-μt}."""
    return params.rho + (x - params.rho) * np.exp(-params.mu * np.asarray(t, dtype=float))


@dataclass
class FluidReport:
    config: dict
    params: dict
    sup_deviations: np.ndarray
    mean: float
    stderr: float

    def to_dict(self):
        return {
            "config": self.config,
            "params": self.params,
            "mean_sup_deviation": self.mean,
            "stderr": self.stderr,
            "paths": len(self.sup_deviations),
        }


def _sup_deviation(params: QueueParams, cfg: ScalingConfig, rng) -> float:
    scaled = params.scaled(cfg.N)
    state, clock, done = cfg.z0, 0.0, False
    best = abs(state / cfg.N - cfg.x)
    size = _chunk(scaled, cfg.z0, cfg.t_max)
    while not done:
        exps = rng.standard_exponential(size)
        unifs = rng.random(size)
        state, clock, done, best = _run_sup(
            state, clock, cfg.t_max, scaled.lam, scaled.mu, exps, unifs, float(cfg.N), params.rho, cfg.x, best
        )
    return float(best)


def fluid_experiment(cfg: ScalingConfig, params: QueueParams, workers: int = 1) -> FluidReport:
    """sup_{s<=t} |X^N_s/N - m(s)| per path for the queue with input rate Nλ."""
    devs = np.array(_map_paths(lambda i: _sup_deviation(params, cfg, path_rng(cfg.seed, i)), cfg.paths, workers))
    return FluidReport(
        asdict(cfg),
        {"lam": params.lam, "mu": params.mu},
        devs,
        float(np.mean(devs)),
        float(np.std(devs, ddof=1) / math.sqrt(len(devs))) if len(devs) > 1 else float("nan"),
    )


@dataclass
class CLTReport:
    config: dict
    params: dict
    samples: np.ndarray
    mean: float
    variance: float
    mean_target: float
    variance_target: float
    ou_branch: bool
    notes: list = field(default_factory=list)

    @property
    def mean_stderr(self) -> float:
        return math.sqrt(self.variance / len(self.samples))

    @property
    def variance_rel_error(self) -> float:
        return abs(self.variance / self.variance_target - 1.0)

    def to_dict(self):
        return {
            "config": self.config,
            "params": self.params,
            "mean": self.mean,
            "mean_stderr": self.mean_stderr,
            "variance": self.variance,
            "mean_target": self.mean_target,
            "variance_target": self.variance_target,
            "variance_rel_error": self.variance_rel_error,
            "ou_branch": self.ou_branch,
            "notes": self.notes,
        }


def clt_experiment(cfg: ScalingConfig, params: QueueParams, workers: int = 1) -> CLTReport:
    """Sample Z^N_t = (X^N_t - N m(t))/sqrt(N) at t = cfg.t_max.

    Targets are the mean y e^{-μt} and, on the x = ρ branch, the OU variance
    (1 - e^{-2μt}) ρ.  Off that branch the exact limit variance
    (x p + ρ) q from the Mehler moments is used instead.
    """
    scaled = params.scaled(cfg.N)
    t = cfg.t_max
    finals = sample_states(scaled, cfg.z0, t, cfg.paths, cfg.seed, workers)
    z = (finals - cfg.N * fluid_mean(params, cfg.x, t)) / math.sqrt(cfg.N)
    p, q = params.p(t), params.q(t)
    ou = math.isclose(cfg.x, params.rho, rel_tol=1e-12)
    notes = []
    if ou:
        var_target = (1.0 - p * p) * params.rho
    else:
        var_target = (cfg.x * p + params.rho) * q
        notes.append("x != rho: variance target (x p + rho) q from the exact moments")
    return CLTReport(
        asdict(cfg),
        {"lam": params.lam, "mu": params.mu},
        z,
        float(np.mean(z)),
        float(np.var(z, ddof=1)),
        cfg.y * p,
        var_target,
        ou,
        notes,
    )
