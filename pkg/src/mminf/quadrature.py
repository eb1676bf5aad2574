"""Adaptive Gauss-Legendre quadrature on finite intervals."""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np


class QuadResult(NamedTuple):
    value: float
    error: float
    converged: bool
    evaluations: int


@lru_cache(maxsize=16)
def _rule(order: int):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _gl(func, a, b, order):
    x, w = _rule(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    vals = np.asarray(func(mid + half * x), dtype=float)
    return half * float(np.dot(w, vals))


def adaptive_gauss_legendre(
    func: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    abs_tol: float = 1e-12,
    rel_tol: float = 0.0,
    order: int = 10,
    max_level: int = 20,
) -> QuadResult:
    """Integrate ``func`` over ``[a, b]`` by recursive bisection.

    ``func`` receives an array of nodes and must return an array of the same
    shape.  A panel is accepted when the one-panel and two-half-panel rules
    agree to ``max(abs_tol, rel_tol * |I|)``; panels still unresolved at
    ``max_level`` are accepted with ``converged=False``.
    """
    if a == b:
        return QuadResult(0.0, 0.0, True, 0)
    evaluations = 0
    total = 0.0
    err_total = 0.0
    converged = True
    coarse = _gl(func, a, b, order)
    evaluations += order
    stack = [(a, b, coarse, 0, abs_tol)]
    while stack:
        lo, hi, whole, level, tol = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _gl(func, lo, mid, order)
        right = _gl(func, mid, hi, order)
        evaluations += 2 * order
        refined = left + right
        err = abs(refined - whole)
        if err <= max(tol, rel_tol * abs(refined)):
            total += refined
            err_total += err
        elif level >= max_level:
            total += refined
            err_total += err
            converged = False
        else:
            stack.append((lo, mid, left, level + 1, 0.5 * tol))
            stack.append((mid, hi, right, level + 1, 0.5 * tol))
    return QuadResult(total, err_total, converged, evaluations)
