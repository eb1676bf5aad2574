"""Verification reports shared by every check in the package."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


def _plain(value: Any) -> Any:
    """Convert numpy scalars/arrays nested in dicts and lists to JSON types."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return repr(value)
    return value


@dataclass
class VerificationReport:
    """Outcome of an identity, comparison or inequality check.

    For identities ``max_deviation`` is the worst relative deviation
    ``|lhs - rhs| / scale``.  For inequalities ``min_slack`` is the worst
    scaled ``(rhs - lhs) / scale`` and ``max_ratio`` the largest ``lhs/rhs``.
    """

    name: str
    kind: str
    case_count: int
    tolerance: float
    passed: bool
    min_slack: float | None = None
    max_ratio: float | None = None
    max_deviation: float | None = None
    max_abs_deviation: float | None = None
    lhs: float | None = None
    rhs: float | None = None
    witness: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None
    flags: list[str] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return _plain(
            {
                "name": self.name,
                "kind": self.kind,
                "case_count": self.case_count,
                "tolerance": self.tolerance,
                "pass": self.passed,
                "min_slack": self.min_slack,
                "max_ratio": self.max_ratio,
                "max_deviation": self.max_deviation,
                "max_abs_deviation": self.max_abs_deviation,
                "lhs": self.lhs,
                "rhs": self.rhs,
                "witness": self.witness,
                "seed": self.seed,
                "flags": self.flags,
                "details": self.details,
            }
        )

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.kind == "identity":
            metric = f"max_dev={self.max_deviation:.3e}"
        else:
            metric = f"min_slack={self.min_slack:.3e}"
        return f"[{status}] {self.name}: {metric} over {self.case_count} cases (tol {self.tolerance:g})"


def identity_report(name, lhs, rhs, scale, tolerance, witness_fn=None, seed=None, **details):
    """Build an identity report from paired arrays of both sides.

    ``scale`` is the per-case magnitude that rounding errors are measured
    against; it is floored by ``max(|lhs|, |rhs|)``.
    """
    lhs = np.atleast_1d(np.asarray(lhs, dtype=float))
    rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
    scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), np.asarray(scale, dtype=float))
    scale = np.maximum(scale, 1e-300)
    absdev = np.abs(lhs - rhs)
    reldev = absdev / scale
    reldev = np.where(np.isfinite(reldev), reldev, np.inf)
    worst = int(np.argmax(reldev))
    witness = {"case": worst, "lhs": lhs[worst], "rhs": rhs[worst]}
    if witness_fn is not None:
        witness.update(witness_fn(worst))
    return VerificationReport(
        name=name,
        kind="identity",
        case_count=len(lhs),
        tolerance=tolerance,
        passed=bool(reldev[worst] < tolerance),
        max_deviation=float(reldev[worst]),
        max_abs_deviation=float(np.max(absdev)),
        lhs=float(lhs[worst]),
        rhs=float(rhs[worst]),
        witness=witness,
        seed=seed,
        details=details,
    )


def inequality_report(
    name, lhs, rhs, tolerance, scale=None, rounding=None, witness_fn=None, seed=None, **details
):
    """Build an inequality report for ``lhs <= rhs`` over paired cases.

    ``rounding`` is an optional per-case absolute allowance for the forward
    rounding error of evaluating both sides (a few ulps of the magnitudes of
    the cancelling terms); it is added to ``rhs - lhs`` before scaling.
    """
    lhs = np.atleast_1d(np.asarray(lhs, dtype=float))
    rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
    floor = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1e-30)
    if scale is not None:
        floor = np.maximum(floor, np.asarray(scale, dtype=float))
    diff = rhs - lhs
    if rounding is not None:
        diff = diff + np.asarray(rounding, dtype=float)
    slack = diff / floor
    slack = np.where(np.isfinite(slack), slack, -np.inf)
    worst = int(np.argmin(slack))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs, np.nan)
    max_ratio = float(np.nanmax(ratio)) if np.any(np.isfinite(ratio)) else float("nan")
    witness = {"case": worst, "lhs": lhs[worst], "rhs": rhs[worst]}
    if witness_fn is not None:
        witness.update(witness_fn(worst))
    return VerificationReport(
        name=name,
        kind="inequality",
        case_count=len(lhs),
        tolerance=tolerance,
        passed=bool(slack[worst] >= -tolerance),
        min_slack=float(slack[worst]),
        max_ratio=max_ratio,
        lhs=float(lhs[worst]),
        rhs=float(rhs[worst]),
        witness=witness,
        seed=seed,
        details=details,
    )
