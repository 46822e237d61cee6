"""Closed-form checks for the transitive-inference analysis.

Two pieces: the KL divergence between the long-context score
distributions with its ``H / L**2`` bound and Pinsker consequences, and
the margin objective (a population variance) with its grid extrema.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

MAX_SCAN_POINTS = 5_000_000
BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class TheoryParams:
    H: int
    L: int
    B: int = 2

    def __post_init__(self):
        if self.H < 1 or self.L < 1 or self.B < 2:
            raise ValueError("need H >= 1, L >= 1, B >= 2")


def kl_F_T(p: TheoryParams) -> float:
    """(H/2) (L/(2+L) + log((2+L)/L) - 1), written stably via u = 2/L."""
    u = 2.0 / p.L
    return 0.5 * p.H * (math.log1p(u) - u / (1.0 + u))


def tv_and_success_bound(p: TheoryParams | None = None, kl: float | None = None) -> tuple[float, float]:
    """Pinsker bound on total variation and the resulting classifier success bound."""
    if kl is None:
        kl = kl_F_T(p)
    tv = min(1.0, math.sqrt(max(kl, 0.0) / 2.0))
    return tv, 0.5 * (1.0 + tv)


@dataclass
class BoundReport:
    points: int = 0
    failures: list[tuple[int, int, float]] = field(default_factory=list)
    max_ratio: float = 0.0
    argmax: tuple[int, int] | None = None

    @property
    def passed(self) -> bool:
        return not self.failures


def check_kl_bound(H_values, L_values) -> BoundReport:
    report = BoundReport()
    for H in H_values:
        for L in L_values:
            kl = kl_F_T(TheoryParams(H, L))
            bound = H / L**2
            report.points += 1
            ratio = kl / bound
            if ratio > report.max_ratio:
                report.max_ratio, report.argmax = ratio, (H, L)
            if kl > bound + BOUND_SLACK:
                report.failures.append((H, L, kl))
    return report


def kl_ratio(H: int, L: int) -> float:
    return kl_F_T(TheoryParams(H, L)) * L**2 / H


def margin_objective(mu) -> float:
    """(1/B) sum mu^2 - mean(mu)^2 with entries clamped to [0, 1]."""
    x = np.clip(np.asarray(mu, dtype=float), 0.0, 1.0)
    mean = x.mean()
    return float(np.mean((x - mean) ** 2))


@dataclass(frozen=True)
class ExtremaScan:
    B: int
    step: Fraction
    max_value: Fraction
    argmax: tuple[tuple[Fraction, ...], ...]
    min_value: Fraction
    argmin: tuple[tuple[Fraction, ...], ...]

    @property
    def argmin_all_constant(self) -> bool:
        return all(len(set(v)) == 1 for v in self.argmin)


def margin_extrema_scan(B: int, step) -> ExtremaScan:
    """Exhaustive scan of the grid {0, step, ..., 1}^B in exact arithmetic.

    With integer grid coordinates k, B^2 times the variance equals
    B * sum k^2 - (sum k)^2 (up to the factor step^2), so ties are exact.
    """
    step = Fraction(step).limit_denominator(10**6)
    if step <= 0 or (1 / step).denominator != 1:
        raise ValueError("grid step must divide 1")
    N = int(1 / step)
    points = (N + 1) ** B
    if points > MAX_SCAN_POINTS:
        raise ValueError(f"grid of {points} points exceeds the scan budget of {MAX_SCAN_POINTS}")
    grid = np.arange(N + 1, dtype=np.int64)
    mesh = np.stack(np.meshgrid(*([grid] * B), indexing="ij"), axis=-1).reshape(-1, B)
    scaled = B * (mesh**2).sum(axis=1) - mesh.sum(axis=1) ** 2
    hi, lo = scaled.max(), scaled.min()
    scale = Fraction(1, B * B) * step * step

    def as_points(rows) -> tuple[tuple[Fraction, ...], ...]:
        return tuple(tuple(Fraction(int(c)) * step for c in row) for row in rows)

    return ExtremaScan(
        B=B,
        step=step,
        max_value=int(hi) * scale,
        argmax=as_points(mesh[scaled == hi]),
        min_value=int(lo) * scale,
        argmin=as_points(mesh[scaled == lo]),
    )


def half_split_maximizers(B: int) -> set[tuple[int, ...]]:
    """0/1 vectors with exactly B/2 ones."""
    return {tuple(1 if k in ones else 0 for k in range(B)) for ones in itertools.combinations(range(B), B // 2)}


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def run_suite() -> list[CheckResult]:
    """Every theory check at the documented grid."""
    results = []
    H_values = [2**e for e in range(11)]
    report = check_kl_bound(H_values, range(1, 1001))
    results.append(CheckResult(
        "kl_bound_grid", report.passed,
        f"points={report.points} failures={len(report.failures)} max_ratio={report.max_ratio:.6f} at {report.argmax}",
    ))
    r = kl_ratio(1, 1000)
    results.append(CheckResult("kl_ratio_L1000", abs(r - 1) <= 0.01, f"ratio={r:.6f}"))
    r1 = kl_ratio(1, 1)
    expected = 0.5 * (1 / 3 + math.log(3) - 1)
    results.append(CheckResult("kl_ratio_L1", abs(r1 - expected) < 1e-12 and r1 < 1, f"ratio={r1:.6f}"))
    tv, success = tv_and_success_bound(TheoryParams(2, 2))
    results.append(CheckResult("pinsker_H2_L2", 0 <= tv <= 1 and 0.5 <= success <= 1, f"tv={tv:.6f} success={success:.6f}"))
    scan = margin_extrema_scan(4, Fraction(1, 20))
    got = {tuple(int(c) for c in v) for v in scan.argmax}
    ok = got == half_split_maximizers(4) and scan.max_value == Fraction(1, 4)
    ok = ok and scan.min_value == 0 and scan.argmin_all_constant and len(scan.argmin) == 21
    results.append(CheckResult(
        "margin_extrema_B4", ok,
        f"argmax={sorted(got)} max={scan.max_value} min={scan.min_value} n_min={len(scan.argmin)}",
    ))
    return results
