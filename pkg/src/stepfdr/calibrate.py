"""Worst-case FDR of the step-up family ``a_i(delta)`` and calibration of delta.

Under independence the worst case over all p-value laws is attained by a
Dirac-uniform configuration, so it is a maximum over ``n1 = 0..n-1`` of exact
FDR values computed by :func:`stepfdr.exact.du_shifted_pmf`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigurationError, CriticalSchedule
from .exact import du_shifted_pmf, fdr_from_pmf
from .schedules import _su_values, su_family_a

__all__ = [
    "CalibrationInfeasible",
    "CalibrationResult",
    "du_fdr_curve",
    "worst_case_fdr_su",
    "solve_kappa",
    "asymptotic_limit",
    "convergence_probe",
]


class CalibrationInfeasible(ConfigurationError):
    """The worst-case FDR does not cross ``alpha`` on ``[0, 1 - alpha]``."""

    def __init__(self, message, fdr_low, fdr_high):
        super().__init__(message)
        self.fdr_low = fdr_low
        self.fdr_high = fdr_high


@dataclass
class CalibrationResult:
    kappa: float
    worst_case_fdr_at_kappa: float
    argmax_n1: int
    iterations: int
    bracket: tuple
    n: int
    alpha: float
    curve: list = field(default_factory=list, repr=False)

    @property
    def bracket_width(self) -> float:
        return self.bracket[1] - self.bracket[0]


def du_fdr_curve(n: int, schedule: CriticalSchedule, mode: str = "SU") -> np.ndarray:
    """Exact FDR under DU(n1) for every ``n1 = 0..n-1``."""
    return np.array([fdr_from_pmf(du_shifted_pmf(n, n1, schedule, mode), n1)
                     for n1 in range(n)])


def _schedule(n, alpha, delta):
    # the closed endpoint delta = 1 - alpha is allowed here for bracketing
    return CriticalSchedule(_su_values(n, alpha, delta), "su-delta",
                            {"n": n, "alpha": alpha, "delta": delta})


def worst_case_fdr_su(n: int, alpha: float, delta: float) -> tuple[float, int]:
    """Largest exact step-up FDR over the Dirac-uniform configurations.

    Returns ``(fdr, argmax_n1)``. All ``n1`` are enumerated since nothing
    guarantees unimodality in ``n1``.
    """
    su_family_a(n, alpha, delta)  # domain check
    curve = du_fdr_curve(n, _schedule(n, alpha, delta))
    k = int(np.argmax(curve))
    return float(curve[k]), k


def solve_kappa(n: int, alpha: float, tol: float = 1e-6, xtol: float = 1e-9,
                max_iter: int = 200) -> CalibrationResult:
    """Find ``delta`` whose worst-case step-up FDR equals ``alpha``, by bisection.

    Bisection needs only that the worst case is nondecreasing in delta. Stops
    once ``|worst case - alpha| <= tol`` or the bracket is narrower than
    ``xtol``; in the latter case the returned point may miss ``tol`` if the
    curve is flat at ``alpha`` and the bracket is the meaningful answer.

    Raises
    ------
    CalibrationInfeasible
        If the worst case at ``delta = 0`` already exceeds ``alpha`` or at
        ``delta = 1 - alpha`` still stays below it.
    """
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    su_family_a(n, alpha, 0.0)

    def worst(delta):
        curve = du_fdr_curve(n, _schedule(n, alpha, delta))
        return float(curve.max()), int(curve.argmax()), curve

    lo, hi = 0.0, 1.0 - alpha
    f_lo, f_hi = worst(lo)[0], worst(hi)[0]
    if f_lo > alpha or f_hi < alpha:
        raise CalibrationInfeasible(
            f"worst-case FDR ranges over [{f_lo:.6g}, {f_hi:.6g}] for delta in "
            f"[0, {hi:.6g}] and never reaches alpha={alpha}", f_lo, f_hi)
    it = 0
    while True:
        it += 1
        mid = 0.5 * (lo + hi)
        f_mid, arg, curve = worst(mid)
        if f_mid < alpha:
            lo = mid
        else:
            hi = mid
        if abs(f_mid - alpha) <= tol or hi - lo <= xtol or it >= max_iter:
            break
    return CalibrationResult(kappa=mid, worst_case_fdr_at_kappa=f_mid, argmax_n1=arg,
                             iterations=it, bracket=(lo, hi), n=n, alpha=alpha,
                             curve=list(curve))


def asymptotic_limit(c: float, delta: float, alpha: float) -> tuple[float, float]:
    """Limit of the worst-case step-up FDR when ``n0 <= c n`` and ``delta_n -> delta``.

    ``x`` is the unique root in (0, 1) of ``t / (delta t + alpha) = (1 - c) + c t``,
    i.e. of ``c delta t**2 + (c alpha + delta (1 - c) - 1) t + alpha (1 - c) = 0``;
    the limit is ``c x / (1 - c + c x)``. Returns ``(x, limit)``.
    """
    if not alpha < c < 1:
        raise ConfigurationError(f"need alpha < c < 1, got c={c}")
    if not 0 < delta < 1 - alpha:
        raise ConfigurationError(f"need 0 < delta < 1 - alpha, got delta={delta}")
    lin = c * alpha + delta * (1 - c) - 1
    const = alpha * (1 - c)
    disc = lin * lin - 4 * c * delta * const
    if disc < 0:
        raise ConfigurationError(f"negative discriminant {disc} at c={c}, delta={delta}")
    # smaller root, written to avoid cancellation
    x = 2 * const / (-lin + math.sqrt(disc))
    resid = x / (delta * x + alpha) - (1 - c) - c * x
    if abs(resid) > 1e-10 or not 0 < x < 1:
        raise ConfigurationError(f"root check failed: x={x}, residual={resid}")
    return x, c * x / (1 - c + c * x)


def convergence_probe(n_list, alpha: float, delta: float, c: float,
                      worst_case: bool = True) -> list[dict]:
    """Exact finite-n values next to their large-n limits.

    For each ``n`` reports the worst-case FDR (limit ``alpha``) and the FDR
    under DU with ``floor(c n)`` true nulls (at least one), so that
    ``n0 / n <= c`` as the limit requires (limit from :func:`asymptotic_limit`),
    each with its distance to the limit.

    The worst case costs ``O(n**4)``; pass ``worst_case=False`` to skip it
    (its columns are then NaN) when probing large ``n``.
    """
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ConfigurationError("n_list must be increasing")
    _, limit = asymptotic_limit(c, delta, alpha)
    rows = []
    for n in n_list:
        sched = _schedule(n, alpha, delta)
        n0 = max(1, math.floor(c * n))
        wc = worst_case_fdr_su(n, alpha, delta)[0] if worst_case else math.nan
        fdr_b = fdr_from_pmf(du_shifted_pmf(n, n - n0, sched, "SU"), n - n0)
        rows.append({"n": n, "worst_case_fdr": wc, "gap_worst_case": alpha - wc,
                     "n0": n0, "fdr_du": fdr_b, "limit_du": limit,
                     "gap_du": abs(fdr_b - limit)})
    return rows
