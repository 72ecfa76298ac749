"""Critical-value generators.

Every generator returns a :class:`~stepfdr.core.CriticalSchedule` of length
``n`` with values in (0, 1), indexed ``i = 1..n``.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .core import ConfigurationError, CriticalSchedule

__all__ = [
    "gbs_beta",
    "su_family_a",
    "rejection_curve_schedule",
    "linear_bh",
    "improve_first",
    "first_value_floor",
    "make_schedule",
]


def _check_n_alpha(n, alpha):
    if int(n) != n or n < 1:
        raise ConfigurationError(f"n must be a positive integer, got {n}")
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha}")
    return int(n), float(alpha)


def _index(n):
    return np.arange(1, n + 1, dtype=float)


def gbs_beta(n: int, alpha: float) -> CriticalSchedule:
    """``beta_i = i*alpha / (n + 1 - i*(1 - alpha))``.

    Step-down tests with these values control the FDR at ``alpha`` under
    independence; the last value is ``n*alpha / (1 + n*alpha)``.

    Examples
    --------
    >>> gbs_beta(3, 0.25).alphas.round(4)
    array([0.0769, 0.2   , 0.4286])
    """
    n, alpha = _check_n_alpha(n, alpha)
    i = _index(n)
    return CriticalSchedule(i * alpha / (n + 1 - i * (1 - alpha)), "gbs-beta",
                            {"n": n, "alpha": alpha})


def su_family_a(n: int, alpha: float, delta: float) -> CriticalSchedule:
    """Step-up family ``a_i = i*alpha / (n + 1 - i*delta)`` for ``0 <= delta < 1 - alpha``.

    ``delta = 0`` gives linear values at level ``n*alpha/(n+1)``; the excluded
    endpoint ``delta = 1 - alpha`` would give :func:`gbs_beta`.
    """
    n, alpha = _check_n_alpha(n, alpha)
    if not 0.0 <= delta < 1.0 - alpha:
        raise ConfigurationError(f"delta must lie in [0, 1 - alpha), got {delta}")
    return CriticalSchedule(_su_values(n, alpha, delta), "su-delta",
                            {"n": n, "alpha": alpha, "delta": float(delta)})


def _su_values(n, alpha, delta):
    i = _index(n)
    return i * alpha / (n + 1 - i * delta)


def rejection_curve_schedule(n: int, alpha: float, delta: float, b) -> CriticalSchedule:
    """Inverse of the rejection curve ``g(t) = t*b / (delta*t + alpha)`` at ``i/n``.

    ``a_i = alpha*i / (n*b - i*delta)``; requires ``b > delta + alpha`` so that
    ``g(1) > 1``.

    ``b`` may be a :class:`fractions.Fraction`; ``n*b`` is then formed exactly.
    This matters for ``b = (n+1)/n``, whose rounding as a float is amplified
    by ``n / (n*b - n*delta)`` in the largest values. With
    ``b = Fraction(n + 1, n)`` and ``delta = 1 - alpha`` the result equals
    :func:`gbs_beta` bit for bit.
    """
    n, alpha = _check_n_alpha(n, alpha)
    if delta < 0:
        raise ConfigurationError(f"delta must be nonnegative, got {delta}")
    if not b > delta + alpha:
        raise ConfigurationError(f"need b > delta + alpha, got b={b}, delta={delta}")
    nb = float(n * Fraction(b))
    i = _index(n)
    return CriticalSchedule(alpha * i / (nb - i * delta), "rejection-curve",
                            {"n": n, "alpha": alpha, "delta": float(delta), "b": float(b)})


def linear_bh(n: int, alpha: float) -> CriticalSchedule:
    n, alpha = _check_n_alpha(n, alpha)
    return CriticalSchedule(_index(n) * alpha / n, "linear-bh", {"n": n, "alpha": alpha})


def first_value_floor(n: int, alpha: float) -> float:
    """``1 - (1 - alpha)**(1/n)``, the smallest first critical value of Benjamini-Liu."""
    return -np.expm1(np.log1p(-alpha) / n)


def improve_first(schedule: CriticalSchedule, n: int, alpha: float) -> CriticalSchedule:
    """Raise every value to at least ``1 - (1 - alpha)**(1/n)``.

    Keeps step-down FDR control under PRDS with independent false nulls while
    increasing power through the first critical value.
    """
    n, alpha = _check_n_alpha(n, alpha)
    if schedule.n != n:
        raise ConfigurationError(f"schedule length {schedule.n} does not match n={n}")
    floor = first_value_floor(n, alpha)
    params = dict(schedule.params, n=n, alpha=alpha, base=schedule.family)
    return CriticalSchedule(np.maximum(schedule.alphas, floor), "improved", params)


def make_schedule(family: str, n: int, alpha: float, delta=None, b=None,
                  improved: bool = False) -> CriticalSchedule:
    """Build a schedule from a family tag, as used by config files and the CLI.

    ``family="improved"`` (or ``improved=True``) applies :func:`improve_first`
    to the base family, which defaults to ``gbs-beta``.
    """
    if family == "improved":
        family, improved = "gbs-beta", True
    if family == "gbs-beta":
        sched = gbs_beta(n, alpha)
    elif family == "linear-bh":
        sched = linear_bh(n, alpha)
    elif family == "su-delta":
        if delta is None:
            raise ConfigurationError("su-delta requires delta")
        sched = su_family_a(n, alpha, delta)
    elif family == "rejection-curve":
        if delta is None or b is None:
            raise ConfigurationError("rejection-curve requires delta and b")
        sched = rejection_curve_schedule(n, alpha, delta, b)
    else:
        raise ConfigurationError(f"unknown schedule family {family!r}")
    return improve_first(sched, n, alpha) if improved else sched
