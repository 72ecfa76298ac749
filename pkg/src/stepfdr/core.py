"""Procedure mechanics: step-down / step-up thresholds, the sigma boundary
and the conservative FDR estimator process.

All functions are pure. Comparisons between p-values and critical values use
exact weak inequality (``p <= alpha_i``) with no tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "ConfigurationError",
    "HypothesisPartition",
    "PValueSample",
    "CriticalSchedule",
    "ProcedureOutcome",
    "step_down_threshold",
    "step_up_threshold",
    "sigma_boundary",
    "fdr_estimator",
    "step_down_count",
    "step_up_count",
]

SCHEDULE_FAMILIES = (
    "gbs-beta",
    "linear-bh",
    "su-delta",
    "rejection-curve",
    "improved",
    "custom",
)


class ConfigurationError(ValueError):
    """Invalid parameters, mismatched lengths or malformed configuration."""


@dataclass(frozen=True)
class HypothesisPartition:
    """Split of the indices ``0..n-1`` into true nulls ``i0`` and false nulls ``i1``."""

    i0: tuple
    i1: tuple

    def __post_init__(self):
        i0 = tuple(int(i) for i in self.i0)
        i1 = tuple(int(i) for i in self.i1)
        object.__setattr__(self, "i0", i0)
        object.__setattr__(self, "i1", i1)
        if len(i0) < 1:
            raise ConfigurationError("at least one true null is required (n0 >= 1)")
        both = set(i0) | set(i1)
        if len(both) != len(i0) + len(i1):
            raise ConfigurationError("i0 and i1 must be disjoint without repeats")
        if both != set(range(len(both))):
            raise ConfigurationError("i0 and i1 must cover 0..n-1")

    @classmethod
    def leading_nulls(cls, n0: int, n1: int) -> "HypothesisPartition":
        """True nulls on the first ``n0`` indices, false nulls on the rest."""
        return cls(tuple(range(n0)), tuple(range(n0, n0 + n1)))

    @property
    def n0(self) -> int:
        return len(self.i0)

    @property
    def n1(self) -> int:
        return len(self.i1)

    @property
    def n(self) -> int:
        return self.n0 + self.n1

    def null_mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[list(self.i0)] = True
        return mask


@dataclass(frozen=True)
class PValueSample:
    values: np.ndarray
    partition: HypothesisPartition

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ConfigurationError("p-values must be a 1-d vector")
        if values.size != self.partition.n:
            raise ConfigurationError(
                f"sample has {values.size} values but partition has n={self.partition.n}"
            )
        if np.any(~(values >= 0.0)) or np.any(~(values <= 1.0)):
            raise ConfigurationError("p-values must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class CriticalSchedule:
    """Nondecreasing critical values ``alphas[0] <= ... <= alphas[n-1]`` in (0, 1).

    ``family`` records which generator produced the values and ``params``
    the generating parameters (``n``, ``alpha``, ``delta``, ``b``).
    """

    alphas: np.ndarray
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        alphas = np.asarray(self.alphas, dtype=float)
        if alphas.ndim != 1 or alphas.size == 0:
            raise ConfigurationError("schedule must be a non-empty 1-d vector")
        if self.family not in SCHEDULE_FAMILIES:
            raise ConfigurationError(f"unknown schedule family {self.family!r}")
        if not (alphas[0] > 0.0 and alphas[-1] < 1.0):
            raise ConfigurationError("critical values must lie in (0, 1)")
        if np.any(np.diff(alphas) < 0):
            raise ConfigurationError("critical values must be nondecreasing")
        alphas.setflags(write=False)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "params", dict(self.params))

    def __len__(self) -> int:
        return self.alphas.size

    @property
    def n(self) -> int:
        return self.alphas.size

    def value_at(self, index: int) -> float:
        """Critical value with 1-based ``index``; index 0 maps to threshold 0."""
        return 0.0 if index == 0 else float(self.alphas[index - 1])


@dataclass(frozen=True)
class ProcedureOutcome:
    tau: float
    tau_index: int
    rejected: np.ndarray
    V: int
    S: int
    R: int
    sigma: Optional[float] = None

    @property
    def fdp(self) -> float:
        """False discovery proportion ``V/R`` with ``0/0 = 0``."""
        return self.V / self.R if self.R else 0.0


def _check_lengths(sample: PValueSample, schedule: CriticalSchedule) -> None:
    if sample.n != schedule.n:
        raise ConfigurationError(
            f"schedule length {schedule.n} does not match sample length {sample.n}"
        )


def step_down_count(sorted_p: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """Step-down rejection index for each row of ``sorted_p``.

    Returns ``max{i : p_(j) <= alpha_j for all j <= i}`` (0 if empty) along
    the last axis. Works on a single sorted vector or a 2-d batch.
    """
    ok = sorted_p <= alphas
    n = ok.shape[-1]
    return np.where(ok.all(axis=-1), n, np.argmin(ok, axis=-1))


def step_up_count(sorted_p: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """Step-up rejection index ``max{i : p_(i) <= alpha_i}`` (0 if empty)."""
    ok = sorted_p <= alphas
    n = ok.shape[-1]
    last = n - np.argmax(ok[..., ::-1], axis=-1)
    return np.where(ok.any(axis=-1), last, 0)


def _outcome(sample, schedule, index, sigma=None) -> ProcedureOutcome:
    index = int(index)
    tau = schedule.value_at(index)
    if index == 0:
        rejected = np.zeros(sample.n, dtype=bool)
    else:
        rejected = sample.values <= tau
    null = sample.partition.null_mask()
    V = int(np.count_nonzero(rejected & null))
    S = int(np.count_nonzero(rejected & ~null))
    rejected.setflags(write=False)
    return ProcedureOutcome(tau=tau, tau_index=index, rejected=rejected,
                            V=V, S=S, R=V + S, sigma=sigma)


def step_down_threshold(sample: PValueSample, schedule: CriticalSchedule) -> ProcedureOutcome:
    """Run the step-down test; the outcome also carries the sigma boundary.

    Examples
    --------
    >>> from stepfdr.schedules import gbs_beta
    >>> part = HypothesisPartition.leading_nulls(2, 1)
    >>> out = step_down_threshold(PValueSample([0.1, 0.9, 0.0], part), gbs_beta(3, 0.25))
    >>> out.tau_index, out.V, out.S
    (2, 1, 1)
    """
    _check_lengths(sample, schedule)
    sorted_p = np.sort(sample.values)
    index = step_down_count(sorted_p, schedule.alphas)
    return _outcome(sample, schedule, index, sigma=_sigma(sorted_p, schedule.alphas))


def step_up_threshold(sample: PValueSample, schedule: CriticalSchedule) -> ProcedureOutcome:
    _check_lengths(sample, schedule)
    index = step_up_count(np.sort(sample.values), schedule.alphas)
    return _outcome(sample, schedule, index)


def _sigma(sorted_p: np.ndarray, alphas: np.ndarray) -> float:
    above = sorted_p > alphas
    if not above.any():
        return float(alphas[-1])
    return float(min(alphas[np.argmax(above)], alphas[-1]))


def sigma_boundary(sample: PValueSample, schedule: CriticalSchedule) -> float:
    """``min{alpha_i : p_(i) > alpha_i}`` capped at ``alpha_n``.

    No p-value falls in ``(tau_SD, sigma]``, so thresholding at sigma gives the
    same rejections as the step-down test.
    """
    _check_lengths(sample, schedule)
    return _sigma(np.sort(sample.values), schedule.alphas)


def fdr_estimator(sample: PValueSample | np.ndarray, t: float) -> float:
    """Conservative FDR estimate at a fixed threshold ``t``.

    ``(t / (1 - t)) * (1 - F(t)) / (F(t) + 1/n)`` with ``F`` the empirical
    distribution function of the p-values.
    """
    if not 0.0 <= t < 1.0:
        raise ConfigurationError(f"t must lie in [0, 1), got {t}")
    values = sample.values if isinstance(sample, PValueSample) else np.asarray(sample, float)
    n = values.size
    ecdf = np.count_nonzero(values <= t) / n
    return (t / (1.0 - t)) * (1.0 - ecdf) / (ecdf + 1.0 / n)
