"""Exact finite-sample quantities for step-down and step-up tests.

The rejection-count law for ``m`` i.i.d. uniform p-values is computed by a
dynamic program over the counting process ``N_j = #{p_i <= c_j}``. Given
``N_j = s`` the increment ``N_{j+1} - N_j`` is Binomial(m - s, q_j) with
``q_j = (c_{j+1} - c_j) / (1 - c_j)``, so the process is a Markov chain in
``j`` and both stopping rules are first-passage events of that chain.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .core import ConfigurationError, CriticalSchedule, ProcedureOutcome
from .schedules import gbs_beta

__all__ = [
    "RejectionPmf",
    "exact_rejection_pmf",
    "du_shifted_pmf",
    "fdr_from_pmf",
    "enfr_dm_identity",
    "enfr_uniform_identity",
    "fdr_decomposition_check",
    "f_threshold",
    "Lemma1Report",
    "lemma1_bounds",
]

MODES = ("SD", "SU")


@dataclass(frozen=True)
class RejectionPmf:
    """Probability of each count ``0..m``; ``probs[k] = P(count = k)``."""

    probs: np.ndarray
    mode: str
    thresholds: np.ndarray

    @property
    def m(self) -> int:
        return self.probs.size - 1

    def mean(self) -> float:
        return float(np.dot(np.arange(self.probs.size), self.probs))

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)


def _check_thresholds(m, thresholds, mode):
    c = np.asarray(thresholds, dtype=float)
    if mode not in MODES:
        raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")
    if int(m) != m or m < 1 or c.shape != (m,):
        raise ConfigurationError(f"need m >= 1 thresholds, got m={m} and shape {c.shape}")
    if not (c[0] > 0.0 and c[-1] < 1.0) or np.any(np.diff(c) < 0):
        raise ConfigurationError("thresholds must be nondecreasing in (0, 1)")
    return int(m), c


class _Transitions:
    """Binomial transition matrices ``T[s, s'] = P(N_{j+1} = s' | N_j = s)``."""

    def __init__(self, m):
        self.m = m
        self.lg = gammaln(np.arange(m + 1) + 1.0)  # log(i!)
        s = np.arange(m + 1)
        self.trials = (m - s)[:, None]
        self.succ = s[None, :] - s[:, None]
        self.valid = (self.succ >= 0) & (self.succ <= self.trials)
        x = np.where(self.valid, self.succ, 0)
        k = np.where(self.valid, self.trials, 0)
        self.x, self.rest = x, k - x
        self.logc = np.where(self.valid, self.lg[k] - self.lg[x] - self.lg[k - x], -np.inf)

    def matrix(self, q):
        if q <= 0.0:
            return np.eye(self.m + 1)
        logp = self.logc + self.x * np.log(q) + self.rest * np.log1p(-q)
        return np.exp(logp)


def _steps(c):
    prev = np.concatenate([[0.0], c[:-1]])
    return (c - prev) / (1.0 - prev)


def exact_rejection_pmf(m: int, thresholds, mode: str = "SD") -> RejectionPmf:
    """Exact law of the SD or SU rejection count for ``m`` i.i.d. U(0, 1) p-values.

    Runs in ``O(m**3)`` time.

    Examples
    --------
    >>> exact_rejection_pmf(2, [0.1, 0.5], "SU").probs.round(6)
    array([0.65, 0.1 , 0.25])
    """
    m, c = _check_thresholds(m, thresholds, mode)
    trans = _Transitions(m)
    q = _steps(c)
    probs = np.zeros(m + 1)
    if mode == "SD":
        # forward pass over P(N_j = s, N_i >= i for all i <= j)
        f = np.zeros(m + 1)
        f[0] = 1.0
        for j in range(1, m + 1):
            g = f @ trans.matrix(q[j - 1])
            probs[j - 1] = g[:j].sum()
            g[:j] = 0.0
            f = g
        probs[m] = f.sum()
    else:
        # backward pass over h_j(s) = P(N_l < l for all l > j | N_j = s)
        h = np.ones(m + 1)
        hs = [None] * (m + 1)
        hs[m] = h
        for j in range(m - 1, -1, -1):
            nxt = np.where(np.arange(m + 1) < j + 1, h, 0.0)
            h = trans.matrix(q[j]) @ nxt
            hs[j] = h
        probs[0] = hs[0][0]
        s = np.arange(m + 1)
        for k in range(1, m + 1):
            marg = stats.binom.pmf(s[k:], m, c[k - 1])
            probs[k] = np.dot(marg, hs[k][k:])
    probs = np.clip(probs, 0.0, None)
    probs.setflags(write=False)
    c.setflags(write=False)
    return RejectionPmf(probs, mode, c)


def du_shifted_pmf(n: int, n1: int, schedule: CriticalSchedule, mode: str = "SD") -> RejectionPmf:
    """Law of ``V`` under the Dirac-uniform configuration DU(n1).

    The ``n1`` zeros take ranks ``1..n1`` and are always rejected, so the
    remaining ``n0`` uniforms face thresholds ``alpha_{n1+1}, ..., alpha_n``.
    """
    if schedule.n != n:
        raise ConfigurationError(f"schedule length {schedule.n} does not match n={n}")
    if not 0 <= n1 < n:
        raise ConfigurationError(f"need 0 <= n1 < n, got n1={n1}")
    return exact_rejection_pmf(n - n1, schedule.alphas[n1:], mode)


def fdr_from_pmf(pmf, n1: int) -> float:
    """``sum_k P(V = k) * k / (n1 + k)`` with the ``0/0 = 0`` convention."""
    probs = pmf.probs if isinstance(pmf, RejectionPmf) else np.asarray(pmf, float)
    k = np.arange(probs.size)
    denom = n1 + k
    ratio = np.divide(k, denom, out=np.zeros(k.size), where=denom > 0)
    return float(np.dot(probs, ratio))


def enfr_dm_identity(n: int, n1: int, alpha: float, p_reject_all: float) -> float:
    """Expected false rejections of SD/beta under a Dirac martingale configuration.

    ``E[V] = alpha/(1-alpha) * (n1 + 1) - alpha/(1-alpha) * (n + 1) * P(V = n0)``;
    ``p_reject_all`` is ``P(V = n0)``.
    """
    if not 0.0 <= p_reject_all <= 1.0:
        raise ConfigurationError("p_reject_all must lie in [0, 1]")
    k = alpha / (1.0 - alpha)
    return k * (n1 + 1) - k * (n + 1) * p_reject_all


def enfr_uniform_identity(n: int, alpha: float, p_reject_everything: float,
                          n0: int | None = None) -> float:
    """Expected false rejections of SD/beta when every p-value is U(0, 1).

    By exchangeability ``E[V] = n0/n * E[R]``, and ``E[R]`` follows from the
    Dirac martingale identity with ``n1 = 0``, so

    ``E[V] = n0/n * alpha/(1-alpha) * (1 - (n+1) * P(R = n))``.

    For ``n0 = 1`` this is ``alpha/(1-alpha) * (1/n - (n+1)/n * P(R = n))``.
    ``n0`` defaults to ``n``.
    """
    if not 0.0 <= p_reject_everything <= 1.0:
        raise ConfigurationError("p_reject_everything must lie in [0, 1]")
    n0 = n if n0 is None else n0
    if not 0 <= n0 <= n:
        raise ConfigurationError(f"need 0 <= n0 <= n, got n0={n0}")
    k = alpha / (1.0 - alpha)
    return n0 / n * k * (1.0 - (n + 1) * p_reject_everything)


def fdr_decomposition_check(outcome: ProcedureOutcome, n: int, alpha: float,
                            delta: float | None = None, b: float | None = None) -> float:
    """Per-sample residual of the FDR decomposition for rejection-curve schedules.

    Returns ``V/R - [alpha/(n b) * V/tau + delta/(n b) * V]`` where ``tau`` is
    the critical value the procedure stopped at. With the defaults
    ``b = (n+1)/n`` and ``delta = 1 - alpha`` this is the decomposition for
    the beta critical values, and the residual vanishes up to rounding
    whenever ``tau`` really is ``beta_R``. Returns 0 when ``R = 0``.
    """
    if outcome.rejected.size != n:
        raise ConfigurationError(f"outcome has {outcome.rejected.size} hypotheses, expected n={n}")
    if outcome.R == 0:
        return 0.0
    if not outcome.tau > 0:
        raise ConfigurationError("outcome with rejections must have a positive threshold")
    delta = 1.0 - alpha if delta is None else delta
    nb = n + 1.0 if b is None else n * b
    V, R = outcome.V, outcome.R
    return V / R - (alpha / nb * V / outcome.tau + delta / nb * V)


def f_threshold(n: int, alpha: float) -> float:
    """``2*alpha*(n+1)**2 / (n+3)``: beyond this many true nulls the SU/beta
    test has FDR at least ``alpha`` under Dirac configurations."""
    if n < 1:
        raise ConfigurationError("n must be positive")
    return 2.0 * alpha * (n + 1) ** 2 / (n + 3)


@dataclass(frozen=True)
class Lemma1Report:
    """Sufficient conditions for FDR control, checked against MC estimates.

    ``ratio_*`` refers to ``E[V/beta_R] <= n0`` and ``enfr_*`` to
    ``E[V] <= alpha (n1 + 1) / (1 - alpha)``. A condition holds when the
    estimate is below its bound plus ``z`` standard errors.
    """

    ratio_estimate: float
    ratio_se: float
    ratio_bound: float
    enfr_estimate: float
    enfr_se: float
    enfr_bound: float
    z: float

    @property
    def ratio_margin(self) -> float:
        return self.ratio_bound - self.ratio_estimate

    @property
    def enfr_margin(self) -> float:
        return self.enfr_bound - self.enfr_estimate

    @property
    def ratio_holds(self) -> bool:
        return self.ratio_estimate <= self.ratio_bound + self.z * self.ratio_se

    @property
    def enfr_holds(self) -> bool:
        return self.enfr_estimate <= self.enfr_bound + self.z * self.enfr_se

    @property
    def enfr_violated(self) -> bool:
        """Estimate exceeds the ENFR bound by more than ``z`` standard errors."""
        return self.enfr_estimate > self.enfr_bound + self.z * self.enfr_se


def lemma1_bounds(ratio_estimate, ratio_se, enfr_estimate, enfr_se, n0, n1, alpha,
                  z: float = 3.0) -> Lemma1Report:
    return Lemma1Report(
        ratio_estimate=float(ratio_estimate), ratio_se=float(ratio_se), ratio_bound=float(n0),
        enfr_estimate=float(enfr_estimate), enfr_se=float(enfr_se),
        enfr_bound=alpha * (n1 + 1) / (1.0 - alpha), z=float(z),
    )


def beta_at(n: int, alpha: float, index) -> np.ndarray:
    """``beta_R`` for integer array ``index`` (0 where ``index == 0``)."""
    betas = np.concatenate([[0.0], gbs_beta(n, alpha).alphas])
    return betas[np.asarray(index)]
