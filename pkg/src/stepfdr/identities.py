"""Self-checks of the algebraic identities and exact formulas.

:func:`run_suite` returns one :class:`Check` per identity. Algebraic checks
compare to a fixed absolute tolerance; Monte Carlo checks report a z-score
and pass when it is at most 3 in absolute value.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (CriticalSchedule, HypothesisPartition, PValueSample, fdr_estimator,
                   sigma_boundary, step_down_threshold, step_up_threshold)
from .exact import (du_shifted_pmf, enfr_dm_identity, enfr_uniform_identity,
                    exact_rejection_pmf, f_threshold, fdr_decomposition_check)
from .mc import ProcedureSpec, ScenarioConfig, ScheduleSpec, run
from .models import ScenarioSpec
from .schedules import gbs_beta

__all__ = ["Check", "run_suite", "perturbed_beta"]


@dataclass(frozen=True)
class Check:
    identity: str
    scenario: str
    lhs: float
    rhs: float
    residual: float
    passed: bool

    def row(self):
        return (self.identity, self.scenario, float(self.lhs), float(self.rhs),
                float(self.residual), bool(self.passed))


def perturbed_beta(n, alpha, index=None, eps=0.0) -> CriticalSchedule:
    """``gbs_beta(n, alpha)`` with the 1-based ``index`` entry shifted by ``eps``."""
    sched = gbs_beta(n, alpha)
    if index is None or eps == 0.0 or index > n:
        return sched
    vals = sched.alphas.copy()
    vals[index - 1] += eps
    return CriticalSchedule(np.maximum.accumulate(vals), "custom", dict(sched.params))


def _fuzz_samples(rng, count, max_n=50):
    for _ in range(count):
        n = int(rng.integers(1, max_n + 1))
        n0 = int(rng.integers(1, n + 1))
        nulls = rng.random(n0)
        alts = rng.beta(0.1, 1.0, n - n0)
        yield n, PValueSample(np.concatenate([nulls, alts]),
                              HypothesisPartition.leading_nulls(n0, n - n0))


def decomposition_fuzz(samples=10_000, seed=0, alpha=0.1, perturb=None) -> Check:
    """Largest per-sample residual of the beta decomposition of V/R (SD and SU)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n, smp in _fuzz_samples(rng, samples):
        sched = perturbed_beta(n, alpha, *(perturb or (None, 0.0)))
        for proc in (step_down_threshold, step_up_threshold):
            worst = max(worst, abs(fdr_decomposition_check(proc(smp, sched), n, alpha)))
    return Check("fdr-decomposition", f"fuzz {samples} samples n<=50 alpha={alpha}",
                 worst, 0.0, worst, worst <= 1e-12)


def estimator_fuzz(samples=2_000, seed=1, alpha=0.1) -> list[Check]:
    """Equivalences between the FDR estimator at beta_i and rejection counts,
    plus the sigma characterisations, on random samples."""
    rng = np.random.default_rng(seed)
    bad_le = bad_eq = bad_sigma = bad_at_sigma = bad_sd_sigma = 0
    for n, smp in _fuzz_samples(rng, samples):
        sched = gbs_beta(n, alpha)
        b = sched.alphas
        est = np.array([fdr_estimator(smp, t) for t in b])
        counts = np.array([np.count_nonzero(smp.values <= t) for t in b])
        i = np.arange(1, n + 1)
        closed = alpha * (i / (n + 1 - i)) * ((n - counts) / (counts + 1))
        # compare through the closed form to keep float noise out of the iff
        bad_le += np.count_nonzero(~np.isclose(est, closed, rtol=1e-12, atol=1e-15))
        bad_le += np.count_nonzero((closed <= alpha * (1 + 1e-12)) != (counts >= i - 1))
        bad_eq += np.count_nonzero(np.isclose(closed, alpha, rtol=1e-12) != (counts == i - 1))
        sigma = sigma_boundary(smp, sched)
        hit = np.flatnonzero(est >= alpha * (1 - 1e-12))
        sigma_alt = min(b[hit[0]], b[-1]) if hit.size else b[-1]
        bad_sigma += sigma != sigma_alt
        r_sigma = np.count_nonzero(smp.values <= sigma)
        expect = alpha if r_sigma < n else 0.0
        bad_at_sigma += not np.isclose(fdr_estimator(smp, sigma), expect, rtol=1e-12, atol=1e-15)
        sd = step_down_threshold(smp, sched)
        bad_sd_sigma += not (sd.tau <= sigma and sd.R == r_sigma)
    scen = f"fuzz {samples} samples n<=50 alpha={alpha}"
    return [
        Check("estimator-le-iff", scen, bad_le, 0, bad_le, bad_le == 0),
        Check("estimator-eq-iff", scen, bad_eq, 0, bad_eq, bad_eq == 0),
        Check("sigma-via-estimator", scen, bad_sigma, 0, bad_sigma, bad_sigma == 0),
        Check("estimator-at-sigma", scen, bad_at_sigma, 0, bad_at_sigma, bad_at_sigma == 0),
        Check("sd-equals-sigma-test", scen, bad_sd_sigma, 0, bad_sd_sigma, bad_sd_sigma == 0),
    ]


def _mc_check(name, scenario, estimate, exact):
    z = (estimate.mean - exact) / estimate.se if estimate.se > 0 else (
        0.0 if estimate.mean == exact else np.inf)
    return Check(name, scenario, estimate.mean, exact, z, abs(z) <= 3.0)


def pmf_closed_forms() -> list[Check]:
    c1, c2 = 0.07, 0.35
    out = []
    for mode in ("SD", "SU"):
        p = exact_rejection_pmf(1, [c1], mode).probs
        err = abs(p[1] - c1) + abs(p[0] - (1 - c1))
        out.append(Check("pmf-m1", mode, p[1], c1, err, err <= 1e-12))
    su = exact_rejection_pmf(2, [c1, c2], "SU").probs
    sd = exact_rejection_pmf(2, [c1, c2], "SD").probs
    err_su = abs(su[2] - c2**2) + abs(su[1] - 2 * c1 * (1 - c2))
    err_sd = abs(sd[2] - (2 * c1 * c2 - c1**2)) + abs(sd[1] - 2 * c1 * (1 - c2))
    out.append(Check("pmf-m2", "SU", su[2], c2**2, err_su, err_su <= 1e-12))
    out.append(Check("pmf-m2", "SD", sd[2], 2 * c1 * c2 - c1**2, err_sd, err_sd <= 1e-12))
    return out


def enfr_checks(reps=100_000, seed=0) -> list[Check]:
    out = []
    for n, n1, alpha in ((3, 1, 0.25), (50, 10, 0.1)):
        pmf = du_shifted_pmf(n, n1, gbs_beta(n, alpha), "SD")
        ev = pmf.mean()
        formula = enfr_dm_identity(n, n1, alpha, pmf.probs[-1])
        scen = f"du n={n} n1={n1} alpha={alpha}"
        out.append(Check("enfr-dm-exact", scen, ev, formula, ev - formula,
                         abs(ev - formula) <= 1e-10))
        cfg = ScenarioConfig(ScenarioSpec("du", n, n - n1), ProcedureSpec("SD"),
                             ScheduleSpec("gbs-beta", alpha), reps=reps, seed=seed,
                             estimands=("enfr",))
        out.append(_mc_check("enfr-dm-mc", scen, run(cfg)["enfr"], ev))
    for n, alpha in ((10, 0.1), (50, 0.1)):
        pmf = exact_rejection_pmf(n, gbs_beta(n, alpha).alphas, "SD")
        ev = pmf.mean()
        formula = enfr_uniform_identity(n, alpha, pmf.probs[-1])
        scen = f"all-uniform n={n} alpha={alpha}"
        out.append(Check("enfr-uniform-exact", scen, ev, formula, ev - formula,
                         abs(ev - formula) <= 1e-10))
        cfg = ScenarioConfig(ScenarioSpec("bia-uniform", n, n), ProcedureSpec("SD"),
                             ScheduleSpec("gbs-beta", alpha), reps=reps, seed=seed,
                             estimands=("enfr",))
        out.append(_mc_check("enfr-uniform-mc", scen, run(cfg)["enfr"], ev))
    return out


def run_suite(reps: int = 100_000, seed: int = 0, fuzz: int = 10_000,
              perturb: tuple | None = None) -> list[Check]:
    """Default identity suite.

    ``perturb=(index, eps)`` shifts one beta critical value in the
    decomposition fuzz, which must then fail.
    """
    checks = [decomposition_fuzz(fuzz, seed, perturb=perturb)]
    checks += estimator_fuzz(max(fuzz // 5, 1), seed + 1)
    checks += pmf_closed_forms()
    checks += enfr_checks(reps, seed)
    f50 = f_threshold(50, 0.1)
    checks.append(Check("f-threshold", "n=50 alpha=0.1", f50, 9.8, f50 - 9.8,
                        round(f50, 1) == 9.8))
    cfg = ScenarioConfig(ScenarioSpec("example1-counter", 3, 2), ProcedureSpec("SD"),
                         ScheduleSpec("gbs-beta", 0.25), reps=reps, seed=seed,
                         estimands=("fdr",))
    checks.append(_mc_check("example1-fdr", "example1-counter alpha=0.25",
                            run(cfg)["fdr"], 4 / 15))
    return checks
