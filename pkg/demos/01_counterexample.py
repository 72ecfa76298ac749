"""
A step-down test that breaks the FDR level under dependence
===========================================================

The critical values ``beta_i = i*alpha / (n + 1 - i*(1 - alpha))`` control
the FDR of step-down tests when the p-values are independent. This script
builds a dependent three-hypothesis example whose FDR is ``4/15 > 1/4``.
"""

import numpy as np

from stepfdr import gbs_beta, step_down_threshold
from stepfdr.mc import ProcedureSpec, ScenarioConfig, ScheduleSpec, run
from stepfdr.models import ScenarioSpec, sample

alpha = 0.25
beta = gbs_beta(3, alpha)
print("critical values:", beta.alphas.round(4))  # 1/13, 1/5, 3/7

# The construction: one false null with p = 0, and two true nulls U1, U2 that
# are both uniform but coupled so that they always fall below 2*beta_2
# together. Whenever that happens, both are rejected alongside the zero.
spec = ScenarioSpec("example1-counter", n=3, n0=2, alpha=alpha)
rng = np.random.default_rng(1)
for _ in range(5):
    draw = sample(spec, rng)
    out = step_down_threshold(draw, beta)
    print(f"p = {draw.values.round(3)}  ->  R = {out.R}, V = {out.V}, FDP = {out.fdp:.3f}")

# The FDP is 2/3 with probability 2*beta_2 = 0.4 and 0 otherwise, so
# FDR = 0.4 * 2/3 = 4/15. Monte Carlo agrees:
config = ScenarioConfig(spec, ProcedureSpec("SD"), ScheduleSpec("gbs-beta", alpha),
                        reps=1_000_000, seed=2024, estimands=("fdr",))
est = run(config)["fdr"]
print(f"\nMonte Carlo FDR = {est.mean:.5f} +/- {est.se:.5f}   (4/15 = {4 / 15:.5f})")
print(f"excess over the level 1/4: {(est.mean - 0.25) / est.se:.1f} standard errors")
