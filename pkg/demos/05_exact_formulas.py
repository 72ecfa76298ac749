"""
Exact rejection-count laws
==========================

For ``m`` independent uniform p-values the number of rejections of a
step-down or step-up test has an exact law, computed here by a dynamic
program over ``N_j = #{p_i <= c_j}``. It gives exact FDR and ENFR values
under Dirac-uniform configurations and checks closed-form identities.
"""

import numpy as np

from stepfdr import gbs_beta
from stepfdr.exact import (du_shifted_pmf, enfr_dm_identity, enfr_uniform_identity,
                           exact_rejection_pmf, fdr_from_pmf)

c = [0.1, 0.5]
print("m = 2, thresholds", c)
print("  step-down:", exact_rejection_pmf(2, c, "SD").probs.round(4))
print("  step-up:  ", exact_rejection_pmf(2, c, "SU").probs.round(4))

n, n1, alpha = 50, 10, 0.1
beta = gbs_beta(n, alpha)
pmf = du_shifted_pmf(n, n1, beta, "SD")
print(f"\nDU({n1}), n = {n}: E[V] = {pmf.mean():.12f}")
print(f"closed form            {enfr_dm_identity(n, n1, alpha, pmf.probs[-1]):.12f}")
print(f"FDR = {fdr_from_pmf(pmf, n1):.6f}")

# With every p-value uniform, E[V] = n0/n * E[R] by exchangeability.
full = exact_rejection_pmf(n, beta.alphas, "SD")
for n0 in (10, 40, 50):
    print(f"all uniform, n0 = {n0}: E[V] = {n0 / n * full.mean():.10f}"
          f" = {enfr_uniform_identity(n, alpha, full.probs[-1], n0):.10f}")

# Step-up rejects at least as much as step-down: its CDF lies below.
sd, su = (exact_rejection_pmf(30, gbs_beta(30, 0.2).alphas, m).cdf() for m in ("SD", "SU"))
print("\nSU CDF <= SD CDF everywhere:", bool(np.all(su <= sd + 1e-12)))
