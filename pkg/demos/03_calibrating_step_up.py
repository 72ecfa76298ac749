"""
Calibrating the step-up family
==============================

The family ``a_i(delta) = i*alpha / (n + 1 - i*delta)`` interpolates between
a linear step-up test (``delta = 0``) and the ``beta_i`` values
(``delta = 1 - alpha``). Its worst-case FDR over all independent models is
attained at a Dirac-uniform configuration and can be computed exactly, so
the largest admissible ``delta`` (called ``kappa_n``) is found by bisection.
"""

import numpy as np

from stepfdr.calibrate import (asymptotic_limit, convergence_probe, solve_kappa,
                               worst_case_fdr_su)

n, alpha = 50, 0.1
for delta in (0.0, 0.5, 0.8, 0.85):
    fdr, n1 = worst_case_fdr_su(n, alpha, delta)
    print(f"delta = {delta:4.2f}: worst-case FDR {fdr:.6f} (at n1 = {n1})")

res = solve_kappa(n, alpha, tol=1e-8)
print(f"\nkappa_{n} = {res.kappa:.6f} after {res.iterations} bisection steps;"
      f" worst case there {res.worst_case_fdr_at_kappa:.8f}")

# Large-n behaviour: with at most a fraction c of true nulls and a fixed
# delta, the step-up FDR under DU settles at c x / (1 - c + c x), where x
# solves x / (delta x + alpha) = (1 - c) + c x.
c, delta = 0.5, 0.5
x, limit = asymptotic_limit(c, delta, alpha)
print(f"\nlimit for c = {c}, delta = {delta}: x = {x:.6f}, FDR -> {limit:.6f}")
for row in convergence_probe([10, 25, 50, 100, 200], alpha, delta, c):
    print(f"n = {row['n']:>3}: worst case {row['worst_case_fdr']:.5f}, "
          f"DU({row['n'] - row['n0']}) FDR {row['fdr_du']:.5f}, gap {row['gap_du']:.2e}")

# The limit stays below alpha for every c < 1, but approaches it as c -> 1.
cs = np.linspace(0.2, 0.99, 5)
print("\nlimit as a function of c:", np.round([asymptotic_limit(ci, delta, alpha)[1] for ci in cs], 5))
