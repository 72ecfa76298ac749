"""
Step-up versus step-down with the same critical values
======================================================

Under Dirac-uniform configurations (false nulls at 0, true nulls uniform)
the step-up test with ``beta_i`` exceeds the level once the number of true
nulls passes ``f(n) = 2*alpha*(n+1)**2 / (n+3)``, while the step-down test and
its variant with an improved first critical value stay below it.
"""

from stepfdr.exact import f_threshold
from stepfdr.mc import figure1_table

n, alpha = 50, 0.1
print(f"f({n}) = {f_threshold(n, alpha):.3f}")

rows = figure1_table(n, alpha, reps=20_000, seed=0)
print(f"\n{'n0':>3} {'SU exact':>9} {'SU MC':>8} {'SD exact':>9} {'SD MC':>8} {'SD+ exact':>10}")
for r in rows:
    if r["n0"] in (1, 2, 5, 8, 9, 10, 11, 13, 20, 30, 40, 50):
        print(f"{r['n0']:>3} {r['exact_su']:9.5f} {r['fdr_su']:8.5f} {r['exact_sd']:9.5f} "
              f"{r['fdr_sd']:8.5f} {r['exact_sd_improved']:10.5f}")

# Plotting recipe (the library itself does not plot): the same table is
# produced as CSV by ``stepfdr figure1 --out figure1.csv``.
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("\nmatplotlib not installed; skipping the plot")
else:
    n0 = [r["n0"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(n0, [r["exact_su"] for r in rows], color="tab:blue", label="SU")
    ax.plot(n0, [r["exact_sd"] for r in rows], color="tab:green", label="SD")
    ax.plot(n0, [r["exact_sd_improved"] for r in rows], color="m", label="SD, improved c_1")
    ax.axhline(alpha, color="k", lw=0.8, ls="--")
    ax.set_xlabel("number of true nulls n0")
    ax.set_ylabel("FDR")
    ax.legend()
    fig.tight_layout()
    fig.savefig("su_versus_sd.png", dpi=120)
    print("\nwrote su_versus_sd.png")
