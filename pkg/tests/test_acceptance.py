"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``ACCEPTANCE <n>: PASS|FAIL`` line; the lines are
repeated in the terminal summary.
"""
import dataclasses
import math

import numpy as np

from stepfdr.calibrate import asymptotic_limit, convergence_probe, solve_kappa, worst_case_fdr_su
from stepfdr.cli import main
from stepfdr.exact import (du_shifted_pmf, enfr_dm_identity, enfr_uniform_identity,
                           exact_rejection_pmf, f_threshold)
from stepfdr.identities import decomposition_fuzz
from stepfdr.mc import ProcedureSpec, ScenarioConfig, ScheduleSpec, figure1_table, run
from stepfdr.models import ScenarioSpec
from stepfdr.schedules import gbs_beta

BETA_HALF = {"law": "beta", "a": 0.5, "b": 1.0}


def _config(model, n, n0, kind="SD", alpha=0.1, reps=1_000_000, seed=0, estimands=("fdr",),
            alternative=None, procedure=None, scenario_alpha=None):
    scenario = ScenarioSpec(model, n, n0, alternative=alternative or {"law": "zero"},
                            alpha=scenario_alpha or 0.25)
    return ScenarioConfig(scenario, ProcedureSpec(kind, **(procedure or {})),
                          ScheduleSpec("gbs-beta", alpha), reps=reps, seed=seed,
                          estimands=estimands)


def test_criterion_01_example1_counterexample(acceptance):
    cfg = _config("example1-counter", 3, 2, alpha=0.25, scenario_alpha=0.25, seed=2024)
    est = run(cfg)["fdr"]
    ok = abs(est.mean - 4 / 15) <= 0.002 and est.mean - 0.25 > 3 * est.se
    acceptance(1, ok, f"FDR {est.mean:.5f} (se {est.se:.5f}) vs 4/15 = {4 / 15:.5f}; "
                      f"excess over 1/4 = {(est.mean - 0.25) / est.se:.1f} SE")


def test_criterion_02_f50(acceptance):
    f = f_threshold(50, 0.1)
    acceptance(2, 9.81 <= f <= 9.82 and round(f, 1) == 9.8, f"f(50) = {f:.6f}")


def test_criterion_03_figure1(acceptance):
    rows = figure1_table(50, 0.1, reps=100_000, seed=0)
    su_ok = all(r["exact_su"] >= 0.1 for r in rows if r["n0"] >= 10)
    su_strict = all(r["exact_su"] > 0.1 for r in rows if r["n0"] >= 11)
    sd_ok = all(r["fdr_sd"] <= 0.1 + 3 * r["se_sd"] for r in rows)
    imp_ok = all(r["fdr_sd_improved"] <= 0.1 + 3 * r["se_sd_improved"] for r in rows)
    min_su = min(r["exact_su"] for r in rows if r["n0"] >= 10)
    max_sd = max((r["fdr_sd"] - 0.1) / r["se_sd"] for r in rows if r["se_sd"] > 0)
    max_imp = max((r["fdr_sd_improved"] - 0.1) / r["se_sd_improved"] for r in rows
                  if r["se_sd_improved"] > 0)
    acceptance(3, su_ok and su_strict and sd_ok and imp_ok,
               f"min exact SU FDR for n0>=10: {min_su:.5f}; largest (FDR-0.1)/SE: "
               f"SD {max_sd:.2f}, improved SD {max_imp:.2f}")


def test_criterion_04_decomposition(acceptance):
    check = decomposition_fuzz(10_000, seed=4)
    acceptance(4, check.residual <= 1e-12, f"max residual {check.residual:.3g} over 10^4 samples")


def _mc_pmf(m, c, reps, seed, chunk=200_000):
    rng = np.random.default_rng(seed)
    counts = {"SD": np.zeros(m + 1, np.int64), "SU": np.zeros(m + 1, np.int64)}
    for start in range(0, reps, chunk):
        p = np.sort(rng.random((min(chunk, reps - start), m)), axis=1)
        ok = p <= c
        sd = np.where(ok.all(1), m, np.argmin(ok, 1))
        su = np.where(ok.any(1), m - np.argmax(ok[:, ::-1], 1), 0)
        counts["SD"] += np.bincount(sd, minlength=m + 1)
        counts["SU"] += np.bincount(su, minlength=m + 1)
    return counts


def test_criterion_05_exact_pmf(acceptance):
    worst_closed = 0.0
    for c1, c2 in ((0.1, 0.5), (0.02, 0.3), (0.45, 0.46)):
        for mode in ("SD", "SU"):
            p1 = exact_rejection_pmf(1, [c1], mode).probs
            worst_closed = max(worst_closed, abs(p1[1] - c1), abs(p1[0] - 1 + c1))
        su = exact_rejection_pmf(2, [c1, c2], "SU").probs
        sd = exact_rejection_pmf(2, [c1, c2], "SD").probs
        worst_closed = max(worst_closed, abs(su[2] - c2**2), abs(su[1] - 2 * c1 * (1 - c2)),
                           abs(sd[2] - (2 * c1 * c2 - c1**2)), abs(sd[1] - 2 * c1 * (1 - c2)))
    reps = 10_000_000
    worst_z = 0.0
    for m in (5, 20, 50):
        c = gbs_beta(m, 0.25).alphas
        counts = _mc_pmf(m, c, reps, seed=m)
        for mode in ("SD", "SU"):
            exact = exact_rejection_pmf(m, c, mode).probs
            se = np.sqrt(exact * (1 - exact) / reps)
            diff = np.abs(counts[mode] / reps - exact)
            z = np.where(se > 0, diff / np.where(se > 0, se, 1), np.where(diff > 0, np.inf, 0))
            worst_z = max(worst_z, float(z.max()))
    acceptance(5, worst_closed <= 1e-12 and worst_z <= 4,
               f"closed forms max error {worst_closed:.2g}; 10^7-draw oracle max |z| {worst_z:.2f}")


def test_criterion_06_enfr_identities(acceptance):
    z_all, details = [], []
    for n, n1, alpha in ((3, 1, 0.25), (50, 10, 0.1)):
        pmf = du_shifted_pmf(n, n1, gbs_beta(n, alpha), "SD")
        e1 = enfr_dm_identity(n, n1, alpha, pmf.probs[-1])
        est = run(_config("du", n, n - n1, alpha=alpha, estimands=("enfr",), seed=61))["enfr"]
        z_all.append((est.mean - e1) / est.se)
        details.append(f"E1({n},{n1}) z={z_all[-1]:.2f}")
    for n in (10, 50):
        pmf = exact_rejection_pmf(n, gbs_beta(n, 0.1).alphas, "SD")
        e2 = enfr_uniform_identity(n, 0.1, pmf.probs[-1], n)
        est = run(_config("bia-uniform", n, n, estimands=("enfr",), seed=62))["enfr"]
        z_all.append((est.mean - e2) / est.se)
        details.append(f"E2({n}) z={z_all[-1]:.2f}")
    # ordering under an alternative with P(p <= t) >= t
    n, n1, alpha = 50, 10, 0.1
    e1 = du_shifted_pmf(n, n1, gbs_beta(n, alpha), "SD").mean()
    p_all = exact_rejection_pmf(n, gbs_beta(n, alpha).alphas, "SD").probs[-1]
    e2 = enfr_uniform_identity(n, alpha, p_all, n - n1)
    est = run(_config("bia-uniform", n, n - n1, estimands=("enfr",), alternative=BETA_HALF,
                      seed=63))["enfr"]
    ordered = e2 <= est.mean + 3 * est.se and est.mean <= e1 + 3 * est.se
    ok = all(abs(z) <= 3 for z in z_all) and ordered
    acceptance(6, ok, "; ".join(details) +
               f"; ordering {e2:.4f} <= {est.mean:.4f} (se {est.se:.4f}) <= {e1:.4f}")


def test_criterion_07_sufficient_conditions(acceptance):
    n, alpha = 50, 0.1
    ok, worst_enfr, worst_ratio = True, -np.inf, -np.inf
    for model in ("bia-uniform", "marshall-olkin-min"):
        for n0 in (25, 40, 50):
            rep = run(_config(model, n, n0, reps=200_000, seed=70 + n0,
                              estimands=("enfr", "v_over_beta_r")))
            enfr, ratio = rep["enfr"], rep["v_over_beta_r"]
            bound = alpha * (n - n0 + 1) / (1 - alpha)
            ok &= enfr.mean <= bound + 3 * enfr.se and ratio.mean <= n0 + 3 * ratio.se
            worst_enfr = max(worst_enfr, (enfr.mean - bound) / enfr.se)
            worst_ratio = max(worst_ratio, (ratio.mean - n0) / ratio.se)
    acceptance(7, ok, f"largest (ENFR - bound)/SE {worst_enfr:.2f}; "
                      f"largest (E[V/beta_R] - n0)/SE {worst_ratio:.2f}")


def test_criterion_08_floored_step_up(acceptance):
    n = 20
    a1 = gbs_beta(n, 0.1).alphas[0]
    zs = []
    for n0 in (10, 20):
        cfg = _config("bia-uniform", n, n0, kind="SU-truncated", procedure={"k": n, "eta": a1},
                      estimands=("v_over_tau",), alternative=BETA_HALF, seed=80 + n0)
        est = run(cfg)["v_over_tau"]
        zs.append((est.mean - n0) / est.se)
    acceptance(8, all(abs(z) <= 3 for z in zs),
               f"(E[V/tau] - n0)/SE = {zs[0]:.2f} (n0=10), {zs[1]:.2f} (n0=20)")


def test_criterion_09_kappa(acceptance):
    res = solve_kappa(50, 0.1, 1e-4)
    ok = abs(res.worst_case_fdr_at_kappa - 0.1) <= 1e-4
    probes = []
    for offset, below in ((-0.05, True), (0.05, False)):
        delta = res.kappa + offset
        if 0 < delta < 0.9:
            wc = worst_case_fdr_su(50, 0.1, delta)[0]
            ok &= (wc < 0.1) if below else (wc > 0.1)
            probes.append(f"{wc:.6f}")
    acceptance(9, ok, f"kappa {res.kappa:.6f} with worst case {res.worst_case_fdr_at_kappa:.6f}; "
                      f"probes at -/+0.05: {', '.join(probes)}")


def test_criterion_10_asymptotics(acceptance):
    alpha = 0.1
    worst = 0.0
    for c in np.linspace(alpha + 0.01, 0.99, 20):
        for d in np.linspace(0.01, 1 - alpha - 0.01, 20):
            x, _ = asymptotic_limit(c, d, alpha)
            worst = max(worst, abs(x / (d * x + alpha) - (1 - c) - c * x))
    rows = convergence_probe([50, 100, 200, 400], alpha, 0.5, 0.5, worst_case=False)
    assert all(r["n0"] == math.ceil(0.5 * r["n"]) for r in rows)
    gaps = [r["gap_du"] for r in rows]
    monotone = all(b < a for a, b in zip(gaps, gaps[1:]))
    acceptance(10, worst <= 1e-10 and monotone and gaps[-1] < 0.01,
               f"max residual {worst:.2g}; gaps {', '.join(f'{g:.2e}' for g in gaps)}")


CONFIG = """
[scenario]
model = "marshall-olkin-min"
n = 50
n0 = 40

[procedure]
kind = "SD"

[schedule]
family = "gbs-beta"
alpha = 0.1

[run]
reps = 50000
seed = 11
estimands = ["fdr", "enfr", "v_over_beta_r", "v_over_s1", "power"]
"""


def test_criterion_11_reproducibility(acceptance, tmp_path):
    cfg_path = tmp_path / "scenario.toml"
    cfg_path.write_text(CONFIG)
    jobs = {
        "run": ["run", str(cfg_path)],
        "sweep": ["sweep", str(cfg_path), "--axis", "n0", "--values", "25,50"],
        "figure1": ["figure1", "--n", "10", "--reps", "20000"],
        "calibrate": ["calibrate", "--n", "20", "--alpha", "0.1", "--tol", "1e-4"],
        "crit": ["crit", "--family", "su-delta", "--n", "30", "--alpha", "0.1", "--delta", "0.5"],
    }
    ok, checked = True, 0
    for name, argv in jobs.items():
        out = tmp_path / f"{name}.csv"
        ok &= main(argv + ["--out", str(out)]) == 0
        for threads in (1, 4, 8):
            again = tmp_path / f"{name}-{threads}.csv"
            code = main(["run", str(tmp_path / f"{name}.csv.manifest.toml"), "--out", str(again),
                         "--threads", str(threads)])
            ok &= code == 0 and again.read_bytes() == out.read_bytes()
            checked += 1
    acceptance(11, ok, f"{checked} manifest replays byte-identical across 1, 4, 8 threads")
