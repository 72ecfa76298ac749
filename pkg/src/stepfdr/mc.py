"""Seeded, reproducible Monte Carlo engine.

Replications are grouped in fixed blocks of :data:`stepfdr._streams.BLOCK_SIZE`
with one counter-derived random stream per block, so any number of worker
threads produces bitwise-identical reports. Per-replication summands are
concatenated in block order before reduction.
"""
from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _streams
from .core import ConfigurationError, CriticalSchedule, step_down_count, step_up_count
from .exact import du_shifted_pmf, fdr_from_pmf
from .models import ScenarioSpec, sample_batch
from .schedules import gbs_beta, improve_first, make_schedule

__all__ = [
    "ESTIMANDS",
    "ProcedureSpec",
    "ScheduleSpec",
    "ScenarioConfig",
    "Estimate",
    "SimulationReport",
    "simulate",
    "run",
    "sweep",
    "sweep_rows",
    "figure1_table",
]

# column name -> description
ESTIMANDS = {
    "fdr": "E[V/R] with 0/0 = 0",
    "enfr": "E[V]",
    "v_over_tau": "E[V/tau] with summand 0 when tau = 0",
    "v_over_beta_r": "E[V/beta_R] with summand 0 when R = 0",
    "v_over_s1": "E[V/(S+1)]",
    "power": "E[S]/n1",
    "mean_r": "E[R]",
    "p_all_nulls_rejected": "P(V = n0)",
    "p_all_rejected": "P(R = n)",
}
_ALIASES = {
    "FDR": "fdr", "ENFR": "enfr", "E[V/tau]": "v_over_tau", "E[V/τ]": "v_over_tau",
    "E[V/beta_R]": "v_over_beta_r", "E[V/β_R]": "v_over_beta_r",
    "E[V/(S+1)]": "v_over_s1", "E[R]": "mean_r",
}
DEFAULT_ESTIMANDS = ("fdr", "enfr", "v_over_beta_r", "power")


@dataclass(frozen=True)
class ProcedureSpec:
    """``SD``, ``SU`` or ``SU-truncated``.

    The truncated step-up threshold is ``max(min(tau0, tau_SU), eta)`` where
    ``tau0`` rejects at most the ``k`` smallest p-values. With ``k = n`` and
    ``eta = alpha_1`` it is ``tau_SU`` floored at the first critical value.
    """

    kind: str = "SD"
    k: int | None = None
    eta: float | None = None

    def __post_init__(self):
        if self.kind not in ("SD", "SU", "SU-truncated"):
            raise ConfigurationError(f"unknown procedure {self.kind!r}")
        if self.kind == "SU-truncated" and (self.k is None or self.eta is None):
            raise ConfigurationError("SU-truncated requires k and eta")

    def validate(self, schedule: CriticalSchedule):
        if self.kind == "SU-truncated":
            if not 1 <= self.k <= schedule.n:
                raise ConfigurationError(f"truncation needs 1 <= k <= n, got k={self.k}")
            if not 0 < self.eta <= schedule.alphas[0]:
                raise ConfigurationError(f"truncation needs 0 < eta <= alpha_1, got eta={self.eta}")

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "SU-truncated":
            d.update(k=self.k, eta=self.eta)
        return d


@dataclass(frozen=True)
class ScheduleSpec:
    family: str = "gbs-beta"
    alpha: float = 0.1
    delta: float | None = None
    b: float | None = None
    improved: bool = False

    def build(self, n: int) -> CriticalSchedule:
        return make_schedule(self.family, n, self.alpha, self.delta, self.b, self.improved)

    def to_dict(self):
        return {k: v for k, v in dataclasses.asdict(self).items() if v is not None}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: ScenarioSpec
    procedure: ProcedureSpec = field(default_factory=ProcedureSpec)
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    reps: int = 10_000
    seed: int = 0
    estimands: tuple = DEFAULT_ESTIMANDS
    threads: int = 1

    def __post_init__(self):
        if int(self.reps) != self.reps or self.reps < 1:
            raise ConfigurationError(f"reps must be a positive integer, got {self.reps}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            raise ConfigurationError("threads must be positive")
        names = tuple(_ALIASES.get(e, e) for e in self.estimands)
        bad = [e for e in names if e not in ESTIMANDS]
        if bad:
            raise ConfigurationError(f"unknown estimands {bad}")
        object.__setattr__(self, "estimands", names)
        object.__setattr__(self, "reps", int(self.reps))
        object.__setattr__(self, "seed", int(self.seed))
        self.procedure.validate(self.build_schedule())
        if self.scenario.model == "example1-counter" and self.scenario.alpha != self.schedule.alpha:
            raise ConfigurationError("example1-counter is built for the schedule's alpha; "
                                     f"got {self.scenario.alpha} vs {self.schedule.alpha}")

    def build_schedule(self) -> CriticalSchedule:
        return self.schedule.build(self.scenario.n)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "procedure": self.procedure.to_dict(),
            "schedule": self.schedule.to_dict(),
            "run": {"reps": self.reps, "seed": self.seed, "threads": self.threads,
                    "estimands": list(self.estimands)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        try:
            scenario = ScenarioSpec.from_dict(d["scenario"])
            procedure = ProcedureSpec(**d.get("procedure", {}))
            schedule = ScheduleSpec(**d.get("schedule", {}))
            run_table = dict(d.get("run", {}))
            if "estimands" in run_table:
                run_table["estimands"] = tuple(run_table["estimands"])
            return cls(scenario, procedure, schedule, **run_table)
        except KeyError as exc:
            raise ConfigurationError(f"missing config table {exc}") from None
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None

    def with_param(self, axis: str, value) -> "ScenarioConfig":
        """Copy with one parameter replaced; ``axis`` names a field of any table.

        ``alpha`` sets the schedule level and the scenario's ``alpha`` together.
        """
        if axis == "alpha":
            return dataclasses.replace(
                self, schedule=dataclasses.replace(self.schedule, alpha=value),
                scenario=dataclasses.replace(self.scenario, alpha=value))
        for attr in ("scenario", "procedure", "schedule"):
            part = getattr(self, attr)
            if axis in {f.name for f in dataclasses.fields(part)}:
                return dataclasses.replace(self, **{attr: dataclasses.replace(part, **{axis: value})})
        if axis == "n1":
            sc = self.scenario
            return dataclasses.replace(self, scenario=dataclasses.replace(sc, n0=sc.n - value))
        if axis in ("reps", "seed"):
            return dataclasses.replace(self, **{axis: value})
        raise ConfigurationError(f"unknown sweep axis {axis!r}")


@dataclass(frozen=True)
class Estimate:
    mean: float
    se: float


@dataclass
class SimulationReport:
    estimates: dict
    reps: int
    seed: int
    wall_time: float
    config: ScenarioConfig | None = None

    def __getitem__(self, name) -> Estimate:
        return self.estimates[_ALIASES.get(name, name)]

    def rows(self):
        """``(estimand, estimate, se, reps, seed)`` tuples in estimand order."""
        return [(k, e.mean, e.se, self.reps, self.seed) for k, e in self.estimates.items()]


def _thresholds(sorted_p, alphas, procedure):
    ext = np.concatenate([[0.0], alphas])
    if procedure.kind == "SD":
        return ext[step_down_count(sorted_p, alphas)]
    tau_su = ext[step_up_count(sorted_p, alphas)]
    if procedure.kind == "SU":
        return tau_su
    n = alphas.size
    if procedure.k >= n:
        tau0 = np.ones(sorted_p.shape[0])
    else:
        # largest value strictly below p_(k+1): at most k rejections
        tau0 = np.nextafter(sorted_p[:, procedure.k], -np.inf)
    return np.maximum(np.minimum(tau0, tau_su), procedure.eta)


def _block(config, schedule, block, start, stop):
    spec = config.scenario
    rows = sample_batch(spec, _streams.block_rng(config.seed, block), _streams.BLOCK_SIZE)
    p = rows[: stop - start]
    tau = _thresholds(np.sort(p, axis=1), schedule.alphas, config.procedure)
    rejected = p <= tau[:, None]
    V = rejected[:, : spec.n0].sum(axis=1)
    S = rejected[:, spec.n0:].sum(axis=1)
    return {"V": V, "S": S, "R": V + S, "tau": tau}


def simulate(config: ScenarioConfig) -> dict:
    """Per-replication ``V``, ``S``, ``R`` and ``tau`` arrays in replication order."""
    schedule = config.build_schedule()
    blocks = list(_streams.block_ranges(config.reps))

    def work(b):
        return _block(config, schedule, *b)

    if config.threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    return {k: np.concatenate([p[k] for p in parts]) for k in ("V", "S", "R", "tau")}


def _summands(name, sim, config):
    V, S, R, tau = (sim[k].astype(float) for k in ("V", "S", "R", "tau"))
    spec = config.scenario
    if name == "fdr":
        return np.divide(V, R, out=np.zeros_like(V), where=R > 0)
    if name == "enfr":
        return V
    if name == "v_over_tau":
        return np.divide(V, tau, out=np.zeros_like(V), where=tau > 0)
    if name == "v_over_beta_r":
        betas = np.concatenate([[0.0], gbs_beta(spec.n, config.schedule.alpha).alphas])
        b = betas[sim["R"]]
        return np.divide(V, b, out=np.zeros_like(V), where=b > 0)
    if name == "v_over_s1":
        return V / (S + 1.0)
    if name == "power":
        return S / spec.n1 if spec.n1 else np.zeros_like(S)
    if name == "mean_r":
        return R
    if name == "p_all_nulls_rejected":
        return (sim["V"] == spec.n0).astype(float)
    if name == "p_all_rejected":
        return (sim["R"] == spec.n).astype(float)
    raise ConfigurationError(f"unknown estimand {name!r}")  # pragma: no cover


def _estimate(x):
    se = x.std(ddof=1) / math.sqrt(x.size) if x.size > 1 else 0.0
    return Estimate(float(x.mean()), float(se))


def run(config: ScenarioConfig) -> SimulationReport:
    """Estimate every configured estimand with its CLT standard error."""
    t0 = time.perf_counter()
    sim = simulate(config)
    estimates = {name: _estimate(_summands(name, sim, config)) for name in config.estimands}
    return SimulationReport(estimates, config.reps, config.seed,
                            time.perf_counter() - t0, config)


def sweep(base: ScenarioConfig, axis: str, values) -> list[tuple]:
    """Run ``base`` once per value of ``axis``.

    The i-th run uses seed ``base.seed + i`` unless the axis is ``seed`` itself.
    """
    out = []
    for i, value in enumerate(values):
        cfg = base.with_param(axis, value)
        if axis != "seed":
            cfg = dataclasses.replace(cfg, seed=(base.seed + i) % 2**64)
        out.append((value, run(cfg)))
    return out


def sweep_rows(axis, results):
    """Long-format rows ``(axis, value, estimand, estimate, se, reps, seed)``."""
    return [(axis, value) + row for value, report in results for row in report.rows()]


def figure1_table(n: int = 50, alpha: float = 0.1, reps: int = 100_000, seed: int = 0,
                  threads: int = 1) -> list[dict]:
    """FDR under DU(n - n0) for ``n0 = 1..n``: SU, SD and SD with improved first value.

    Monte Carlo columns share random numbers across the three procedures
    (seed ``seed + n0 - 1`` for row ``n0``); the ``exact_*`` columns come from
    the dynamic program.
    """
    beta = gbs_beta(n, alpha)
    improved = improve_first(beta, n, alpha)
    rows = []
    for n0 in range(1, n + 1):
        n1 = n - n0
        row = {"n0": n0}
        scenario = ScenarioSpec("du", n, n0)
        for label, kind, sched in (("su", "SU", ScheduleSpec("gbs-beta", alpha)),
                                   ("sd", "SD", ScheduleSpec("gbs-beta", alpha)),
                                   ("sd_improved", "SD", ScheduleSpec("gbs-beta", alpha, improved=True))):
            cfg = ScenarioConfig(scenario, ProcedureSpec(kind), sched, reps=reps,
                                 seed=(seed + n0 - 1) % 2**64, estimands=("fdr",), threads=threads)
            est = run(cfg)["fdr"]
            row[f"fdr_{label}"], row[f"se_{label}"] = est.mean, est.se
        row["exact_su"] = fdr_from_pmf(du_shifted_pmf(n, n1, beta, "SU"), n1)
        row["exact_sd"] = fdr_from_pmf(du_shifted_pmf(n, n1, beta, "SD"), n1)
        row["exact_sd_improved"] = fdr_from_pmf(du_shifted_pmf(n, n1, improved, "SD"), n1)
        rows.append(row)
    return rows
