"""Scenario generators for p-value vectors under the supported dependence models.

Indices are laid out with the ``n0`` true nulls first and the ``n1`` false
nulls last (see :meth:`HypothesisPartition.leading_nulls`). Step-down and
step-up thresholds only see order statistics, so the layout is immaterial.

Models
------
bia-uniform
    True nulls i.i.d. U(0, 1); false nulls i.i.d. from ``alternative``.
bia-stochastically-larger
    True nulls i.i.d. from ``null_law`` (default Beta(2, 1), ``P(p <= t) = t**2``).
du
    False nulls identically 0, true nulls i.i.d. U(0, 1).
dm
    False nulls identically 0, true nulls from ``dm_law`` (``"uniform"`` or
    ``"marshall-olkin-min"``).
example1-counter
    The n = 3 construction ``(U1, U2, 0)`` whose step-down FDR is ``4*beta_2/3``.
marshall-olkin-min / marshall-olkin-max
    ``p_i = H(min(X_i, Y))`` (martingale) or ``H~(max(X_i, Y))`` (reverse
    martingale) on the true nulls; false nulls from ``alternative``.
block
    Contiguous blocks; all true nulls of a block share one uniform.

Alternative laws (``{"law": ...}``)
-----------------------------------
zero
    Point mass at 0 (Dirac); satisfies ``P(p <= t) >= t``.
uniform
    U(0, theta), ``theta`` in (0, 1]; satisfies ``P(p <= t) >= t``.
beta
    Beta(a, b); Beta(a, 1) with ``a <= 1`` satisfies ``P(p <= t) >= t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _streams
from .core import ConfigurationError, HypothesisPartition, PValueSample
from .schedules import gbs_beta

__all__ = [
    "MODELS",
    "ScenarioSpec",
    "MartingaleDiagnostics",
    "sample",
    "sample_batch",
    "draw_replication",
    "martingale_diagnostic",
    "martingale_process",
]

MODELS = (
    "bia-uniform",
    "bia-stochastically-larger",
    "du",
    "dm",
    "example1-counter",
    "marshall-olkin-min",
    "marshall-olkin-max",
    "block",
)

_LAWS = ("zero", "uniform", "beta")


@dataclass(frozen=True)
class ScenarioSpec:
    model: str
    n: int
    n0: int
    alternative: dict = field(default_factory=lambda: {"law": "zero"})
    null_law: dict = field(default_factory=lambda: {"law": "beta", "a": 2.0, "b": 1.0})
    dm_law: str = "uniform"
    blocks: tuple = ()
    mo_x: dict = field(default_factory=lambda: {"dist": "expon"})
    mo_y: dict = field(default_factory=lambda: {"dist": "expon"})
    alpha: float = 0.25

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigurationError(f"unknown model {self.model!r}")
        if int(self.n) != self.n or int(self.n0) != self.n0:
            raise ConfigurationError("n and n0 must be integers")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "n0", int(self.n0))
        object.__setattr__(self, "blocks", tuple(int(b) for b in self.blocks))
        if self.n < 1 or not 1 <= self.n0 <= self.n:
            raise ConfigurationError(f"need n >= 1 and 1 <= n0 <= n, got n={self.n}, n0={self.n0}")
        _check_law(self.alternative, "alternative")
        _check_law(self.null_law, "null_law")
        if self.model == "example1-counter" and (self.n, self.n0) != (3, 2):
            raise ConfigurationError("example1-counter is defined for n=3, n0=2 only")
        if self.model == "dm" and self.dm_law not in ("uniform", "marshall-olkin-min"):
            raise ConfigurationError(f"unknown dm_law {self.dm_law!r}")
        if self.model == "block":
            if not self.blocks or sum(self.blocks) != self.n or min(self.blocks) < 1:
                raise ConfigurationError("block sizes must be positive and sum to n")
        if self.model.startswith("marshall-olkin") or self.dm_law == "marshall-olkin-min":
            _frozen(self.mo_x), _frozen(self.mo_y)

    @property
    def n1(self) -> int:
        return self.n - self.n0

    @property
    def partition(self) -> HypothesisPartition:
        return HypothesisPartition.leading_nulls(self.n0, self.n1)

    def to_dict(self) -> dict:
        out = {"model": self.model, "n": self.n, "n0": self.n0,
               "alternative": dict(self.alternative)}
        if self.model == "bia-stochastically-larger":
            out["null_law"] = dict(self.null_law)
        if self.model == "dm":
            out["dm_law"] = self.dm_law
        if self.model == "block":
            out["blocks"] = list(self.blocks)
        if self.model.startswith("marshall-olkin") or self.dm_law == "marshall-olkin-min":
            out["mo_x"], out["mo_y"] = dict(self.mo_x), dict(self.mo_y)
        if self.model == "example1-counter":
            out["alpha"] = self.alpha
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        d = dict(d)
        if "n1" in d:
            n1 = d.pop("n1")
            d.setdefault("n0", d["n"] - n1)
            if d["n0"] + n1 != d["n"]:
                raise ConfigurationError("n0 + n1 must equal n")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown scenario keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None


def _check_law(law, name):
    if not isinstance(law, dict) or law.get("law") not in _LAWS:
        raise ConfigurationError(f"{name} must be a table with law in {_LAWS}")
    if law["law"] == "uniform" and not 0 < law.get("theta", 1.0) <= 1:
        raise ConfigurationError(f"{name}: theta must lie in (0, 1]")
    if law["law"] == "beta" and not (law.get("a", 1.0) > 0 and law.get("b", 1.0) > 0):
        raise ConfigurationError(f"{name}: beta parameters must be positive")


def _draw_law(law, rng, shape):
    kind = law["law"]
    if kind == "zero":
        return np.zeros(shape)
    if kind == "uniform":
        return law.get("theta", 1.0) * rng.random(shape)
    return rng.beta(law.get("a", 1.0), law.get("b", 1.0), size=shape)


def _frozen(desc):
    desc = dict(desc)
    name = desc.pop("dist", None)
    dist = getattr(stats, name, None) if name else None
    if not isinstance(dist, stats.rv_continuous):
        raise ConfigurationError(f"unknown continuous distribution {name!r}")
    try:
        return dist(**desc)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def _marshall_olkin(spec, rng, size, k, reverse=False):
    x_law, y_law = _frozen(spec.mo_x), _frozen(spec.mo_y)
    x = x_law.rvs(size=(size, k), random_state=rng)
    y = y_law.rvs(size=(size, 1), random_state=rng)
    if reverse:
        # H~(z) = F_X(z) F_Y(z) is the law of max(X_i, Y)
        return x_law.cdf(np.maximum(x, y)) * y_law.cdf(np.maximum(x, y))
    z = np.minimum(x, y)
    # H(z) = 1 - S_X(z) S_Y(z) is the law of min(X_i, Y)
    return -np.expm1(x_law.logsf(z) + y_law.logsf(z))


def _true_nulls(spec, rng, size):
    n0 = spec.n0
    model = spec.model
    if model in ("bia-uniform", "du") or (model == "dm" and spec.dm_law == "uniform"):
        return rng.random((size, n0))
    if model == "bia-stochastically-larger":
        return _draw_law(spec.null_law, rng, (size, n0))
    if model == "marshall-olkin-min" or model == "dm":
        return _marshall_olkin(spec, rng, size, n0)
    if model == "marshall-olkin-max":
        return _marshall_olkin(spec, rng, size, n0, reverse=True)
    if model == "block":
        shared = rng.random((size, len(spec.blocks)))
        owner = np.repeat(np.arange(len(spec.blocks)), spec.blocks)[:n0]
        return shared[:, owner]
    raise ConfigurationError(f"unknown model {model!r}")  # pragma: no cover


def sample_batch(spec: ScenarioSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` independent p-value vectors as a ``(size, n)`` array."""
    if spec.model == "example1-counter":
        beta2 = gbs_beta(3, spec.alpha).alphas[1]
        u1 = rng.random(size)
        u2 = np.where(u1 <= beta2, u1 + beta2,
                      np.where((u1 > beta2) & (u1 < 2 * beta2), u1 - beta2, u1))
        return np.column_stack([u1, u2, np.zeros(size)])
    nulls = _true_nulls(spec, rng, size)
    if spec.model in ("du", "dm"):
        alts = np.zeros((size, spec.n1))
    else:
        alts = _draw_law(spec.alternative, rng, (size, spec.n1))
    return np.concatenate([nulls, alts], axis=1)


def sample(spec: ScenarioSpec, rng: np.random.Generator) -> PValueSample:
    """Draw a single p-value vector."""
    return PValueSample(sample_batch(spec, rng, 1)[0], spec.partition)


def draw_replication(spec: ScenarioSpec, seed: int, r: int) -> PValueSample:
    """The exact p-value vector the simulation engine uses for replication ``r``."""
    block, offset = divmod(int(r), _streams.BLOCK_SIZE)
    rows = sample_batch(spec, _streams.block_rng(seed, block), _streams.BLOCK_SIZE)
    return PValueSample(rows[offset], spec.partition)


def martingale_process(p_nulls: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """``M(t) = sum_i (1[p_i <= t] - t) / (1 - t)`` over true-null columns.

    ``p_nulls`` is ``(reps, n0)``; returns ``(reps, len(grid))``.
    """
    grid = np.asarray(grid, dtype=float)
    counts = (p_nulls[:, :, None] <= grid).sum(axis=1)
    # same as (counts - n0 t) / (1 - t), but exact when every null is below t
    return counts - (p_nulls.shape[1] - counts) * (grid / (1.0 - grid))


@dataclass
class MartingaleDiagnostics:
    """Monte Carlo summary of the centered null process on a grid.

    ``increments`` holds one entry per grid step with the increment mean and
    standard error conditional on each observed level of ``M(t_k)``.
    """

    grid: np.ndarray
    mean_M: np.ndarray
    se_M: np.ndarray
    increments: list
    reps: int

    def max_abs_z(self) -> float:
        """Largest |mean / se| over grid means and conditional increments."""
        zs = [_z(self.mean_M, self.se_M)]
        zs += [_z(inc["mean"], inc["se"]) for inc in self.increments]
        return float(max((z.max() for z in zs if z.size), default=0.0))

    def max_increment_z(self) -> float:
        """Largest signed z-score of the conditional increment means."""
        zs = [_z(inc["mean"], inc["se"], signed=True) for inc in self.increments]
        return float(max((z.max() for z in zs if z.size), default=-np.inf))


def _z(mean, se, signed=False):
    mean, se = np.asarray(mean), np.asarray(se)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, mean / np.where(se > 0, se, 1.0),
                     np.where(mean == 0, 0.0, np.sign(mean) * np.inf))
    return z if signed else np.abs(z)


def martingale_diagnostic(spec: ScenarioSpec, grid, reps: int, seed: int = 0,
                          min_count: int = 100) -> MartingaleDiagnostics:
    """Estimate ``E[M(t)]`` and conditional increments of the true-null process.

    Increments ``M(t_{k+1}) - M(t_k)`` are averaged within bins given by the
    value of ``M(t_k)`` (equivalently the null rejection count at ``t_k``);
    bins with fewer than ``min_count`` replications are dropped. For
    martingale models both summaries are zero within error; for
    super-martingale models the increments are nonpositive within error.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ConfigurationError("grid must be a non-empty 1-d vector")
    if grid[0] != 0.0 or np.any(np.diff(grid) < 0) or grid[-1] >= 1.0:
        raise ConfigurationError("grid must start at 0, be nondecreasing and stay below 1")
    parts = []
    for block, start, stop in _streams.block_ranges(int(reps)):
        rows = sample_batch(spec, _streams.block_rng(seed, block), _streams.BLOCK_SIZE)
        parts.append(martingale_process(rows[: stop - start, : spec.n0], grid))
    M = np.concatenate(parts)
    sd = M.std(axis=0, ddof=1) if reps > 1 else np.zeros(grid.size)
    increments = []
    for k in range(grid.size - 1):
        levels, inverse = np.unique(M[:, k], return_inverse=True)
        diff = M[:, k + 1] - M[:, k]
        count = np.bincount(inverse, minlength=levels.size)
        total = np.bincount(inverse, weights=diff, minlength=levels.size)
        sq = np.bincount(inverse, weights=diff**2, minlength=levels.size)
        keep = count >= max(min_count, 2)
        c = count[keep]
        mean = total[keep] / c
        var = np.maximum(sq[keep] - c * mean**2, 0.0) / (c - 1)
        increments.append({"t0": grid[k], "t1": grid[k + 1], "levels": levels[keep],
                           "count": c, "mean": mean, "se": np.sqrt(var / c)})
    return MartingaleDiagnostics(grid=grid, mean_M=M.mean(axis=0), se_M=sd / math.sqrt(reps),
                                 increments=increments, reps=int(reps))
