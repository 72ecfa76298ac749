"""False discovery rate of step-down and step-up multiple tests.

Critical-value schedules, p-value models, exact finite-sample formulas,
calibration of the step-up family and a reproducible Monte Carlo engine.
"""
from .core import (ConfigurationError, CriticalSchedule, HypothesisPartition, PValueSample,
                   ProcedureOutcome, fdr_estimator, sigma_boundary, step_down_threshold,
                   step_up_threshold)
from .schedules import (gbs_beta, improve_first, linear_bh, make_schedule,
                        rejection_curve_schedule, su_family_a)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "CriticalSchedule",
    "HypothesisPartition",
    "PValueSample",
    "ProcedureOutcome",
    "fdr_estimator",
    "sigma_boundary",
    "step_down_threshold",
    "step_up_threshold",
    "gbs_beta",
    "improve_first",
    "linear_bh",
    "make_schedule",
    "rejection_curve_schedule",
    "su_family_a",
    "__version__",
]
