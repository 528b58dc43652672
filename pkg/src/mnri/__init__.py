"""Nested binary-response model comparison with the NRI and modified NRI.

Fits the (constant, base, expanded) model triple, computes the classical
and modified net reclassification improvement statistics (hard and smooth
forms), and tests them against valid asymptotic reference distributions:
a scaled chi-square for the single-sample modified statistic and a
weighted chi-square mixture in the train/test setting. A seeded Monte
Carlo engine reproduces the Type-1-error size studies, and a restricted
cubic spline builder supports flexible biomarker modeling.
"""

__version__ = "0.1.0"

from .errors import (
    AllTies,
    DegenerateOutcome,
    ExcessiveFitFailures,
    FitError,
    IntegrationFailure,
    MnriError,
    NoConvergence,
    NotPositiveDefinite,
    RankDeficient,
    Separation,
    TooFewDistinctValues,
)
from .glm import LOGIT, PROBIT, Dataset, FittedModel, Link, NestedFits, fit, fit_nested
from .inference import (
    TestResult,
    k_constant,
    mixture_weights,
    test_mnri_single,
    test_mnri_train_test,
    test_nri_normal_legacy,
)
from .numerics import MixtureSpec, mixture_tail
from .reclass import (
    ReclassReport,
    TrainTestPair,
    build_report,
    extended_indicator,
    mad_probabilities,
    mnri_hard,
    mnri_smooth,
    mnri_train_test,
    nri_hard,
    nri_smooth,
    sign_decomposition,
)
from .sim import SimConfig, SimTableRow, gen_replicate, run_cell, run_grid
from .spline import SplineBasis, default_knots, rcs_basis

__all__ = [
    "__version__",
    "AllTies", "DegenerateOutcome", "ExcessiveFitFailures", "FitError",
    "IntegrationFailure", "MnriError", "NoConvergence", "NotPositiveDefinite",
    "RankDeficient", "Separation", "TooFewDistinctValues",
    "LOGIT", "PROBIT", "Dataset", "FittedModel", "Link", "NestedFits",
    "fit", "fit_nested",
    "TestResult", "k_constant", "mixture_weights", "test_mnri_single",
    "test_mnri_train_test", "test_nri_normal_legacy",
    "MixtureSpec", "mixture_tail",
    "ReclassReport", "TrainTestPair", "build_report", "extended_indicator",
    "mad_probabilities", "mnri_hard", "mnri_smooth", "mnri_train_test",
    "nri_hard", "nri_smooth", "sign_decomposition",
    "SimConfig", "SimTableRow", "gen_replicate", "run_cell", "run_grid",
    "SplineBasis", "default_knots", "rcs_basis",
]
