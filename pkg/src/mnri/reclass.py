"""Reclassification statistics for a nested model comparison.

All statistics share one template: a weighted sum over subjects of
(indicator(score difference) - 1/2), normalized by n ybar (1 - ybar).
The classical NRI weights by the constant-model residual y - ybar; the
modified NRI (mNRI) weights by the base-model score residual, which makes
it a proper change score and, for the logit, asymptotically proportional
to the mean absolute difference between the nested event probabilities.
Smooth versions replace the indicator by the standard normal distribution
function so the statistic admits an asymptotic reference distribution.

Values are reported on the half-NRI scale throughout (the doubled
classical scale is a display concern only).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import AllTies, DegenerateOutcome
from .glm import Dataset, NestedFits, score_residuals


@dataclass(frozen=True)
class ReclassReport:
    """All reclassification statistics for one nested comparison."""

    nri_hard: float
    nri_smooth: float
    mnri_hard: float
    mnri_smooth: float
    mad: float
    scaled_mad: float
    sign_inner: float
    sign_norm: int
    ties: int

    @property
    def mad_cross_term(self) -> float:
        """Finite-sample gap mnri_hard - scaled_mad (o_p under the logit)."""
        return self.mnri_hard - self.scaled_mad


@dataclass(frozen=True)
class TrainTestPair:
    """Nested fits from independent training and test samples sharing one
    covariate specification; statistics are evaluated on the test data."""

    train_fits: NestedFits
    test_fits: NestedFits

    def __post_init__(self):
        if self.train_fits.link != self.test_fits.link:
            raise ValueError("train and test fits must share one link")
        if (
            self.train_fits.data.p != self.test_fits.data.p
            or self.train_fits.data.q != self.test_fits.data.q
        ):
            raise ValueError("train and test fits must share one covariate specification")

    @property
    def test_data(self) -> Dataset:
        return self.test_fits.data


def extended_indicator(u):
    """Indicator of u > 0, extended to take the value 1/2 at exact ties."""
    u = np.asarray(u, dtype=float)
    out = np.where(u > 0.0, 1.0, np.where(u < 0.0, 0.0, 0.5))
    return out if out.ndim else float(out)


def score_difference(fits: NestedFits) -> np.ndarray:
    """Risk-score change from base to expanded model, per subject."""
    return fits.expanded.linear_predictor - fits.base.linear_predictor


def cross_score_difference(train_fits: NestedFits, test_data: Dataset) -> np.ndarray:
    """Risk-score change using training-data coefficients on test rows."""
    p = test_data.p
    coef = train_fits.expanded.coefficients
    eta_expanded = test_data.x @ coef[:p] + test_data.z @ coef[p:]
    eta_base = test_data.x @ train_fits.base.coefficients
    return eta_expanded - eta_base


def _check_ybar(ybar: float) -> float:
    if not 0.0 < ybar < 1.0:
        raise DegenerateOutcome(f"event rate {ybar} leaves no reclassification scale")
    return ybar


def half_nri_from_parts(residuals, delta, ybar: float, *, smooth: bool) -> float:
    """Core statistic [n ybar (1-ybar)]^-1 sum_i residuals_i (ind(delta_i) - 1/2),
    with ind either the extended indicator or the normal distribution function."""
    residuals = np.asarray(residuals, dtype=float)
    delta = np.asarray(delta, dtype=float)
    _check_ybar(ybar)
    ind = numerics.norm_cdf(delta) if smooth else extended_indicator(delta)
    n = residuals.shape[0]
    return float(residuals @ (ind - 0.5)) / (n * ybar * (1.0 - ybar))


def nri_hard(fits: NestedFits) -> float:
    """Half-scale NRI: constant-model residuals against the sign of the
    score change."""
    y = fits.data.y
    ybar = fits.data.ybar
    return half_nri_from_parts(y - ybar, score_difference(fits), ybar, smooth=False)


def nri_smooth(fits: NestedFits) -> float:
    """Smooth half-scale NRI with the normal distribution function in place
    of the indicator."""
    y = fits.data.y
    ybar = fits.data.ybar
    return half_nri_from_parts(y - ybar, score_difference(fits), ybar, smooth=True)


def _base_residuals(fits: NestedFits) -> np.ndarray:
    return score_residuals(fits.base, fits.link, fits.data.y)


def mnri_hard(fits: NestedFits) -> float:
    """Modified NRI: base-model score residuals against the sign of the
    score change."""
    return half_nri_from_parts(
        _base_residuals(fits), score_difference(fits), fits.data.ybar, smooth=False
    )


def mnri_smooth(fits: NestedFits) -> float:
    """Smooth modified NRI (the test statistic's core)."""
    return half_nri_from_parts(
        _base_residuals(fits), score_difference(fits), fits.data.ybar, smooth=True
    )


def mnri_train_test(pair: TrainTestPair) -> float:
    """Smooth modified NRI across independent samples: test-data base-model
    residuals against the training-data score change, evaluated on and
    normalized by the test data."""
    residuals = _base_residuals(pair.test_fits)
    delta = cross_score_difference(pair.train_fits, pair.test_data)
    return half_nri_from_parts(residuals, delta, pair.test_data.ybar, smooth=True)


def nri_hard_train_test(pair: TrainTestPair) -> float:
    """Half-scale NRI with training-data coefficients evaluated on test data
    (the form whose normal test is studied in the train/test size tables)."""
    y = pair.test_data.y
    ybar = pair.test_data.ybar
    delta = cross_score_difference(pair.train_fits, pair.test_data)
    return half_nri_from_parts(y - ybar, delta, ybar, smooth=False)


def mad_probabilities(fits: NestedFits) -> tuple[float, float]:
    """Mean absolute difference between nested fitted probabilities and its
    [2 ybar (1-ybar)]^-1 scaling (approximately the logit mNRI)."""
    ybar = _check_ybar(fits.data.ybar)
    mad = float(np.mean(np.abs(fits.expanded.fitted_probs - fits.base.fitted_probs)))
    return mad, mad / (2.0 * ybar * (1.0 - ybar))


def sign_decomposition(fits: NestedFits) -> tuple[float, int, float]:
    """Rewrite of the hard mNRI as a regression coefficient.

    Returns (s'r, s's, regression form) for the sign vector
    s_i = 2 ind(delta_i) - 1 (zero on exact ties) and the base-model
    residual vector r, where the regression form is
    [2 ybar (1-ybar)]^-1 (s'r)/(s's). With no ties s's = n and the
    regression form equals mnri_hard exactly.
    """
    ybar = _check_ybar(fits.data.ybar)
    delta = score_difference(fits)
    s = np.sign(delta)
    sign_norm = int(np.count_nonzero(s))
    if sign_norm == 0:
        raise AllTies("every score difference is exactly zero")
    sign_inner = float(s @ _base_residuals(fits))
    regression_form = sign_inner / (2.0 * ybar * (1.0 - ybar) * sign_norm)
    return sign_inner, sign_norm, regression_form


def count_ties(fits: NestedFits) -> int:
    """Subjects whose expanded and base risk scores agree exactly."""
    return int(np.count_nonzero(score_difference(fits) == 0.0))


def build_report(fits: NestedFits) -> ReclassReport:
    """Assemble every reclassification statistic for one nested comparison."""
    mad, scaled_mad = mad_probabilities(fits)
    ties = count_ties(fits)
    if ties < fits.data.n:
        sign_inner, sign_norm, _ = sign_decomposition(fits)
    else:
        sign_inner, sign_norm = 0.0, 0
    return ReclassReport(
        nri_hard=nri_hard(fits),
        nri_smooth=nri_smooth(fits),
        mnri_hard=mnri_hard(fits),
        mnri_smooth=mnri_smooth(fits),
        mad=mad,
        scaled_mad=scaled_mad,
        sign_inner=sign_inner,
        sign_norm=sign_norm,
        ties=ties,
    )
