"""Maximum-likelihood fitting of nested binary-response models.

The model family is

    Pr(Y = 1)          = G(b.)            constant model
    Pr(Y = 1 | x)      = G(b0' x)         base model
    Pr(Y = 1 | x, z)   = G(b' x + g' z)   expanded model

for a monotone inverse link G (logistic or probit). Fitting is Fisher
scoring on the Bernoulli log-likelihood with step-halving, and fits carry
the expected information evaluated at the MLE so downstream code can form
the partitioned information blocks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import numerics
from .errors import (
    DegenerateOutcome,
    FitError,
    NoConvergence,
    NotPositiveDefinite,
    RankDeficient,
    Separation,
)

# Probability clamp for likelihood evaluation; avoids log(0) during
# intermediate iterations without biasing converged interior fits.
_PROB_EPS = 1e-12

_SCORE_TOL = 1e-8
_STEP_TOL = 1e-8
_MAX_ITER = 100
_SEPARATION_NORM = 1e3


@dataclass(frozen=True)
class Link:
    """Inverse link G mapping the risk score to an event probability."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("logit", "probit"):
            raise ValueError(f"unknown link kind {self.kind!r}")

    def prob(self, eta):
        """G(eta)."""
        if self.kind == "logit":
            return expit(eta)
        return numerics.norm_cdf(eta)

    def density(self, eta):
        """G'(eta)."""
        if self.kind == "logit":
            p = expit(eta)
            return p * (1.0 - p)
        return numerics.norm_pdf(eta)

    def score_residual(self, eta, y):
        """r = [G'/(G(1-G))] (y - G); reduces to y - G for the logit."""
        eta = np.asarray(eta, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "logit":
            return y - expit(eta)
        p = np.clip(numerics.norm_cdf(eta), _PROB_EPS, 1.0 - _PROB_EPS)
        return numerics.norm_pdf(eta) / (p * (1.0 - p)) * (y - p)

    def info_weight(self, eta):
        """G'^2 / (G(1-G)), the expected-information weight per observation."""
        eta = np.asarray(eta, dtype=float)
        if self.kind == "logit":
            p = expit(eta)
            return p * (1.0 - p)
        p = np.clip(numerics.norm_cdf(eta), _PROB_EPS, 1.0 - _PROB_EPS)
        d = numerics.norm_pdf(eta)
        return d * d / (p * (1.0 - p))


LOGIT = Link("logit")
PROBIT = Link("probit")


def link_from_name(name: str) -> Link:
    return Link(name)


@dataclass(frozen=True)
class Dataset:
    """Binary outcomes with base covariates x (first column constant 1)
    and new covariates z."""

    y: np.ndarray
    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=float)
        x = np.ascontiguousarray(self.x, dtype=float)
        z = np.ascontiguousarray(self.z, dtype=float)
        if y.ndim != 1:
            raise ValueError("y must be a vector")
        if x.ndim != 2 or z.ndim != 2:
            raise ValueError("x and z must be matrices")
        n = y.shape[0]
        if x.shape[0] != n or z.shape[0] != n:
            raise ValueError("x, z row counts must match y")
        if not np.all((y == 0.0) | (y == 1.0)):
            raise ValueError("y must be coded 0/1")
        if y.min() == y.max():
            raise DegenerateOutcome("outcome is constant; need both events and non-events")
        if not np.all(x[:, 0] == 1.0):
            raise ValueError("first column of x must be the constant 1")
        if n < x.shape[1] + z.shape[1] + 1:
            raise ValueError("too few rows for the covariate dimensions")
        for arr in (y, x, z):
            arr.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def q(self) -> int:
        return self.z.shape[1]

    @property
    def ybar(self) -> float:
        return float(self.y.mean())


@dataclass(frozen=True)
class FittedModel:
    """One converged binary-response model."""

    coefficients: np.ndarray
    linear_predictor: np.ndarray
    fitted_probs: np.ndarray
    loglik: float
    expected_information: np.ndarray  # summed over observations, at the MLE
    converged: bool
    iterations: int

    @property
    def n(self) -> int:
        return self.fitted_probs.shape[0]


@dataclass(frozen=True)
class NestedFits:
    """The (expanded, base, constant) model triple on one dataset."""

    expanded: FittedModel
    base: FittedModel
    constant: FittedModel
    link: Link
    data: Dataset


@dataclass(frozen=True)
class InformationBlocks:
    """Partition of the per-observation expected information for (b, g).

    ``gamma_cov`` is the gg block of the full inverse, i.e. the inverse
    Schur complement (I_gg - I_gb I_bb^-1 I_bg)^-1, which is the
    asymptotic covariance of sqrt(n) (g_hat - g0).
    """

    bb: np.ndarray
    bg: np.ndarray
    gg: np.ndarray
    gamma_cov: np.ndarray


def _bernoulli_loglik(y, probs) -> float:
    p = np.clip(probs, _PROB_EPS, 1.0 - _PROB_EPS)
    return float(y @ np.log(p) + (1.0 - y) @ np.log1p(-p))


def fit(y, design, link: Link, *, max_iter: int = _MAX_ITER) -> FittedModel:
    """Fisher-scoring maximum likelihood for one binary-response model.

    Convergence requires both the largest score component and the last
    step norm to fall below 1e-8. Steps are halved while they would
    decrease the log-likelihood. Raises Separation when the coefficients
    diverge (norm above 1e3 with the likelihood still improving),
    RankDeficient for collinear designs, and NoConvergence at the
    iteration cap.
    """
    y = np.asarray(y, dtype=float)
    design = np.asarray(design, dtype=float)
    n, m = design.shape
    if y.shape != (n,):
        raise ValueError("y length must match design rows")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("y must be coded 0/1")
    if y.min() == y.max():
        raise DegenerateOutcome("outcome is constant; need both events and non-events")
    if np.linalg.matrix_rank(design) < m:
        raise RankDeficient("design matrix is rank deficient (collinear columns)")

    beta = np.zeros(m)
    eta = design @ beta
    probs = link.prob(eta)
    loglik = _bernoulli_loglik(y, probs)
    last_step_norm = 0.0
    iterations = 0

    for iteration in range(max_iter + 1):
        score = design.T @ link.score_residual(eta, y)
        if np.max(np.abs(score)) <= _SCORE_TOL and last_step_norm <= _STEP_TOL:
            iterations = iteration
            break
        if iteration == max_iter:
            raise NoConvergence(f"Fisher scoring did not converge in {max_iter} iterations")

        w = link.info_weight(eta)
        info = design.T @ (design * w[:, None])
        try:
            step = numerics.solve_spd(info, score)
        except NotPositiveDefinite as exc:
            raise RankDeficient(f"singular information matrix: {exc}") from exc

        # Step-halving: never accept a likelihood decrease. The slack keeps
        # rounding noise in the log-likelihood (resolution ~ |ll| * eps)
        # from halving away full Newton steps near the optimum.
        slack = 1e-11 * (1.0 + abs(loglik))
        new_beta = beta + step
        new_eta = design @ new_beta
        new_loglik = _bernoulli_loglik(y, link.prob(new_eta))
        halvings = 0
        while new_loglik < loglik - slack and halvings < 30:
            step *= 0.5
            new_beta = beta + step
            new_eta = design @ new_beta
            new_loglik = _bernoulli_loglik(y, link.prob(new_eta))
            halvings += 1

        improved = new_loglik > loglik
        beta = new_beta
        eta = new_eta
        probs = link.prob(eta)
        loglik = new_loglik
        last_step_norm = float(np.linalg.norm(step))

        if np.linalg.norm(beta) > _SEPARATION_NORM and improved:
            raise Separation(
                "coefficients diverging with the likelihood still improving; "
                "the data are (quasi-)separated and the MLE does not exist"
            )

    w = link.info_weight(eta)
    info = design.T @ (design * w[:, None])
    return FittedModel(
        coefficients=beta,
        linear_predictor=eta,
        fitted_probs=np.clip(probs, _PROB_EPS, 1.0 - _PROB_EPS),
        loglik=loglik,
        expected_information=info,
        converged=True,
        iterations=iterations,
    )


def _fit_tagged(y, design, link, model_name: str) -> FittedModel:
    try:
        return fit(y, design, link)
    except (FitError, NoConvergence) as exc:
        tagged = type(exc)(f"{model_name} model: {exc}")
        tagged.model = model_name
        raise tagged from exc


def fit_nested(data: Dataset, link: Link) -> NestedFits:
    """Fit the expanded, base, and constant models on one dataset."""
    expanded_design = np.hstack([data.x, data.z])
    expanded = _fit_tagged(data.y, expanded_design, link, "expanded")
    base = _fit_tagged(data.y, data.x, link, "base")
    constant = _fit_tagged(data.y, np.ones((data.n, 1)), link, "constant")
    return NestedFits(expanded=expanded, base=base, constant=constant, link=link, data=data)


def score_residuals(fit: FittedModel, link: Link, y) -> np.ndarray:
    """Per-observation score residuals r = h(eta) (y - G(eta)) at the fit."""
    return link.score_residual(fit.linear_predictor, y)


def information_blocks(expanded: FittedModel, n_base: int) -> InformationBlocks:
    """Partition the per-observation expected information of an expanded
    fit into base (first ``n_base`` coefficients) and new blocks."""
    info = np.asarray(expanded.expected_information, dtype=float) / expanded.n
    bb = info[:n_base, :n_base]
    bg = info[:n_base, n_base:]
    gg = info[n_base:, n_base:]
    schur = gg - bg.T @ numerics.solve_spd(bb, bg)
    gamma_cov = numerics.inv_spd(schur)
    return InformationBlocks(bb=bb, bg=bg, gg=gg, gamma_cov=gamma_cov)
