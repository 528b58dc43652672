"""Deterministic numerical kernels.

Dense symmetric linear algebra, normal/chi-square distribution functions,
and tail probabilities of weighted chi-square mixtures. Everything here is
a pure function of its inputs and safe to call concurrently.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.linalg import solve_triangular
from scipy.special import gammainc, ndtr

from .errors import IntegrationFailure, NoConvergence, NotPositiveDefinite

_SQRT_2PI = np.sqrt(2.0 * np.pi)

# Cholesky pivot threshold, relative to the largest diagonal entry.
# Distinguishes rounding noise from genuine rank deficiency.
_SPD_PIVOT_RTOL = 1e-12


@dataclass(frozen=True)
class MixtureSpec:
    """A scaled mixture ``scale * sum_j weights[j] * chi2_1j`` of independent
    one-degree-of-freedom chi-square variables. Weights may be negative."""

    weights: tuple[float, ...]
    scale: float

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "scale", float(self.scale))
        if len(weights) == 0:
            raise ValueError("mixture needs at least one weight")
        if not np.all(np.isfinite(weights)):
            raise ValueError("mixture weights must be finite")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ValueError("mixture scale must be positive and finite")


def _as_symmetric(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-8 * (1.0 + np.abs(a).max())):
        raise ValueError(f"{name} must be symmetric")
    return a


def cholesky_spd(a) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Raises NotPositiveDefinite when a pivot falls at or below
    ``1e-12 * max(diag)``, which for regression information matrices
    signals collinear covariates.
    """
    a = _as_symmetric(a)
    n = a.shape[0]
    tol = _SPD_PIVOT_RTOL * max(float(np.max(np.diag(a))), 0.0)
    lower = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if pivot <= tol:
            raise NotPositiveDefinite(
                f"Cholesky pivot {pivot:.3e} at index {j} is below tolerance {tol:.3e}"
            )
        lower[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            lower[j + 1 :, j] = (a[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / lower[j, j]
    return lower


def solve_spd(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` for symmetric positive definite ``a``."""
    lower = cholesky_spd(a)
    b = np.asarray(b, dtype=float)
    y = solve_triangular(lower, b, lower=True)
    return solve_triangular(lower.T, y, lower=False)


def inv_spd(a) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix, symmetrized."""
    a = np.asarray(a, dtype=float)
    inv = solve_spd(a, np.eye(a.shape[0]))
    return 0.5 * (inv + inv.T)


def eig_sym(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvectors of a symmetric
    matrix, so that ``a ~= vectors @ diag(values) @ vectors.T``."""
    a = _as_symmetric(a)
    try:
        values, vectors = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"symmetric eigendecomposition failed: {exc}") from exc
    order = np.argsort(values)[::-1]
    return values[order], vectors[:, order]


def norm_pdf(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / _SQRT_2PI
    return out if out.ndim else float(out)


def norm_cdf(x):
    """Standard normal distribution function."""
    out = ndtr(np.asarray(x, dtype=float))
    return out if out.ndim else float(out)


def chisq_cdf(x, q: int):
    """Chi-square distribution function with ``q`` degrees of freedom,
    i.e. the regularized lower incomplete gamma P(q/2, x/2)."""
    if q < 1 or int(q) != q:
        raise ValueError(f"degrees of freedom must be a positive integer, got {q}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("chi-square argument must be nonnegative")
    out = gammainc(q / 2.0, x / 2.0)
    return out if out.ndim else float(out)


def mixture_tail(t: float, spec: MixtureSpec, *, tol: float = 1e-8) -> float:
    """Upper tail probability ``P(scale * sum_j w_j chi2_1j > t)``.

    Computed by numerical inversion of the characteristic function
    (Imhof's integral), which stays exact up to quadrature error even
    when weights are mixed in sign:

        P(Q > t) = 1/2 + (1/pi) * int_0^inf sin(theta(u)) / (u rho(u)) du

    with theta(u) = psi(u) - t u / 2, psi(u) = (1/2) sum_j atan(w_j u),
    and rho(u) = prod_j (1 + w_j^2 u^2)^(1/4).

    The integrand oscillates with frequency t/2 while its envelope decays
    only like u^(-1-m/2), so a plain adaptive rule cannot reach the far
    tail. The integral is split at u = 1: an ordinary adaptive pass covers
    [0, 1], and the remainder is written as Fourier sine/cosine integrals
    of the smooth decaying factors sin(psi)/(u rho) and cos(psi)/(u rho),
    which QUADPACK's dedicated Fourier algorithm integrates to infinity.
    """
    t = float(t)
    weights = np.asarray(spec.weights, dtype=float) * spec.scale
    weights = weights[weights != 0.0]
    if weights.size == 0:
        return float(t < 0.0)

    def psi(u):
        return 0.5 * np.sum(np.arctan(weights * u))

    def inv_urho(u):
        return 1.0 / (u * np.prod((1.0 + (weights * u) ** 2) ** 0.25))

    def integrand(u):
        return np.sin(psi(u) - 0.5 * t * u) * inv_urho(u)

    # Accuracy is enforced through the returned error estimates below, so
    # QUADPACK's warnings about slow convergence are redundant here.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)

        # [0, 1]: finite at 0 (limit (sum w - t)/2; QUADPACK never evaluates
        # the endpoint), at most ~|t|/12 oscillations.
        head_limit = 200 + int(abs(t))
        head, head_err = integrate.quad(
            integrand, 0.0, 1.0, epsabs=tol / 4.0, epsrel=1e-10, limit=head_limit
        )

        omega = 0.5 * abs(t)
        if omega >= 1e-8:
            # sin(psi - tu/2) = sin(psi)cos(|t|u/2) - sign(t) cos(psi)sin(|t|u/2)
            cos_part, cos_err = integrate.quad(
                lambda u: np.sin(psi(u)) * inv_urho(u),
                1.0, np.inf, weight="cos", wvar=omega, epsabs=tol / 4.0,
            )
            sin_part, sin_err = integrate.quad(
                lambda u: np.cos(psi(u)) * inv_urho(u),
                1.0, np.inf, weight="sin", wvar=omega, epsabs=tol / 4.0,
            )
            tail = cos_part - np.sign(t) * sin_part
            tail_err = cos_err + sin_err
        else:
            # |t| this small shifts the probability by under max-density *
            # |t|; treat the phase as t = 0, leaving a genuinely
            # non-oscillatory tail.
            tail, tail_err = integrate.quad(
                lambda u: np.sin(psi(u)) * inv_urho(u),
                1.0, np.inf, epsabs=tol / 4.0, epsrel=1e-10, limit=500,
            )

    value = head + tail
    total_err = head_err + tail_err
    if not np.isfinite(value) or total_err > 1e-6:
        raise IntegrationFailure(
            f"Imhof integral did not converge (estimate {value!r}, error {total_err!r})"
        )
    prob = 0.5 + value / np.pi
    return float(min(1.0, max(0.0, prob)))
