"""Conjugate updating and posterior moments for weighted Dirichlet models.

Counts update the concentration (alpha -> alpha + n) and leave the weight
untouched; every posterior quantity is then a ratio of polynomial
expectations under the updated base measure. The generic moment-ratio path
is the single source of truth; the closed forms for the plain Dirichlet,
the mixture weight, and the selection weight are kept as independent
cross-check paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .core import (
    CountVector,
    DirichletParams,
    NumericalError,
    PolynomialWeight,
    WeightedDirichletModel,
    polynomial_expectation,
)

__all__ = [
    "PosteriorSummary",
    "posterior_update",
    "posterior_mean",
    "posterior_covariance",
    "posterior_summary",
    "bayes_estimate",
    "dirichlet_posterior_mean",
    "dirichlet_posterior_covariance",
    "mixture_posterior_mean",
    "selection_posterior_mean_closed_form",
    "selection_posterior_covariance_closed_form",
]

# Below this the posterior normalizer E_{alpha+n}[g] is numerically
# indistinguishable from a degenerate posterior (g = 1 - H concentrating on a
# vertex); refuse to divide by it.
_NORMALIZER_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class PosteriorSummary:
    """Posterior mean, covariance, and log normalizer ln E_{alpha+n}[g]."""

    mean: np.ndarray
    covariance: np.ndarray
    log_normalizer: float

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.covariance, dtype=np.float64)
        if abs(mean.sum() - 1.0) > 1e-12 or np.any(mean < 0.0) or np.any(mean > 1.0):
            raise NumericalError("posterior mean is not a probability vector")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
            raise NumericalError("posterior covariance is not symmetric")
        if np.any(np.abs(cov.sum(axis=1)) > 1e-10):
            raise NumericalError("posterior covariance rows do not sum to zero")
        if np.any(np.diag(cov) < 0.0):
            raise NumericalError("posterior variance is negative")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)


def _check_counts(model: WeightedDirichletModel, n: CountVector) -> None:
    if model.m != n.m:
        raise ValueError(f"dimension mismatch: model m={model.m}, counts m={n.m}")


def _weight_expectation(params: DirichletParams, weight: PolynomialWeight) -> float:
    try:
        value = polynomial_expectation(params, weight)
    except ValueError as exc:
        raise NumericalError(f"degenerate posterior normalizer: {exc}") from exc
    if value < _NORMALIZER_FLOOR:
        raise NumericalError(
            f"posterior normalizer E[g] = {value!r} underflowed below {_NORMALIZER_FLOOR}"
        )
    return value


def posterior_update(model: WeightedDirichletModel, n: CountVector) -> WeightedDirichletModel:
    """Conjugate update: counts n move alpha to alpha + n, weight unchanged."""
    _check_counts(model, n)
    return WeightedDirichletModel(
        DirichletParams(model.params.alpha + n.counts), model.weight
    )


def posterior_mean(model: WeightedDirichletModel, n: CountVector) -> np.ndarray:
    """Posterior mean E[p_i | n] = E_{alpha+n}[p_i g] / E_{alpha+n}[g]."""
    _check_counts(model, n)
    post = DirichletParams(model.params.alpha + n.counts)
    normalizer = _weight_expectation(post, model.weight)
    unit = np.eye(model.m, dtype=np.int64)
    mean = np.array(
        [
            polynomial_expectation(post, model.weight.times_monomial(unit[i]))
            for i in range(model.m)
        ]
    )
    return mean / normalizer


def posterior_covariance(model: WeightedDirichletModel, n: CountVector) -> np.ndarray:
    """Posterior covariance from second moments E[p_k p_l g] / E[g]."""
    _check_counts(model, n)
    post = DirichletParams(model.params.alpha + n.counts)
    normalizer = _weight_expectation(post, model.weight)
    m = model.m
    unit = np.eye(m, dtype=np.int64)
    second = np.empty((m, m))
    for k in range(m):
        for l in range(k, m):
            gkl = model.weight.times_monomial(unit[k] + unit[l])
            second[k, l] = second[l, k] = polynomial_expectation(post, gkl) / normalizer
    mean = posterior_mean(model, n)
    return second - np.outer(mean, mean)


def posterior_summary(model: WeightedDirichletModel, n: CountVector) -> PosteriorSummary:
    """Mean, covariance, and log normalizer for the (model, counts) pair."""
    post = DirichletParams(model.params.alpha + n.counts)
    return PosteriorSummary(
        mean=posterior_mean(model, n),
        covariance=posterior_covariance(model, n),
        log_normalizer=float(np.log(_weight_expectation(post, model.weight))),
    )


def bayes_estimate(model: WeightedDirichletModel, n: CountVector) -> np.ndarray:
    """Squared-error Bayes estimate of p: exactly the posterior mean."""
    return posterior_mean(model, n)


# ---------------------------------------------------------------------------
# Closed-form cross-check paths
# ---------------------------------------------------------------------------


def dirichlet_posterior_mean(params: DirichletParams, n: CountVector) -> np.ndarray:
    """(alpha_i + n_i) / (|alpha| + |n|): the identity-weight closed form."""
    a = params.alpha + n.counts
    return a / a.sum()


def dirichlet_posterior_covariance(params: DirichletParams, n: CountVector) -> np.ndarray:
    """Closed-form Dirichlet posterior covariance for the identity weight."""
    a = params.alpha + n.counts
    total = a.sum()
    cov = (np.diag(a) * total - np.outer(a, a)) / (total**2 * (total + 1.0))
    return cov


def mixture_posterior_mean(params: DirichletParams, r, n: CountVector) -> np.ndarray:
    """Closed-form posterior mean for the monomial-sum weight sum_i p_i^{r_i}.

    The posterior is a convex combination of Dir(alpha + n + r_i e_i); the
    combination weights are gamma ratios evaluated in log space.
    """
    r = np.asarray(r, dtype=np.int64)
    a = params.alpha + n.counts
    total = a.sum()
    log_w = gammaln(a + r) - gammaln(a) - gammaln(total + r)
    log_w -= log_w.max()
    w = np.exp(log_w)
    w /= w.sum()
    m = a.size
    means = (a[None, :] + r[:, None] * np.eye(m)) / (total + r)[:, None]
    return w @ means


def _selection_component_weights(a: np.ndarray, sigma: float) -> tuple[float, np.ndarray]:
    """Mixture weights (w0, w_i) of Dir(a) and Dir(a + 2 e_i) under 1 + sigma H.

    The common factor prod Gamma(a_j) / Gamma(|a| + 2) is removed before
    exponentiation, so the terms stay bounded for any |a|.
    """
    total = a.sum()
    # ratios Gamma(|a|+2)/Gamma(|a|) and Gamma(a_i+2)/Gamma(a_i), in log space
    t0 = float(np.exp(gammaln(total + 2.0) - gammaln(total)))
    terms = sigma * np.exp(gammaln(a + 2.0) - gammaln(a))
    denom = t0 + terms.sum()
    if not np.isfinite(denom) or denom < _NORMALIZER_FLOOR:
        raise NumericalError("selection posterior normalizer degenerated")
    return t0 / denom, terms / denom


def selection_posterior_mean_closed_form(
    params: DirichletParams, sigma: float, n: CountVector
) -> np.ndarray:
    """Explicit posterior mean for g = 1 + sigma H, term by term in log space.

    Independent of the generic moment-ratio path; the two must agree to
    1e-10 relative.
    """
    if sigma < -1.0:
        raise ValueError("sigma must be >= -1")
    if params.m != n.m:
        raise ValueError("dimension mismatch between params and counts")
    a = params.alpha + n.counts
    total = a.sum()
    w0, w = _selection_component_weights(a, float(sigma))
    base_mean = a / total
    shifted = (a[None, :] + 2.0 * np.eye(a.size)) / (total + 2.0)
    return w0 * base_mean + w @ shifted


def selection_posterior_covariance_closed_form(
    params: DirichletParams, sigma: float, n: CountVector
) -> np.ndarray:
    """Explicit posterior covariance for g = 1 + sigma H.

    Combines the component Dirichlet covariances with the spread of the
    component means (law of total covariance over the signed mixture).
    """
    if sigma < -1.0:
        raise ValueError("sigma must be >= -1")
    if params.m != n.m:
        raise ValueError("dimension mismatch between params and counts")
    a = params.alpha + n.counts
    m = a.size
    w0, w = _selection_component_weights(a, float(sigma))
    weights = np.concatenate([[w0], w])
    alphas = np.vstack([a, a[None, :] + 2.0 * np.eye(m)])
    totals = alphas.sum(axis=1)
    means = alphas / totals[:, None]
    mixed_mean = weights @ means
    cov = -np.outer(mixed_mean, mixed_mean)
    for wt, comp_alpha, comp_total, comp_mean in zip(weights, alphas, totals, means):
        comp_cov = (np.diag(comp_alpha) * comp_total - np.outer(comp_alpha, comp_alpha)) / (
            comp_total**2 * (comp_total + 1.0)
        )
        cov += wt * (comp_cov + np.outer(comp_mean, comp_mean))
    return cov
