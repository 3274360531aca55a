"""Marginal likelihood of counts and empirical Bayes plug-in estimation.

The marginal F(n; alpha, sigma) is the prior expectation of the ordered
multinomial outcome probability prod p_i^{n_i} (no multinomial coefficient,
which cancels from every argmax). Hyperparameters are fit by maximizing F
over the one-parameter sub-family alpha = (theta, 1, ..., 1); theta = 0 and
theta = +inf are legitimate (degenerate) maximizers and come back tagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .core import (
    CountVector,
    DirichletParams,
    PolynomialWeight,
    WeightedDirichletModel,
    expected_homozygosity,
)
from .posterior import posterior_mean

__all__ = [
    "MarginalFit",
    "EBResult",
    "marginal_likelihood",
    "log_marginal_likelihood",
    "eb_theta_hat",
    "eb_estimate",
    "plugin_estimate_closed_form",
]

_THETA_LO = 1e-6
_THETA_HI = 1e6
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class MarginalFit:
    """A fitted theta: interior value, the 0 boundary, or +infinity."""

    kind: str
    theta: float | None
    log_marginal: float

    _KINDS = ("zero_boundary", "interior", "infinity")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"kind must be one of {self._KINDS}")
        if self.kind == "interior" and (
            self.theta is None or not np.isfinite(self.theta) or self.theta <= 0.0
        ):
            raise ValueError("interior theta must be finite and positive")
        if self.kind != "interior" and self.theta is not None:
            raise ValueError("boundary fits carry no finite theta")
        if self.kind in ("zero_boundary", "interior") and not np.isfinite(self.log_marginal):
            raise ValueError("log marginal must be finite for attained maxima")

    @property
    def degenerate(self) -> bool:
        return self.kind != "interior"


@dataclass(frozen=True, eq=False)
class EBResult:
    """Empirical Bayes estimate with its hyperparameter fit and degeneracy flag."""

    estimate: np.ndarray
    fit: MarginalFit
    degenerate: bool


def log_marginal_likelihood(n: CountVector, params: DirichletParams, sigma: float) -> float:
    """ln F(n; alpha, sigma) = ln E_alpha[prod p^n] + ln[(1+sigma E_{alpha+n}[H]) / (1+sigma E_alpha[H])]."""
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma < -1.0:
        raise ValueError("sigma must be finite and >= -1")
    if params.m != n.m:
        raise ValueError("dimension mismatch between params and counts")
    alpha = params.alpha
    counts = np.asarray(n.counts, dtype=np.float64)
    log_moment = (
        gammaln(params.total)
        - gammaln(params.total + n.total)
        + (gammaln(alpha + counts) - gammaln(alpha)).sum()
    )
    posterior = DirichletParams(alpha + counts)
    with np.errstate(divide="ignore"):
        tilt = math.log1p(sigma * expected_homozygosity(posterior)) - math.log1p(
            sigma * expected_homozygosity(params)
        )
    return float(log_moment + tilt)


def marginal_likelihood(n: CountVector, params: DirichletParams, sigma: float) -> float:
    """F(n; alpha, sigma) in (0, 1]: the ordered-outcome marginal probability."""
    return float(np.exp(log_marginal_likelihood(n, params, sigma)))


def _sub_family_params(theta: float, m: int) -> DirichletParams:
    alpha = np.ones(m)
    alpha[0] = theta
    return DirichletParams(alpha)


def _golden_section_max(f, lo: float, hi: float, rel_tol: float = 1e-8) -> float:
    """Golden-section maximizer on [lo, hi] in log-theta space."""
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > rel_tol:  # rel_tol applies directly: coordinates are log(theta)
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
    return 0.5 * (lo + hi)


def eb_theta_hat(n1: int, n: int, sigma: float, m: int = 2) -> MarginalFit:
    """Maximize the marginal of counts (n1, n - n1, 0...) over theta in (0, inf].

    The scan is geometric on [1e-6, 1e6]; a maximum pinned at either end with
    the corresponding limit dominating is declared a boundary kind (theta ->
    0 gives the point mass delta_0, theta -> inf gives delta_1). Ties break
    toward an interior fit.
    """
    n1, n = int(n1), int(n)
    if not (0 <= n1 <= n):
        raise ValueError("need 0 <= n1 <= n")
    if m < 2:
        raise ValueError("m must be >= 2")
    counts = np.zeros(m, dtype=np.int64)
    counts[0] = n1
    counts[1] = n - n1
    return _maximize_marginal_over_theta(CountVector(counts), float(sigma))


def _maximize_marginal_over_theta(n: CountVector, sigma: float) -> MarginalFit:
    m = n.m

    def log_marginal(log_theta: float) -> float:
        return log_marginal_likelihood(n, _sub_family_params(math.exp(log_theta), m), sigma)

    lo, hi = math.log(_THETA_LO), math.log(_THETA_HI)
    grid = np.linspace(lo, hi, 241)
    values = np.array([log_marginal(t) for t in grid])
    peak = int(np.argmax(values))

    log_theta = _golden_section_max(
        log_marginal, grid[max(peak - 1, 0)], grid[min(peak + 1, grid.size - 1)]
    )
    interior_value = log_marginal(log_theta)

    # The supremum may sit at either end of (0, inf); compare the attained
    # interior value with the exact limits, breaking ties toward interior.
    zero_limit = _limit_log_marginal_theta_zero(n, sigma)
    inf_limit = _limit_log_marginal_theta_inf(n, sigma)
    if inf_limit > interior_value and inf_limit >= zero_limit:
        return MarginalFit("infinity", None, inf_limit)
    if zero_limit > interior_value:
        return MarginalFit("zero_boundary", None, zero_limit)
    return MarginalFit("interior", math.exp(log_theta), interior_value)


def _limit_log_marginal_theta_zero(n: CountVector, sigma: float) -> float:
    """Limit of ln F as theta -> 0.

    For sigma > -1 (or m > 2) the prior collapses to p_1 = 0, so the limit is
    finite only when n_1 = 0 and equals the marginal of the remaining counts
    under the reduced uniform-base model. For sigma = -1 and m = 2 the weight
    1 - H vanishes at that point mass and fights the collapse; the tilted
    prior converges to Beta(1, 2) instead, giving a finite limit for every
    n_1: 2 (n - n_1 + 1) / ((n + 1)(n + 2)).
    """
    counts = n.counts
    total = n.total
    if sigma == -1.0 and n.m == 2:
        # coefficient-free: 2 n_1! (n - n_1 + 1)! / (n + 2)!
        n1 = int(counts[0])
        return float(
            math.log(2.0)
            + math.lgamma(n1 + 1.0)
            + math.lgamma(total - n1 + 2.0)
            - math.lgamma(total + 3.0)
        )
    if counts[0] != 0:
        return float("-inf")
    if n.m == 2:
        # all mass on coordinate 2: prod p^n -> 1 and the tilt cancels
        return 0.0
    reduced = CountVector(counts[1:])
    return log_marginal_likelihood(reduced, DirichletParams(np.ones(n.m - 1)), sigma)


def _limit_log_marginal_theta_inf(n: CountVector, sigma: float) -> float:
    """Limit of ln F as theta -> inf: the prior collapses to p_1 = 1.

    The selection tilt cancels in the limit for every sigma >= -1, so the
    limit is 1 when all counts landed on coordinate 1 and 0 otherwise.
    """
    return 0.0 if int(n.counts[0]) == n.total else float("-inf")


def eb_estimate(n: CountVector, sigma: float, full_alpha: bool = False) -> EBResult:
    """Plug-in empirical Bayes estimate of p for observed counts.

    Fits theta in the sub-family alpha = (theta, 1, ..., 1) by marginal
    maximum likelihood, then returns the posterior mean at the fit.
    Degenerate fits return the limiting point mass estimate, flagged.
    ``full_alpha`` switches to coordinate-wise cycles over all of alpha.
    """
    sigma = float(sigma)
    if full_alpha:
        return _eb_estimate_full_alpha(n, sigma)
    fit = _maximize_marginal_over_theta(n, sigma)
    m = n.m
    if fit.kind == "zero_boundary":
        return EBResult(_degenerate_zero_estimate(n), fit, True)
    if fit.kind == "infinity":
        estimate = np.zeros(m)
        estimate[0] = 1.0
        return EBResult(estimate, fit, True)
    model = WeightedDirichletModel(
        _sub_family_params(fit.theta, m),
        PolynomialWeight.homozygosity_selection(m, sigma),
    )
    return EBResult(posterior_mean(model, n), fit, False)


def _degenerate_zero_estimate(n: CountVector) -> np.ndarray:
    """Posterior mean of the theta -> 0 limit: p_1 = 0, uniform base on the rest."""
    counts = n.counts
    rest = counts[1:] + 1.0
    estimate = np.zeros(n.m)
    estimate[1:] = rest / rest.sum()
    return estimate


def _eb_estimate_full_alpha(n: CountVector, sigma: float) -> EBResult:
    """Marginal MLE over all of alpha by coordinate-wise golden-section cycles."""
    m = n.m
    log_alpha = np.zeros(m)
    best = -np.inf
    for _ in range(60):
        improved = False
        for i in range(m):
            def objective(t: float, i: int = i) -> float:
                trial = log_alpha.copy()
                trial[i] = t
                return log_marginal_likelihood(
                    n, DirichletParams(np.exp(trial)), sigma
                )

            log_alpha[i] = _golden_section_max(
                objective, math.log(_THETA_LO), math.log(_THETA_HI)
            )
            value = objective(log_alpha[i])
            if value > best + 1e-12:
                best, improved = value, True
        if not improved:
            break
    params = DirichletParams(np.exp(log_alpha))
    fit = MarginalFit("interior", float(params.alpha[0]), best)
    model = WeightedDirichletModel(params, PolynomialWeight.homozygosity_selection(m, sigma))
    return EBResult(posterior_mean(model, n), fit, False)


def plugin_estimate_closed_form(n1: int, n: int, theta: float, sigma: float) -> float:
    """Closed-form plug-in estimate of p_1 for m = 2 and sigma in {0, -1}.

    The sigma = 0 form is the shrinkage combination of the sample frequency
    with the prior mean; the sigma = -1 form carries the homozygosity
    correction ratio. Used as a cross-check against the generic posterior
    mean.
    """
    n1, n = int(n1), int(n)
    theta = float(theta)
    if sigma == 0.0:
        return (n / (theta + 1.0 + n)) * (n1 / n if n else 0.0) + (
            (theta + 1.0) / (theta + 1.0 + n)
        ) * (theta / (theta + 1.0))
    if sigma == -1.0:
        top = 1.0 - ((theta + n1 + 1.0) ** 2 + (n - n1 + 1.0) ** 2 + (theta + n + 2.0)) / (
            (theta + n + 3.0) * (theta + n + 2.0)
        )
        bottom = 1.0 - ((theta + n1) ** 2 + (n - n1 + 1.0) ** 2 + (theta + n + 1.0)) / (
            (theta + n + 2.0) * (theta + n + 1.0)
        )
        return (theta + n1) / (theta + 1.0 + n) * top / bottom
    raise ValueError("closed forms exist only for sigma = 0 and sigma = -1")
