"""Conjugate priors on the unit simplex.

Weighted Dirichlet models (Dirichlet, finite Dirichlet mixtures, and the
selection family 1 + sigma * H), with exact conjugate updating, Bayes
estimators, maximum-likelihood and empirical Bayes fitting, and Gibbs /
rejection samplers.
"""

from .core import (
    CountVector,
    DirichletParams,
    MixtureDecomposition,
    NonConvergenceError,
    NumericalError,
    PolynomialWeight,
    SimplexPoint,
    SimplexPriorsError,
    WeightedDirichletModel,
    dirichlet_log_density,
    dirichlet_model,
    dirichlet_moment,
    expected_homozygosity,
    log_gamma_family,
    mixture_decomposition,
    mixture_model,
    polynomial_expectation,
    selection_model,
    weighted_log_density,
)
from .empirical_bayes import (
    EBResult,
    MarginalFit,
    eb_estimate,
    eb_theta_hat,
    log_marginal_likelihood,
    marginal_likelihood,
    plugin_estimate_closed_form,
)
from .mle import (
    FrequencySample,
    SigmaEstimate,
    dirichlet_log_likelihood,
    dirichlet_mle,
    selection_log_likelihood,
    selection_log_likelihood_limit,
    selection_mle_joint,
    sigma_mle,
    sigma_score,
)
from .posterior import (
    PosteriorSummary,
    bayes_estimate,
    dirichlet_posterior_covariance,
    dirichlet_posterior_mean,
    mixture_posterior_mean,
    posterior_covariance,
    posterior_mean,
    posterior_summary,
    posterior_update,
    selection_posterior_covariance_closed_form,
    selection_posterior_mean_closed_form,
)
from .sampler import (
    ChainConfig,
    ChainSummary,
    RejectionResult,
    conditional_cdf,
    gibbs_chain,
    rejection_sample,
    summarize_chain,
)

__version__ = "0.1.0"

__all__ = [
    "CountVector",
    "DirichletParams",
    "MixtureDecomposition",
    "NonConvergenceError",
    "NumericalError",
    "PolynomialWeight",
    "SimplexPoint",
    "SimplexPriorsError",
    "WeightedDirichletModel",
    "dirichlet_log_density",
    "dirichlet_model",
    "dirichlet_moment",
    "expected_homozygosity",
    "log_gamma_family",
    "mixture_decomposition",
    "mixture_model",
    "polynomial_expectation",
    "selection_model",
    "weighted_log_density",
    "EBResult",
    "MarginalFit",
    "eb_estimate",
    "eb_theta_hat",
    "log_marginal_likelihood",
    "marginal_likelihood",
    "plugin_estimate_closed_form",
    "FrequencySample",
    "SigmaEstimate",
    "dirichlet_log_likelihood",
    "dirichlet_mle",
    "selection_log_likelihood",
    "selection_log_likelihood_limit",
    "selection_mle_joint",
    "sigma_mle",
    "sigma_score",
    "PosteriorSummary",
    "bayes_estimate",
    "dirichlet_posterior_covariance",
    "dirichlet_posterior_mean",
    "mixture_posterior_mean",
    "posterior_covariance",
    "posterior_mean",
    "posterior_summary",
    "posterior_update",
    "selection_posterior_covariance_closed_form",
    "selection_posterior_mean_closed_form",
    "ChainConfig",
    "ChainSummary",
    "RejectionResult",
    "conditional_cdf",
    "gibbs_chain",
    "rejection_sample",
    "summarize_chain",
]
