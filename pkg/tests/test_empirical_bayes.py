"""Marginal likelihood of counts and empirical Bayes plug-in estimates."""

import math

import numpy as np
import pytest
from scipy.special import gammaln

from simplex_priors import (
    CountVector,
    DirichletParams,
    eb_estimate,
    eb_theta_hat,
    log_marginal_likelihood,
    marginal_likelihood,
    plugin_estimate_closed_form,
    posterior_mean,
    selection_model,
)

from oracles import compositions, multinomial_coefficient


def subfamily_log_marginal_sigma0(theta, n1, n):
    """Coefficient-free ln F for alpha = (theta, 1), sigma = 0.

    F = theta Gamma(theta + n1) (n - n1)! / Gamma(theta + 1 + n).
    """
    return (
        np.log(theta)
        + gammaln(theta + n1)
        - gammaln(theta + 1.0 + n)
        + gammaln(n - n1 + 1.0)
    )


def subfamily_marginal_sigma_minus1(theta, n1, n):
    """Coefficient-weighted marginal for alpha = (theta, 1), sigma = -1.

    Re-derived from F = E[prod p^n] (1 - E_{a+n}[H]) / (1 - E_a[H]); the
    factors in theta are exact gamma ratios.
    """
    return np.exp(
        gammaln(n + 1.0)
        + gammaln(n1 + theta)
        - gammaln(n1 + 1.0)
        - gammaln(n + theta + 1.0)
    ) * (theta + n1) * (n - n1 + 1.0) * (theta + 1.0) * (theta + 2.0) / (
        (theta + n + 1.0) * (theta + n + 2.0)
    )


class TestMarginalLikelihood:
    def test_uniform_prior_uniform_predictive(self):
        # alpha = (1,1), sigma = 0: coefficient-weighted marginal = 1/(n+1)
        n_total = 7
        for n1 in range(n_total + 1):
            value = marginal_likelihood(
                CountVector([n1, n_total - n1]), DirichletParams([1.0, 1.0]), 0.0
            )
            weighted = value * math.comb(n_total, n1)
            assert weighted == pytest.approx(1.0 / (n_total + 1.0), rel=1e-12)

    def test_empty_counts(self):
        assert marginal_likelihood(CountVector([0, 0]), DirichletParams([1.0, 1.0]), -1.0) == 1.0

    def test_subfamily_closed_form_sigma_minus1(self):
        # includes the spec's spot check (theta, n1, n) = (2, 1, 3)
        value = marginal_likelihood(CountVector([1, 2]), DirichletParams([2.0, 1.0]), -1.0)
        assert value * 3.0 == pytest.approx(9.0 / 35.0, rel=1e-13)
        assert value * 3.0 == pytest.approx(subfamily_marginal_sigma_minus1(2.0, 1, 3), rel=1e-12)

    def test_closed_form_agreement_random_triples(self):
        rng = np.random.default_rng(41)
        for _ in range(100):
            n = int(rng.integers(1, 15))
            n1 = int(rng.integers(0, n + 1))
            theta = float(10 ** rng.uniform(-2, 2))
            counts = CountVector([n1, n - n1])
            params = DirichletParams([theta, 1.0])
            generic0 = log_marginal_likelihood(counts, params, 0.0)
            assert generic0 == pytest.approx(
                float(subfamily_log_marginal_sigma0(theta, n1, n)), rel=1e-10, abs=1e-10
            )
            generic1 = marginal_likelihood(counts, params, -1.0) * math.comb(n, n1)
            assert generic1 == pytest.approx(
                float(subfamily_marginal_sigma_minus1(theta, n1, n)), rel=1e-10
            )

    def test_value_in_unit_interval(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            m = int(rng.integers(2, 4))
            counts = CountVector(rng.integers(0, 6, m))
            params = DirichletParams(rng.uniform(0.3, 8.0, m))
            value = marginal_likelihood(counts, params, rng.uniform(-1.0, 5.0))
            assert 0.0 < value <= 1.0

    def test_predictive_normalization(self):
        rng = np.random.default_rng(43)
        for m in (2, 3):
            for _ in range(6):
                total = int(rng.integers(1, 9))
                params = DirichletParams(rng.uniform(0.3, 8.0, m))
                sigma = rng.uniform(-1.0, 5.0)
                mass = sum(
                    multinomial_coefficient(counts)
                    * marginal_likelihood(CountVector(counts), params, sigma)
                    for counts in compositions(total, m)
                )
                assert mass == pytest.approx(1.0, abs=1e-10)

    def test_chain_rule_through_posterior_mean(self):
        """F(n' + e_i) = F(n') * posterior_mean(n')[i] for the selection family."""
        rng = np.random.default_rng(44)
        for _ in range(30):
            m = int(rng.integers(2, 4))
            alpha = rng.uniform(0.3, 8.0, m)
            sigma = rng.uniform(-1.0, 5.0)
            base = rng.integers(0, 6, m)
            i = int(rng.integers(m))
            params = DirichletParams(alpha)
            model = selection_model(alpha, sigma)
            stepped = base.copy()
            stepped[i] += 1
            lhs = marginal_likelihood(CountVector(stepped), params, sigma)
            rhs = marginal_likelihood(CountVector(base), params, sigma) * posterior_mean(
                model, CountVector(base)
            )[i]
            assert lhs == pytest.approx(rhs, rel=1e-11)

    def test_rejects_sigma_below_minus_one(self):
        with pytest.raises(ValueError):
            marginal_likelihood(CountVector([1, 1]), DirichletParams([1.0, 1.0]), -2.0)


class TestThetaHat:
    def test_zero_boundary(self):
        fit = eb_theta_hat(0, 5, 0.0)
        assert fit.kind == "zero_boundary"
        assert fit.theta is None
        assert fit.log_marginal == pytest.approx(0.0, abs=1e-12)
        assert fit.degenerate

    def test_infinity(self):
        fit = eb_theta_hat(5, 5, 0.0)
        assert fit.kind == "infinity"
        assert fit.theta is None

    def test_interior_matches_grid_oracle(self):
        fit = eb_theta_hat(3, 10, 0.0)
        assert fit.kind == "interior"
        thetas = np.logspace(-4, 4, 1_000_000)
        values = subfamily_log_marginal_sigma0(thetas, 3, 10)
        oracle = thetas[int(np.argmax(values))]
        assert fit.theta == pytest.approx(oracle, rel=1e-4)

    def test_interior_for_sigma_minus1(self):
        fit = eb_theta_hat(3, 4, -1.0)
        assert fit.kind == "interior"
        thetas = np.logspace(-4, 4, 1_000_000)
        values = subfamily_marginal_sigma_minus1(thetas, 3, 4)
        oracle = thetas[int(np.argmax(values))]
        assert fit.theta == pytest.approx(oracle, rel=1e-4)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            eb_theta_hat(6, 5, 0.0)
        with pytest.raises(ValueError):
            eb_theta_hat(-1, 5, 0.0)


class TestEbEstimate:
    def test_degenerate_zero_boundary(self):
        result = eb_estimate(CountVector([0, 5]), 0.0)
        assert result.degenerate
        assert result.fit.kind == "zero_boundary"
        assert result.estimate == pytest.approx([0.0, 1.0])

    def test_degenerate_infinity(self):
        result = eb_estimate(CountVector([5, 0]), 0.0)
        assert result.degenerate
        assert result.fit.kind == "infinity"
        assert result.estimate == pytest.approx([1.0, 0.0])

    def test_interior_equals_posterior_mean_at_fit(self):
        counts = CountVector([3, 1])
        result = eb_estimate(counts, -1.0)
        assert result.fit.kind == "interior"
        model = selection_model([result.fit.theta, 1.0], -1.0)
        expected = posterior_mean(model, counts)
        assert result.estimate == pytest.approx(expected, abs=1e-10)
        closed = plugin_estimate_closed_form(3, 4, result.fit.theta, -1.0)
        assert result.estimate[0] == pytest.approx(closed, abs=1e-10)

    def test_interior_estimates_live_in_open_simplex(self):
        rng = np.random.default_rng(45)
        for _ in range(25):
            n = int(rng.integers(2, 12))
            n1 = int(rng.integers(1, n))  # off the corners
            result = eb_estimate(CountVector([n1, n - n1]), float(rng.uniform(-1.0, 3.0)))
            if result.fit.kind != "interior":
                continue
            assert np.all(result.estimate > 0.0) and np.all(result.estimate < 1.0)
            assert abs(result.estimate.sum() - 1.0) <= 1e-12

    def test_full_alpha_mode(self):
        result = eb_estimate(CountVector([2, 3, 1]), 0.0, full_alpha=True)
        assert result.estimate.shape == (3,)
        assert abs(result.estimate.sum() - 1.0) <= 1e-12


class TestPluginClosedForms:
    def test_sigma0_shrinkage_form(self):
        # (n/(theta+1+n)) (n1/n) + ((theta+1)/(theta+1+n)) (theta/(theta+1))
        value = plugin_estimate_closed_form(3, 4, 1.0, 0.0)
        assert value == pytest.approx((4 / 6) * (3 / 4) + (2 / 6) * (1 / 2), rel=1e-14)
        assert value == pytest.approx(2.0 / 3.0, rel=1e-14)

    def test_sigma0_equals_posterior_mean(self):
        rng = np.random.default_rng(46)
        for _ in range(20):
            n = int(rng.integers(1, 12))
            n1 = int(rng.integers(0, n + 1))
            theta = float(10 ** rng.uniform(-1.5, 1.5))
            counts = CountVector([n1, n - n1])
            mean = posterior_mean(selection_model([theta, 1.0], 0.0), counts)
            assert plugin_estimate_closed_form(n1, n, theta, 0.0) == pytest.approx(
                mean[0], rel=1e-12
            )

    def test_sigma_minus1_beta32_case(self):
        assert plugin_estimate_closed_form(1, 1, 1.0, -1.0) == pytest.approx(0.6, abs=1e-14)

    def test_unsupported_sigma(self):
        with pytest.raises(ValueError):
            plugin_estimate_closed_form(1, 2, 1.0, 0.5)
