"""Random variate generation for selection models (weight 1 + sigma H).

``gibbs_chain`` runs a systematic-scan Gibbs sampler whose coordinate
updates invert the exact full-conditional CDF (a signed combination of
regularized incomplete beta functions) by bisection. ``rejection_sample``
draws exact i.i.d. variates by accept/reject from the Dirichlet base and
serves as the independent oracle for the chain.

Randomness comes from numpy's counter-based Philox generator: chain k of a
multi-chain run uses ``Philox(key=seed).jumped(k)``, so chains with distinct
stream indices are independent and each is reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from . import _kernels
from .core import NumericalError, WeightedDirichletModel

__all__ = [
    "ChainConfig",
    "ChainSummary",
    "RejectionResult",
    "conditional_cdf",
    "gibbs_chain",
    "rejection_sample",
]


@dataclass(frozen=True)
class ChainConfig:
    """Gibbs chain length, burn-in, seed, and thinning.

    ``burn_in=None`` defaults to 10% of ``iterations``. At least one retained
    draw is required: floor((iterations - burn_in) / thin) >= 1.
    """

    iterations: int
    seed: int
    burn_in: int | None = None
    thin: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", self.iterations // 10)
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.retained < 1:
            raise ValueError("no draws retained: lengthen the chain or reduce thinning")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    @property
    def retained(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass(frozen=True, eq=False)
class ChainSummary:
    """Per-coordinate moments and lag-1 autocorrelation of the retained draws."""

    mean: np.ndarray
    variance: np.ndarray
    lag1_autocorrelation: np.ndarray
    retained: int
    slice_restarts: int = 0

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        if np.any(mean < 0.0) or np.any(mean > 1.0) or abs(mean.sum() - 1.0) > 1e-6:
            raise NumericalError("chain mean is not a probability vector")
        if np.any(np.asarray(self.variance) < 0.0):
            raise NumericalError("chain variance is negative")


@dataclass(frozen=True, eq=False)
class RejectionResult:
    """Exact i.i.d. draws with the observed acceptance rate."""

    draws: np.ndarray
    acceptance_rate: float
    proposals: int


def _selection_sigma(model: WeightedDirichletModel) -> float:
    sigma = model.weight.as_selection_sigma()
    if sigma is None:
        raise ValueError("sampler requires the selection weight 1 + sigma * H")
    return float(sigma)


def _stream_generator(seed: int, stream: int) -> np.random.Generator:
    bit_generator = np.random.Philox(key=int(seed))
    if stream:
        bit_generator = bit_generator.jumped(int(stream))
    return np.random.Generator(bit_generator)


def conditional_cdf(
    model: WeightedDirichletModel, i: int, others, t: float
) -> float:
    """CDF at t of the scaled conditional p_i / u given the other coordinates.

    ``others`` holds the fixed values of the free coordinates (all but the
    last) excluding coordinate ``i``; u = 1 - sum(others) is the length of
    the slice on which p_i moves, and t in [0, 1] is the position on it.
    """
    sigma = _selection_sigma(model)
    m = model.m
    if not 0 <= i <= m - 2:
        raise ValueError(f"i must index a free coordinate: 0 <= i <= {m - 2}")
    others = np.asarray(others, dtype=np.float64)
    if others.shape != (m - 2,):
        raise ValueError(f"others must hold the {m - 2} remaining free coordinates")
    if np.any(others < 0.0):
        raise ValueError("fixed coordinates must be nonnegative")
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    u = 1.0 - others.sum()
    if u <= 0.0:
        raise ValueError(f"degenerate slice: fixed coordinates leave u = {u!r}")
    if t == 0.0:
        return 0.0
    if t == 1.0:
        return 1.0
    c = float(np.dot(others, others))
    alpha = model.params.alpha
    ai, am = float(alpha[i]), float(alpha[-1])
    w0, w1, w2, total = _kernels._beta_kernel_weights(ai, am, sigma, u, c)
    shifts = np.array([ai, ai + 1.0, ai + 2.0])
    value = np.dot([w0, w1, w2], betainc(shifts, am, t)) / total
    return float(min(max(value, 0.0), 1.0))


def gibbs_chain(
    model: WeightedDirichletModel, config: ChainConfig, stream: int = 0
) -> tuple[np.ndarray, ChainSummary]:
    """Systematic-scan Gibbs sampler for the selection model.

    Starts at the barycenter, scans the free coordinates in order each
    iteration, and updates each by inverse-CDF bisection on its full
    conditional. Deterministic given (seed, stream); returns the retained
    draws as an (retained, m) array of simplex rows plus a summary.
    """
    sigma = _selection_sigma(model)
    uniforms = _stream_generator(config.seed, stream).random(
        (config.iterations, model.m - 1)
    )
    chain, restarts = _kernels.gibbs_kernel(model.params.alpha, sigma, uniforms)
    draws = chain[config.burn_in :: config.thin][: config.retained]
    return draws, summarize_chain(draws, restarts)


def summarize_chain(draws: np.ndarray, slice_restarts: int = 0) -> ChainSummary:
    """Mean, variance, and lag-1 autocorrelation of an (R, m) draw matrix."""
    centered = draws - draws.mean(axis=0)
    denom = (centered**2).sum(axis=0)
    lag1 = np.where(
        denom > 0.0,
        (centered[:-1] * centered[1:]).sum(axis=0) / np.where(denom > 0.0, denom, 1.0),
        0.0,
    )
    return ChainSummary(
        mean=draws.mean(axis=0),
        variance=draws.var(axis=0, ddof=1),
        lag1_autocorrelation=lag1,
        retained=draws.shape[0],
        slice_restarts=slice_restarts,
    )


def rejection_sample(
    model: WeightedDirichletModel, count: int, seed: int, stream: int = 0
) -> RejectionResult:
    """Exact i.i.d. draws from the selection model by accept/reject.

    Proposes from Dirichlet(alpha) and accepts with probability g(p) / M,
    where M = 1 + sigma (sigma >= 0) or 1 + sigma / m (sigma < 0) bounds g
    over the simplex (H ranges over [1/m, 1]). Raises if the acceptance rate
    over the first 1e5 proposals falls below 1e-4.
    """
    sigma = _selection_sigma(model)
    if count < 1:
        raise ValueError("count must be >= 1")
    m = model.m
    bound = 1.0 + sigma if sigma >= 0.0 else 1.0 + sigma / m
    rng = _stream_generator(seed, stream)
    alpha = model.params.alpha
    collected: list[np.ndarray] = []
    accepted = 0
    proposals = 0
    while accepted < count:
        batch = max(count - accepted, 1024)
        candidates = rng.dirichlet(alpha, size=batch)
        g = 1.0 + sigma * np.einsum("ij,ij->i", candidates, candidates)
        keep = rng.random(batch) * bound < g
        proposals += batch
        kept = candidates[keep]
        if kept.size:
            collected.append(kept)
            accepted += kept.shape[0]
        if proposals >= 100_000 and accepted < 1e-4 * proposals:
            raise NumericalError(
                f"acceptance rate {accepted / proposals:.2e} after {proposals} proposals; "
                "the weight is numerically degenerate"
            )
    draws = np.vstack(collected)[:count]
    return RejectionResult(
        draws=draws, acceptance_rate=accepted / proposals, proposals=proposals
    )
