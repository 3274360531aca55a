"""Domain types and density/moment primitives for weighted Dirichlet models.

A model is a pair (alpha, g): a Dirichlet base measure with concentration
``alpha`` tilted by a nonnegative polynomial weight ``g`` and renormalized.
The identity weight recovers the plain Dirichlet; ``1 + sigma * H`` with
H(p) = sum p_i^2 gives the selection model; sums of monomials give finite
Dirichlet mixtures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy
from scipy.stats import qmc

from .special import log_gamma_family

__all__ = [
    "SimplexPriorsError",
    "NumericalError",
    "NonConvergenceError",
    "SimplexPoint",
    "DirichletParams",
    "CountVector",
    "PolynomialWeight",
    "WeightedDirichletModel",
    "MixtureDecomposition",
    "dirichlet_model",
    "selection_model",
    "mixture_model",
    "log_gamma_family",
    "dirichlet_log_density",
    "dirichlet_moment",
    "polynomial_expectation",
    "expected_homozygosity",
    "weighted_log_density",
    "mixture_decomposition",
]

SUM_TOLERANCE = 1e-9
# Cushion below which an evaluated weight is treated as exactly zero; more
# negative values indicate a genuinely invalid (sign-changing) weight.
WEIGHT_NEGATIVITY_CUSHION = 1e-12


class SimplexPriorsError(Exception):
    """Base class for errors raised by this package."""


class NumericalError(SimplexPriorsError):
    """A computation degenerated numerically (underflow, lost precision)."""


class NonConvergenceError(NumericalError):
    """An iterative fit exhausted its iteration budget."""


def _as_float_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SimplexPoint:
    """A point of the unit simplex: m probabilities summing to one.

    Inputs whose sum deviates from 1 by at most 1e-9 are renormalized;
    larger deviations are rejected.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = _as_float_vector(self.values, "values")
        if arr.size < 2:
            raise ValueError("a simplex point needs at least 2 coordinates")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("simplex coordinates must lie in [0, 1]")
        total = arr.sum()
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"coordinates sum to {total!r}, not 1 within {SUM_TOLERANCE}")
        arr = np.clip(arr / total, 0.0, 1.0)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def m(self) -> int:
        return self.values.size

    @property
    def interior(self) -> bool:
        return bool(np.all(self.values > 0.0))

    def homozygosity(self) -> float:
        """H(p) = sum p_i^2, the two-draw coincidence probability."""
        return float(np.dot(self.values, self.values))


@dataclass(frozen=True, eq=False)
class DirichletParams:
    """Concentration vector of a Dirichlet distribution; all entries > 0."""

    alpha: np.ndarray

    def __post_init__(self):
        arr = _as_float_vector(self.alpha, "alpha")
        if arr.size < 2:
            raise ValueError("alpha needs at least 2 entries")
        if np.any(arr <= 0.0):
            raise ValueError("all concentration parameters must be strictly positive")
        arr.setflags(write=False)
        object.__setattr__(self, "alpha", arr)

    @property
    def m(self) -> int:
        return self.alpha.size

    @property
    def total(self) -> float:
        return float(self.alpha.sum())


@dataclass(frozen=True, eq=False)
class CountVector:
    """Multinomial category counts; the sufficient statistic for updating."""

    counts: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.counts)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("counts must be a 1-D vector of length >= 2")
        if not np.issubdtype(arr.dtype, np.integer):
            rounded = np.rint(np.asarray(arr, dtype=np.float64))
            if not np.all(np.isfinite(rounded)) or np.any(rounded != arr):
                raise ValueError("counts must be integers")
            arr = rounded
        arr = arr.astype(np.int64)
        if np.any(arr < 0):
            raise ValueError("counts must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)

    @property
    def m(self) -> int:
        return self.counts.size

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _halton_simplex_points(m: int, count: int) -> np.ndarray:
    """Deterministic quasi-random interior points of the m-simplex."""
    sampler = qmc.Halton(d=m, scramble=False, seed=0)
    u = sampler.random(count + 1)[1:]  # first Halton point is the origin
    e = -np.log1p(-np.clip(u, 0.0, 1.0 - 1e-12))
    e = np.maximum(e, 1e-12)
    return e / e.sum(axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class PolynomialWeight:
    """A weight g(p) = sum_t c_t * prod_i p_i^{k_ti} on the simplex.

    Build through the classmethods: they guarantee nonnegativity of g on
    the simplex, which arbitrary term lists do not.
    """

    coefficients: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        coefs = _as_float_vector(self.coefficients, "coefficients")
        powers = np.asarray(self.powers)
        if powers.ndim != 2 or powers.shape[0] != coefs.size:
            raise ValueError("powers must have shape (n_terms, m)")
        if not np.issubdtype(powers.dtype, np.integer) or np.any(powers < 0):
            raise ValueError("powers must be nonnegative integers")
        powers = powers.astype(np.int64)
        if coefs.size == 0:
            raise ValueError("a weight needs at least one term")
        coefs, powers = _merge_terms(coefs, powers)
        coefs.setflags(write=False)
        powers.setflags(write=False)
        object.__setattr__(self, "coefficients", coefs)
        object.__setattr__(self, "powers", powers)

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, m: int, value: float = 1.0) -> "PolynomialWeight":
        """The weight g = value > 0; value 1 recovers the plain Dirichlet."""
        if m < 2:
            raise ValueError("m must be >= 2")
        if value <= 0.0:
            raise ValueError("constant weight must be positive")
        return cls(np.array([value]), np.zeros((1, m), dtype=np.int64))

    @classmethod
    def homozygosity_selection(cls, m: int, sigma: float) -> "PolynomialWeight":
        """The selection weight g = 1 + sigma * H(p); requires sigma >= -1."""
        if m < 2:
            raise ValueError("m must be >= 2")
        sigma = float(sigma)
        if not np.isfinite(sigma) or sigma < -1.0:
            raise ValueError("sigma must be finite and >= -1 for a nonnegative weight")
        if sigma == 0.0:
            return cls.constant(m)
        coefs = np.concatenate([[1.0], np.full(m, sigma)])
        powers = np.vstack([np.zeros((1, m), dtype=np.int64), 2 * np.eye(m, dtype=np.int64)])
        return cls(coefs, powers)

    @classmethod
    def monomial_sum(cls, r) -> "PolynomialWeight":
        """The mixture weight g = sum_i p_i^{r_i} with integer r_i >= 1."""
        r = np.asarray(r)
        if r.ndim != 1 or r.size < 2:
            raise ValueError("r must be a 1-D vector of length >= 2")
        if not np.issubdtype(r.dtype, np.integer) or np.any(r < 1):
            raise ValueError("exponents r_i must be integers >= 1")
        m = r.size
        powers = np.eye(m, dtype=np.int64) * r.astype(np.int64)
        return cls(np.ones(m), powers)

    @classmethod
    def from_terms(cls, coefficients, powers) -> "PolynomialWeight":
        """Build from raw terms, verifying g >= 0 numerically.

        Weights with any negative coefficient are checked at 10,000
        quasi-random interior points and at all vertices; a value below
        -1e-12 rejects the weight. All-nonnegative coefficients are safe
        by construction and skip the scan.
        """
        weight = cls(np.asarray(coefficients, dtype=np.float64), np.asarray(powers))
        if np.all(weight.coefficients >= 0.0):
            return weight
        m = weight.m
        points = np.vstack([_halton_simplex_points(m, 10_000), np.eye(m)])
        values = weight.evaluate(points)
        worst = float(values.min())
        if worst < -WEIGHT_NEGATIVITY_CUSHION:
            raise ValueError(
                f"weight is negative on the simplex (min sampled value {worst:.3e})"
            )
        return weight

    # -- algebra ------------------------------------------------------------

    @property
    def m(self) -> int:
        return self.powers.shape[1]

    @property
    def n_terms(self) -> int:
        return self.coefficients.size

    @property
    def is_constant(self) -> bool:
        return self.n_terms == 1 and not self.powers.any()

    def evaluate(self, p) -> float | np.ndarray:
        """g at one point (m,) / SimplexPoint, or rowwise on an (N, m) array."""
        values = p.values if isinstance(p, SimplexPoint) else np.asarray(p, dtype=np.float64)
        if values.shape[-1] != self.m:
            raise ValueError(f"point has {values.shape[-1]} coordinates, weight has m={self.m}")
        monomials = np.prod(values[..., None, :] ** self.powers, axis=-1)
        result = monomials @ self.coefficients
        return float(result) if result.ndim == 0 else result

    def times_monomial(self, exponents) -> "PolynomialWeight":
        """The weight p^k * g(p); still a polynomial weight, still >= 0."""
        k = np.asarray(exponents, dtype=np.int64)
        if k.shape != (self.m,) or np.any(k < 0):
            raise ValueError("exponents must be a nonnegative integer m-vector")
        return PolynomialWeight(self.coefficients.copy(), self.powers + k[None, :])

    def __add__(self, other: "PolynomialWeight") -> "PolynomialWeight":
        if not isinstance(other, PolynomialWeight):
            return NotImplemented
        if other.m != self.m:
            raise ValueError("cannot add weights of different dimension")
        return PolynomialWeight(
            np.concatenate([self.coefficients, other.coefficients]),
            np.vstack([self.powers, other.powers]),
        )

    def as_selection_sigma(self) -> float | None:
        """Return sigma if g is (a positive multiple of) 1 + sigma * H, else None."""
        if self.is_constant:
            return 0.0
        const_rows = ~self.powers.any(axis=1)
        quad_rows = (self.powers.sum(axis=1) == 2) & ((self.powers == 2).any(axis=1))
        if not (const_rows | quad_rows).all() or const_rows.sum() != 1:
            return None
        if quad_rows.sum() != self.m:
            return None
        base = float(self.coefficients[const_rows][0])
        quad = self.coefficients[quad_rows]
        if base <= 0.0 or np.ptp(quad) > 1e-15 * max(1.0, abs(quad[0])):
            return None
        return float(quad[0] / base)


def _merge_terms(coefs: np.ndarray, powers: np.ndarray):
    """Combine duplicate monomials and drop exact zeros (deterministic order)."""
    order = np.lexsort(powers.T[::-1])
    coefs, powers = coefs[order], powers[order]
    keep_c, keep_p = [], []
    for c, k in zip(coefs, powers):
        if keep_p and np.array_equal(keep_p[-1], k):
            keep_c[-1] += c
        else:
            keep_c.append(c)
            keep_p.append(k)
    coefs = np.array(keep_c, dtype=np.float64)
    powers = np.array(keep_p, dtype=np.int64)
    nonzero = coefs != 0.0
    if not nonzero.any():
        raise ValueError("weight is identically zero")
    return coefs[nonzero], powers[nonzero]


@dataclass(frozen=True, eq=False)
class WeightedDirichletModel:
    """One member of the family: Dirichlet(alpha) tilted by weight g."""

    params: DirichletParams
    weight: PolynomialWeight

    def __post_init__(self):
        if self.params.m != self.weight.m:
            raise ValueError(
                f"params (m={self.params.m}) and weight (m={self.weight.m}) disagree"
            )
        polynomial_expectation(self.params, self.weight)  # raises if E[g] <= 0

    @property
    def m(self) -> int:
        return self.params.m


def dirichlet_model(alpha) -> WeightedDirichletModel:
    """Plain Dirichlet(alpha) as a member of the family (identity weight)."""
    params = alpha if isinstance(alpha, DirichletParams) else DirichletParams(np.asarray(alpha))
    return WeightedDirichletModel(params, PolynomialWeight.constant(params.m))


def selection_model(alpha, sigma: float) -> WeightedDirichletModel:
    """Dirichlet(alpha) tilted by 1 + sigma * H; sigma >= -1."""
    params = alpha if isinstance(alpha, DirichletParams) else DirichletParams(np.asarray(alpha))
    return WeightedDirichletModel(params, PolynomialWeight.homozygosity_selection(params.m, sigma))


def mixture_model(alpha, r) -> WeightedDirichletModel:
    """Dirichlet(alpha) tilted by sum_i p_i^{r_i}: a Dirichlet mixture."""
    params = alpha if isinstance(alpha, DirichletParams) else DirichletParams(np.asarray(alpha))
    return WeightedDirichletModel(params, PolynomialWeight.monomial_sum(r))


# ---------------------------------------------------------------------------
# Densities and moments
# ---------------------------------------------------------------------------


def _check_same_m(a: int, b: int, what: str) -> None:
    if a != b:
        raise ValueError(f"dimension mismatch: {what} ({a} vs {b})")


def dirichlet_log_density(params: DirichletParams, p: SimplexPoint) -> float:
    """Log density of Dirichlet(alpha) at p, computed entirely in log space.

    Boundary points give -inf where an exponent alpha_i - 1 is positive and
    +inf where it is negative; the alpha_i = 1 terms vanish exactly.
    """
    _check_same_m(params.m, p.m, "params vs point")
    alpha = params.alpha
    log_norm = gammaln(params.total) - gammaln(alpha).sum()
    with np.errstate(divide="ignore"):
        kernel = xlogy(alpha - 1.0, p.values).sum()
    return float(log_norm + kernel)


def _log_moment(alpha: np.ndarray, exponents: np.ndarray) -> float:
    """ln E_alpha[prod p_i^{n_i}] as a sum of lgamma differences."""
    total = alpha.sum()
    return float(
        gammaln(total)
        - gammaln(total + exponents.sum())
        + (gammaln(alpha + exponents) - gammaln(alpha)).sum()
    )


def dirichlet_moment(params: DirichletParams, exponents: CountVector) -> float:
    """Mixed moment E_alpha[prod p_i^{n_i}]; exactly 1 for zero exponents."""
    _check_same_m(params.m, exponents.m, "params vs exponents")
    return float(np.exp(_log_moment(params.alpha, np.asarray(exponents.counts, dtype=np.float64))))


def polynomial_expectation(params: DirichletParams, weight: PolynomialWeight) -> float:
    """E_alpha[g] by linearity over monomial terms; must be positive."""
    _check_same_m(params.m, weight.m, "params vs weight")
    moments = np.exp([_log_moment(params.alpha, k.astype(np.float64)) for k in weight.powers])
    value = float(np.dot(weight.coefficients, moments))
    if value <= 0.0:
        raise ValueError(f"E[g] = {value!r} is not positive; the weight is invalid for alpha")
    return value


def expected_homozygosity(params: DirichletParams) -> float:
    """E_alpha[H] = sum alpha_i (alpha_i + 1) / (|alpha| (|alpha| + 1))."""
    alpha = params.alpha
    total = params.total
    return float(np.dot(alpha, alpha + 1.0) / (total * (total + 1.0)))


def weighted_log_density(model: WeightedDirichletModel, p: SimplexPoint) -> float:
    """Log density of the weighted model: log f_alpha(p) + log g(p) - log E[g].

    Returns -inf where g vanishes; a g value below the negativity cushion
    means the weight invariant was violated and raises.
    """
    g = model.weight.evaluate(p)
    if g < -WEIGHT_NEGATIVITY_CUSHION:
        raise ValueError(f"weight evaluated to {g!r} < 0 at a simplex point")
    base = dirichlet_log_density(model.params, p)
    if g <= 0.0:
        return float("-inf")
    return base + np.log(g) - np.log(polynomial_expectation(model.params, model.weight))


@dataclass(frozen=True)
class MixtureDecomposition:
    """A weighted model rewritten as sum_t w_t Dir(alpha + k_t), weights summing to 1.

    ``signed`` marks decompositions with negative weights (possible when g has
    negative coefficients, e.g. 1 - H): still a valid density pointwise, just
    not a convex combination.
    """

    components: tuple[tuple[float, DirichletParams], ...]
    signed: bool

    def log_density(self, p: SimplexPoint) -> float:
        value = sum(
            w * np.exp(dirichlet_log_density(params, p)) for w, params in self.components
        )
        return float(np.log(value)) if value > 0.0 else float("-inf")


def mixture_decomposition(model: WeightedDirichletModel) -> MixtureDecomposition:
    """Decompose the model into component Dirichlets, one per monomial term."""
    params, weight = model.params, model.weight
    contributions = weight.coefficients * np.exp(
        [_log_moment(params.alpha, k.astype(np.float64)) for k in weight.powers]
    )
    mass = contributions.sum()
    if mass <= 0.0:
        raise ValueError("total mixture mass is nonpositive; invalid weight")
    weights = contributions / mass
    components = tuple(
        (float(w), DirichletParams(params.alpha + k))
        for w, k in zip(weights, weight.powers)
    )
    return MixtureDecomposition(components=components, signed=bool(np.any(weights < 0.0)))
