"""Maximum-likelihood fitting for Dirichlet and selection models.

The Dirichlet concentration is fit by damped Newton-Raphson on the
log-likelihood (method-of-moments initialization, Ronning fallback). The
selection parameter sigma lives on the compactified interval [-1, +inf]:
its likelihood always attains a maximum there, but the maximizer can sit at
either end, so the fit returns a tagged estimate rather than a bare float.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, gammaln, polygamma

from .core import (
    DirichletParams,
    NonConvergenceError,
    NumericalError,
    SimplexPoint,
    SUM_TOLERANCE,
    expected_homozygosity,
)

__all__ = [
    "SigmaEstimate",
    "FrequencySample",
    "dirichlet_mle",
    "dirichlet_log_likelihood",
    "selection_log_likelihood",
    "selection_log_likelihood_limit",
    "sigma_score",
    "sigma_mle",
    "selection_mle_joint",
]

ALPHA_LOWER = 1e-8
ALPHA_UPPER = 1e6
_SIGMA_SCAN_UPPER = 1e6
# Ties between the sigma -> +inf limit and the best finite candidate break
# toward the finite estimate.
_TIE_EPS = 1e-12


@dataclass(frozen=True)
class SigmaEstimate:
    """A fitted sigma: interior value, the -1 boundary, or +infinity.

    +infinity is a legitimate maximizer on the compactified interval and is
    carried as an explicit kind, never as a large float.
    """

    kind: str
    value: float | None = None

    _KINDS = ("interior", "lower_boundary", "plus_infinity")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"kind must be one of {self._KINDS}")
        if self.kind == "interior":
            if self.value is None or not np.isfinite(self.value) or self.value <= -1.0:
                raise ValueError("interior sigma must be finite and > -1")
        elif self.kind == "lower_boundary":
            object.__setattr__(self, "value", -1.0)
        elif self.value is not None:
            raise ValueError("plus_infinity carries no finite value")

    @classmethod
    def interior(cls, value: float) -> "SigmaEstimate":
        return cls("interior", float(value))

    @classmethod
    def lower_boundary(cls) -> "SigmaEstimate":
        return cls("lower_boundary", -1.0)

    @classmethod
    def plus_infinity(cls) -> "SigmaEstimate":
        return cls("plus_infinity", None)

    @property
    def is_interior(self) -> bool:
        return self.kind == "interior"

    @property
    def is_infinite(self) -> bool:
        return self.kind == "plus_infinity"

    def as_float(self) -> float:
        """The estimate as a float, with +infinity mapped to math.inf (display only)."""
        return float("inf") if self.is_infinite else float(self.value)


@dataclass(frozen=True, eq=False)
class FrequencySample:
    """N interior simplex observations, stored rowwise as an (N, m) matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.matrix, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 2:
            raise ValueError("sample must be an (N, m) matrix with N >= 1, m >= 2")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sample contains non-finite entries")
        if np.any(arr <= 0.0) or np.any(arr > 1.0):
            raise ValueError("all observations must be interior simplex points")
        sums = arr.sum(axis=1)
        bad = np.abs(sums - 1.0) > SUM_TOLERANCE
        if np.any(bad):
            row = int(np.argmax(bad))
            raise ValueError(f"row {row} sums to {sums[row]!r}, not 1 within {SUM_TOLERANCE}")
        arr = arr / sums[:, None]
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    @classmethod
    def from_points(cls, points) -> "FrequencySample":
        rows = [p.values if isinstance(p, SimplexPoint) else np.asarray(p) for p in points]
        sample = cls(np.vstack(rows))
        if np.any(sample.matrix <= 0.0):
            raise ValueError("boundary observations are rejected")
        return sample

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def m(self) -> int:
        return self.matrix.shape[1]

    def mean_log(self) -> np.ndarray:
        return np.log(self.matrix).mean(axis=0)

    def homozygosity(self) -> np.ndarray:
        """H(p^k) = sum_i (p^k_i)^2 for each observation."""
        return np.einsum("ij,ij->i", self.matrix, self.matrix)


# ---------------------------------------------------------------------------
# Dirichlet MLE (Newton-Raphson)
# ---------------------------------------------------------------------------


def _dirichlet_objective(alpha: np.ndarray, mean_log: np.ndarray) -> float:
    """Per-observation Dirichlet log-likelihood."""
    return float(
        gammaln(alpha.sum()) - gammaln(alpha).sum() + np.dot(alpha - 1.0, mean_log)
    )


def _dirichlet_gradient(alpha: np.ndarray, mean_log: np.ndarray) -> np.ndarray:
    return digamma(alpha.sum()) - digamma(alpha) + mean_log


def _newton_direction(alpha: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Solve -(Hessian)^-1 grad using the diagonal-plus-rank-one structure."""
    q = polygamma(1, alpha)  # trigamma, > 0
    c = float(polygamma(1, alpha.sum()))
    inv_q = 1.0 / q
    b = np.dot(grad, inv_q) / (1.0 / c - inv_q.sum())
    return (grad + b) / q


def _moment_initial_alpha(matrix: np.ndarray) -> np.ndarray:
    """Method-of-moments start; Ronning's minimal-proportion fallback."""
    mean = matrix.mean(axis=0)
    m2 = float((matrix[:, 0] ** 2).mean())
    denom = m2 - mean[0] ** 2
    if denom > 0.0:
        scale = (mean[0] - m2) / denom
        if np.isfinite(scale) and scale > 0.0:
            alpha = scale * mean
            if np.all(alpha > 0.0):
                return np.clip(alpha, ALPHA_LOWER, ALPHA_UPPER)
    return np.full(matrix.shape[1], max(float(matrix.min()), ALPHA_LOWER))


def _ascend(
    alpha0: np.ndarray,
    objective,
    gradient,
    tol: float,
    max_iter: int,
    diagnostics: dict | None = None,
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Damped Newton ascent with [ALPHA_LOWER, ALPHA_UPPER] clamping.

    Returns (alpha, gradient, railed). Convergence means every coordinate
    either has |grad| < tol or is pinned at a clamp with the gradient
    pointing outward. ``diagnostics``, when given, accumulates iteration
    counts and the final gradient norm.
    """
    alpha = alpha0.copy()
    value = objective(alpha)
    for iteration in range(max_iter):
        if diagnostics is not None:
            diagnostics["newton_iterations"] = (
                diagnostics.get("newton_iterations", 0.0) + 1.0
            )
        grad = gradient(alpha)
        if diagnostics is not None:
            diagnostics["gradient_max_norm"] = float(np.abs(grad).max())
        at_upper = (alpha >= ALPHA_UPPER) & (grad > 0.0)
        at_lower = (alpha <= ALPHA_LOWER) & (grad < 0.0)
        free = ~(at_upper | at_lower)
        if np.max(np.abs(grad[free]), initial=0.0) < tol:
            return alpha, grad, bool(at_upper.any() or at_lower.any())
        direction = _newton_direction(alpha, grad)
        step = 1.0
        for _ in range(60):
            candidate = np.clip(alpha + step * direction, ALPHA_LOWER, ALPHA_UPPER)
            cand_value = objective(candidate)
            if cand_value >= value and np.any(candidate != alpha):
                alpha, value = candidate, cand_value
                break
            step *= 0.5
        else:
            # no improving Newton step: fall back to a gradient nudge
            step = 1.0 / (1.0 + np.abs(grad).max())
            candidate = np.clip(alpha + step * grad, ALPHA_LOWER, ALPHA_UPPER)
            cand_value = objective(candidate)
            if cand_value <= value or not np.any(candidate != alpha):
                return alpha, grad, bool((alpha >= ALPHA_UPPER).any())
            alpha, value = candidate, cand_value
    grad = gradient(alpha)
    raise NonConvergenceError(
        f"Newton did not converge in {max_iter} iterations; "
        f"last alpha={alpha!r}, gradient max-norm={np.abs(grad).max():.3e}"
    )


def dirichlet_mle(
    sample: FrequencySample,
    tol: float = 1e-10,
    max_iter: int = 500,
    diagnostics: dict | None = None,
) -> DirichletParams:
    """Maximum-likelihood Dirichlet concentration for a frequency sample.

    Newton-Raphson on the (unimodal) log-likelihood; the returned alpha has
    per-observation gradient below ``tol`` in max norm unless the sample is
    degenerate, in which case the estimate rails at the 1e6 clamp and a
    "degenerate concentration" warning is emitted.
    """
    if sample.n < 2:
        raise ValueError("need at least 2 observations to fit a Dirichlet")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    constant = np.ptp(sample.matrix, axis=0) == 0.0
    if constant.any():
        warnings.warn(
            f"degenerate sample: coordinate(s) {np.flatnonzero(constant).tolist()} "
            "constant across observations; the concentration may diverge",
            RuntimeWarning,
            stacklevel=2,
        )
    mean_log = sample.mean_log()
    alpha, grad, railed = _ascend(
        _moment_initial_alpha(sample.matrix),
        lambda a: _dirichlet_objective(a, mean_log),
        lambda a: _dirichlet_gradient(a, mean_log),
        tol,
        max_iter,
        diagnostics,
    )
    if railed:
        warnings.warn(
            "degenerate concentration: alpha clamped at bounds "
            f"[{ALPHA_LOWER}, {ALPHA_UPPER}]",
            RuntimeWarning,
            stacklevel=2,
        )
    return DirichletParams(alpha)


# ---------------------------------------------------------------------------
# Selection likelihood in sigma
# ---------------------------------------------------------------------------


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma < -1.0:
        raise ValueError("sigma must be finite and >= -1")
    return sigma


def dirichlet_log_likelihood(sample: FrequencySample, params: DirichletParams) -> float:
    """Total Dirichlet log-likelihood of the sample at the given alpha."""
    if sample.m != params.m:
        raise ValueError("dimension mismatch between sample and params")
    alpha = params.alpha
    return float(
        sample.n * (gammaln(params.total) - gammaln(alpha).sum())
        + np.dot(alpha - 1.0, np.log(sample.matrix).sum(axis=0))
    )


def selection_log_likelihood(
    sample: FrequencySample, params: DirichletParams, sigma: float
) -> float:
    """Log-likelihood of the selection model 1 + sigma H at fixed alpha.

    Equals the plain Dirichlet log-likelihood at sigma = 0 and tends to
    ``selection_log_likelihood_limit`` as sigma grows.
    """
    sigma = _check_sigma(sigma)
    if sample.m != params.m:
        raise ValueError("dimension mismatch between sample and params")
    h = sample.homozygosity()
    eh = expected_homozygosity(params)
    with np.errstate(divide="ignore"):
        tilt = np.log1p(sigma * h).sum() - sample.n * np.log1p(sigma * eh)
    return dirichlet_log_likelihood(sample, params) + float(tilt)


def selection_log_likelihood_limit(sample: FrequencySample, params: DirichletParams) -> float:
    """The finite sigma -> +inf limit: sum log(H_k / E[H]) plus the base term."""
    if sample.m != params.m:
        raise ValueError("dimension mismatch between sample and params")
    h = sample.homozygosity()
    eh = expected_homozygosity(params)
    return dirichlet_log_likelihood(sample, params) + float(
        np.log(h).sum() - sample.n * np.log(eh)
    )


def sigma_score(sample: FrequencySample, params: DirichletParams, sigma: float) -> float:
    """d/dsigma of the selection log-likelihood.

    sum_k H_k / (1 + sigma H_k) - N E[H] / (1 + sigma E[H]); for N = 2 and
    alpha = (1, 1) this reduces to (A + B sigma) over a positive factor with
    A = H1 + H2 - 4/3 and B = H1(H2 - 2/3) + H2(H1 - 2/3).
    """
    sigma = _check_sigma(sigma)
    if sample.m != params.m:
        raise ValueError("dimension mismatch between sample and params")
    h = sample.homozygosity()
    eh = expected_homozygosity(params)
    return float((h / (1.0 + sigma * h)).sum() - sample.n * eh / (1.0 + sigma * eh))


def _bisect_score_root(score, lo: float, hi: float) -> float:
    """Bisection for a sign change of the score bracketed by [lo, hi]."""
    f_lo = score(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-12 * max(1.0, abs(mid)):
            return mid
        f_mid = score(mid)
        if f_mid == 0.0:
            return mid
        if (f_lo > 0.0) == (f_mid > 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sigma_mle(sample: FrequencySample, params: DirichletParams) -> SigmaEstimate:
    """Maximize the sigma log-likelihood over the compactified [-1, +inf].

    Candidates are the -1 boundary, every interior critical point (sign
    changes of the score on a geometric grid, refined by bisection), and the
    +inf limit; the argmax wins, with finite candidates preferred on ties.
    """
    if sample.n < 1:
        raise ValueError("need at least one observation")
    if sample.m != params.m:
        raise ValueError("dimension mismatch between sample and params")
    h = sample.homozygosity()
    eh = expected_homozygosity(params)

    # The Dirichlet base term is constant in sigma, so candidates are ranked
    # by the tilt alone: t(s) = sum log(1 + s H_k) - N log(1 + s E[H]).
    def tilt(s: float) -> float:
        with np.errstate(divide="ignore"):
            return float(np.log1p(s * h).sum() - sample.n * np.log1p(s * eh))

    def score(s: float) -> float:
        return float((h / (1.0 + s * h)).sum() - sample.n * eh / (1.0 + s * eh))

    # geometric grid in 1 + sigma, covering [-1 + 1e-9, 1e6]
    grid = np.geomspace(1e-9, 1.0 + _SIGMA_SCAN_UPPER, 512) - 1.0
    ratio = grid[:, None] * h[None, :]
    with np.errstate(divide="ignore"):
        tilt_values = np.log1p(ratio).sum(axis=1) - sample.n * np.log1p(grid * eh)
    score_values = (h[None, :] / (1.0 + ratio)).sum(axis=1) - sample.n * eh / (
        1.0 + grid * eh
    )

    candidates: list[tuple[float, SigmaEstimate]] = [(tilt(-1.0), SigmaEstimate.lower_boundary())]
    signs = np.sign(score_values)
    for idx in np.flatnonzero(signs[:-1] * signs[1:] < 0.0):
        root = _bisect_score_root(score, grid[idx], grid[idx + 1])
        candidates.append((tilt(root), SigmaEstimate.interior(root)))
    for idx in np.flatnonzero(signs == 0.0):
        candidates.append((tilt(float(grid[idx])), SigmaEstimate.interior(float(grid[idx]))))

    # Guard against sign changes hidden between grid points: if the grid
    # itself beats every critical-point candidate, refine around its argmax.
    best_value = max(value for value, _ in candidates)
    peak = int(np.argmax(tilt_values))
    if 0 < peak < grid.size - 1 and tilt_values[peak] > best_value:
        lo, hi = grid[peak - 1], grid[peak + 1]
        if score(lo) > 0.0 and score(hi) < 0.0:
            root = _bisect_score_root(score, lo, hi)
            candidates.append((tilt(root), SigmaEstimate.interior(root)))

    limit_value = float(np.log(h).sum() - sample.n * np.log(eh))
    best_value, best = max(candidates, key=lambda pair: (pair[0], pair[1].is_interior))
    threshold = best_value
    if np.isfinite(best_value):
        threshold = best_value + _TIE_EPS * max(1.0, abs(best_value))
    if limit_value > threshold:
        return SigmaEstimate.plus_infinity()
    return best


# ---------------------------------------------------------------------------
# Joint (alpha, sigma) fitting
# ---------------------------------------------------------------------------


def _homozygosity_expectation_gradient(alpha: np.ndarray) -> np.ndarray:
    """d E_alpha[H] / d alpha_i for E[H] = sum a_j(a_j+1) / (A(A+1))."""
    total = alpha.sum()
    s = np.dot(alpha, alpha + 1.0)
    denom = total * (total + 1.0)
    return (2.0 * alpha + 1.0) / denom - s * (2.0 * total + 1.0) / denom**2


def _selection_objective_factory(sample: FrequencySample, sigma: SigmaEstimate):
    """Per-observation objective and gradient in alpha at fixed (possibly infinite) sigma."""
    mean_log = sample.mean_log()
    h = sample.homozygosity()
    if sigma.is_infinite:
        mean_log_tilt = float(np.log(h).mean())

        def objective(alpha: np.ndarray) -> float:
            eh = expected_homozygosity(DirichletParams(alpha))
            return _dirichlet_objective(alpha, mean_log) + mean_log_tilt - np.log(eh)

        def gradient(alpha: np.ndarray) -> np.ndarray:
            params = DirichletParams(alpha)
            eh = expected_homozygosity(params)
            return _dirichlet_gradient(alpha, mean_log) - _homozygosity_expectation_gradient(
                alpha
            ) / eh

    else:
        s = float(sigma.value)
        mean_log_tilt = float(np.log1p(s * h).mean())

        def objective(alpha: np.ndarray) -> float:
            eh = expected_homozygosity(DirichletParams(alpha))
            return _dirichlet_objective(alpha, mean_log) + mean_log_tilt - np.log1p(s * eh)

        def gradient(alpha: np.ndarray) -> np.ndarray:
            params = DirichletParams(alpha)
            eh = expected_homozygosity(params)
            return _dirichlet_gradient(alpha, mean_log) - s * _homozygosity_expectation_gradient(
                alpha
            ) / (1.0 + s * eh)

    return objective, gradient


def selection_mle_joint(
    sample: FrequencySample,
    tol: float = 1e-8,
    max_iter: int = 100,
    fixed_sigma: float | None = None,
    diagnostics: dict | None = None,
) -> tuple[DirichletParams, SigmaEstimate]:
    """Joint (alpha, sigma) fit by block coordinate ascent.

    Alternates damped Newton steps in alpha at fixed sigma with the exact
    sigma maximizer at fixed alpha until the joint objective improves by
    less than ``tol``. With ``fixed_sigma=0`` this is exactly
    ``dirichlet_mle``.
    """
    if sample.n < 2:
        raise ValueError("need at least 2 observations for a joint fit")
    if fixed_sigma is not None:
        fixed = _check_sigma(fixed_sigma)
        if fixed == 0.0:
            return (
                dirichlet_mle(sample, tol, max_iter, diagnostics),
                SigmaEstimate.interior(0.0),
            )
        sigma = (
            SigmaEstimate.lower_boundary() if fixed == -1.0 else SigmaEstimate.interior(fixed)
        )
        objective, gradient = _selection_objective_factory(sample, sigma)
        alpha, _, railed = _ascend(
            _moment_initial_alpha(sample.matrix),
            objective,
            gradient,
            tol,
            max_iter * 50,
            diagnostics,
        )
        if railed:
            warnings.warn("degenerate concentration: alpha clamped", RuntimeWarning, stacklevel=2)
        return DirichletParams(alpha), sigma

    alpha = _moment_initial_alpha(sample.matrix)
    sigma = sigma_mle(sample, DirichletParams(alpha))
    objective, gradient = _selection_objective_factory(sample, sigma)
    value = objective(alpha)
    previous: tuple[np.ndarray, SigmaEstimate] | None = None
    for outer in range(max_iter):
        alpha, _, _ = _ascend(alpha, objective, gradient, tol, 200, diagnostics)
        sigma = sigma_mle(sample, DirichletParams(alpha))
        objective, gradient = _selection_objective_factory(sample, sigma)
        new_value = objective(alpha)
        if new_value < value - 1e-9 * max(1.0, abs(value)):
            raise NumericalError(
                "joint objective decreased across an outer iteration "
                f"({value!r} -> {new_value!r}); ascent lost monotonicity"
            )
        if previous is not None:
            jumped = _ridge_extrapolation(sample, previous, (alpha, sigma), new_value)
            if jumped is not None:
                # monotone jump along the (alpha, sigma) ridge; re-maximize sigma
                alpha = jumped
                sigma = sigma_mle(sample, DirichletParams(alpha))
                objective, gradient = _selection_objective_factory(sample, sigma)
                new_value = objective(alpha)
        previous = (alpha.copy(), sigma)
        improved = new_value - value
        value = new_value
        if improved < tol:
            # _ascend already left the alpha-gradient below tol (or at a clamp)
            if diagnostics is not None:
                diagnostics["outer_iterations"] = float(outer + 1)
            return DirichletParams(alpha), sigma
    raise NonConvergenceError(
        f"joint fit did not converge in {max_iter} outer iterations "
        f"(last objective {value:.6f})"
    )


def _ridge_extrapolation(
    sample: FrequencySample,
    previous: tuple[np.ndarray, SigmaEstimate],
    current: tuple[np.ndarray, SigmaEstimate],
    current_value: float,
) -> np.ndarray | None:
    """Extrapolate the last block move to cut zigzagging along flat ridges.

    The (|alpha|, sigma) direction is often nearly flat, which makes plain
    block ascent crawl. Trial points continue the last accepted move in
    (log alpha, log(1 + sigma)) space; only an objective-improving jump is
    taken, so monotone ascent is preserved. Returns the improving alpha (the
    caller re-maximizes sigma) or None.
    """
    prev_alpha, prev_sigma = previous
    alpha, sigma = current
    log_alpha = np.log(alpha)
    step_alpha = log_alpha - np.log(prev_alpha)
    both_interior = sigma.is_interior and prev_sigma.is_interior
    if both_interior:
        log_shift = np.log1p(sigma.value)
        step_shift = log_shift - np.log1p(prev_sigma.value)
    best_alpha = None
    best_value = current_value
    for factor in (1.0, 3.0, 7.0):
        trial_alpha = np.clip(
            np.exp(log_alpha + factor * step_alpha), ALPHA_LOWER, ALPHA_UPPER
        )
        if both_interior:
            trial_sigma_value = float(np.expm1(log_shift + factor * step_shift))
            if trial_sigma_value <= -1.0:
                continue
            trial_sigma = SigmaEstimate.interior(trial_sigma_value)
        else:
            trial_sigma = sigma
        trial_objective, _ = _selection_objective_factory(sample, trial_sigma)
        trial_value = trial_objective(trial_alpha)
        if np.isfinite(trial_value) and trial_value > best_value:
            best_value = trial_value
            best_alpha = trial_alpha
    return best_alpha
