"""Log-gamma family of special functions used throughout the package.

All gamma-ratio arithmetic in this package is done as sums and differences
of ``lgamma`` values, exponentiated last, so these functions are the single
numerical foundation everything else rests on.
"""

from __future__ import annotations

import math

from scipy.special import digamma as _digamma
from scipy.special import gammaln as _gammaln
from scipy.special import polygamma as _polygamma

__all__ = ["lgamma", "digamma", "trigamma", "log_gamma_family"]

_ORDERS = ("lgamma", "digamma", "trigamma")


def _check_positive(x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise ValueError(f"argument must be a positive finite real, got {x!r}")
    return x


def lgamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    return float(_gammaln(_check_positive(x)))


def digamma(x: float) -> float:
    """psi(x) = d/dx ln Gamma(x) for x > 0."""
    return float(_digamma(_check_positive(x)))


def trigamma(x: float) -> float:
    """psi'(x) for x > 0."""
    return float(_polygamma(1, _check_positive(x)))


def log_gamma_family(x: float, order: str) -> float:
    """Evaluate ln Gamma, psi, or psi' at ``x``.

    ``order`` is one of ``"lgamma"``, ``"digamma"``, ``"trigamma"``.
    Relative accuracy is 1e-12 or better on [1e-6, 1e6] (absolute near the
    functions' zeros).
    """
    if order == "lgamma":
        return lgamma(x)
    if order == "digamma":
        return digamma(x)
    if order == "trigamma":
        return trigamma(x)
    raise ValueError(f"order must be one of {_ORDERS}, got {order!r}")
