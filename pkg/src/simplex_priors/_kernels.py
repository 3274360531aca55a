"""Compiled numerical kernels for the Gibbs sampler.

The inverse-CDF updates need tens of regularized-incomplete-beta
evaluations per coordinate draw, so the hot path (Cephes-style incomplete
beta, the conditional CDF, the bisection, and the chain loop) is compiled
with numba. Everything here is self-contained scalar math; the public API
lives in ``sampler``.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_MACHEP = 1.11022302462515654042e-16
_MAXLOG = 709.782712893383996843
_MINLOG = -708.396418532264106224
_BIG = 4.503599627370496e15
_BIGINV = 2.22044604925031308085e-16


@njit(cache=True)
def _incbet_pseries(a: float, b: float, x: float) -> float:
    """Power series for the incomplete beta; for b*x small, x not near 1."""
    ai = 1.0 / a
    u = (1.0 - b) * x
    v = u / (a + 1.0)
    t1 = v
    t = u
    n = 2.0
    s = 0.0
    z = _MACHEP * ai
    while abs(v) > z:
        u = (n - b) * x / n
        t *= u
        v = t / (a + n)
        s += v
        n += 1.0
    s += t1
    s += ai
    u = a * math.log(x)
    if (a + b) < 100.0 and abs(u) < _MAXLOG:
        t = math.gamma(a + b) / (math.gamma(a) * math.gamma(b))
        s = s * t * x**a
    else:
        t = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + u + math.log(s)
        s = 0.0 if t < _MINLOG else math.exp(t)
    return s


@njit(cache=True)
def _incbet_cf1(a: float, b: float, x: float) -> float:
    """Continued fraction expansion 1 for the incomplete beta."""
    k1 = a
    k2 = a + b
    k3 = a
    k4 = a + 1.0
    k5 = 1.0
    k6 = b - 1.0
    k7 = a + 1.0
    k8 = a + 2.0
    pkm2 = 0.0
    qkm2 = 1.0
    pkm1 = 1.0
    qkm1 = 1.0
    ans = 1.0
    r = 1.0
    thresh = 3.0 * _MACHEP
    for _ in range(300):
        xk = -(x * k1 * k2) / (k3 * k4)
        pk = pkm1 + pkm2 * xk
        qk = qkm1 + qkm2 * xk
        pkm2 = pkm1
        pkm1 = pk
        qkm2 = qkm1
        qkm1 = qk
        xk = (x * k5 * k6) / (k7 * k8)
        pk = pkm1 + pkm2 * xk
        qk = qkm1 + qkm2 * xk
        pkm2 = pkm1
        pkm1 = pk
        qkm2 = qkm1
        qkm1 = qk
        if qk != 0.0:
            r = pk / qk
        if r != 0.0:
            t = abs((ans - r) / r)
            ans = r
        else:
            t = 1.0
        if t < thresh:
            break
        k1 += 1.0
        k2 += 1.0
        k3 += 2.0
        k4 += 2.0
        k5 += 1.0
        k6 -= 1.0
        k7 += 2.0
        k8 += 2.0
        if abs(qk) + abs(pk) > _BIG:
            pkm2 *= _BIGINV
            pkm1 *= _BIGINV
            qkm2 *= _BIGINV
            qkm1 *= _BIGINV
        if abs(qk) < _BIGINV or abs(pk) < _BIGINV:
            pkm2 *= _BIG
            pkm1 *= _BIG
            qkm2 *= _BIG
            qkm1 *= _BIG
    return ans


@njit(cache=True)
def _incbet_cf2(a: float, b: float, x: float) -> float:
    """Continued fraction expansion 2 (in x/(1-x)) for the incomplete beta."""
    k1 = a
    k2 = b - 1.0
    k3 = a
    k4 = a + 1.0
    k5 = 1.0
    k6 = a + b
    k7 = a + 1.0
    k8 = a + 2.0
    pkm2 = 0.0
    qkm2 = 1.0
    pkm1 = 1.0
    qkm1 = 1.0
    z = x / (1.0 - x)
    ans = 1.0
    r = 1.0
    thresh = 3.0 * _MACHEP
    for _ in range(300):
        xk = -(z * k1 * k2) / (k3 * k4)
        pk = pkm1 + pkm2 * xk
        qk = qkm1 + qkm2 * xk
        pkm2 = pkm1
        pkm1 = pk
        qkm2 = qkm1
        qkm1 = qk
        xk = (z * k5 * k6) / (k7 * k8)
        pk = pkm1 + pkm2 * xk
        qk = qkm1 + qkm2 * xk
        pkm2 = pkm1
        pkm1 = pk
        qkm2 = qkm1
        qkm1 = qk
        if qk != 0.0:
            r = pk / qk
        if r != 0.0:
            t = abs((ans - r) / r)
            ans = r
        else:
            t = 1.0
        if t < thresh:
            break
        k1 += 1.0
        k2 -= 1.0
        k3 += 2.0
        k4 += 2.0
        k5 += 1.0
        k6 += 1.0
        k7 += 2.0
        k8 += 2.0
        if abs(qk) + abs(pk) > _BIG:
            pkm2 *= _BIGINV
            pkm1 *= _BIGINV
            qkm2 *= _BIGINV
            qkm1 *= _BIGINV
        if abs(qk) < _BIGINV or abs(pk) < _BIGINV:
            pkm2 *= _BIG
            pkm1 *= _BIG
            qkm2 *= _BIG
            qkm1 *= _BIG
    return ans


@njit(cache=True)
def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0, x in [0, 1]."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    flag = False
    if b * x <= 1.0 and x <= 0.95:
        return _incbet_pseries(a, b, x)
    w = 1.0 - x
    if x > a / (a + b):
        flag = True
        a, b = b, a
        xc = x
        x = w
    else:
        xc = w
    if flag and b * x <= 1.0 and x <= 0.95:
        t = _incbet_pseries(a, b, x)
        if t <= _MACHEP:
            return 1.0 - _MACHEP
        return 1.0 - t
    y = x * (a + b - 2.0) - (a - 1.0)
    if y < 0.0:
        w_cf = _incbet_cf1(a, b, x)
    else:
        w_cf = _incbet_cf2(a, b, x) / xc
    y = a * math.log(x)
    t = b * math.log(xc)
    if (a + b) < 100.0 and abs(y) < _MAXLOG and abs(t) < _MAXLOG:
        t = (xc**b) * (x**a)
        t *= w_cf / a
        t *= math.gamma(a + b) / (math.gamma(a) * math.gamma(b))
    else:
        lt = y + t + math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + math.log(w_cf / a)
        t = 0.0 if lt < _MINLOG else math.exp(lt)
    if flag:
        if t <= _MACHEP:
            t = 1.0 - _MACHEP
        else:
            t = 1.0 - t
    return t


@njit(cache=True)
def _beta_kernel_weights(ai: float, am: float, sigma: float, u: float, c: float):
    """Relative masses of the Beta(ai + k, am) kernels, k = 0, 1, 2.

    The conditional density of the scaled coordinate t = p_i / u on (0, 1) is
    proportional to t^(ai-1) (1-t)^(am-1) [A0 + A1 u t + A2 u^2 t^2] with
    A0 = 1 + sigma (c + u^2), A1 = -2 sigma u, A2 = 2 sigma; integrating each
    power of t against the Beta(ai, am) kernel gives the masses below, with
    the common B(ai, am) factor cancelled.
    """
    a0 = 1.0 + sigma * (c + u * u)
    c1 = -2.0 * sigma * u * u
    c2 = 2.0 * sigma * u * u
    r1 = ai / (ai + am)
    r2 = r1 * (ai + 1.0) / (ai + am + 1.0)
    w0 = a0
    w1 = c1 * r1
    w2 = c2 * r2
    return w0, w1, w2, w0 + w1 + w2


@njit(cache=True)
def _conditional_cdf_value(
    ai: float, am: float, w0: float, w1: float, w2: float, total: float, lb0: float, t: float
) -> float:
    """CDF of the scaled conditional at t, as a signed beta-CDF combination.

    Uses I_t(a+1, b) = I_t(a, b) - t^a (1-t)^b / (a B(a, b)) so one
    incomplete-beta evaluation serves all three kernels.
    """
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    i0 = betainc_reg(ai, am, t)
    log_t = math.log(t)
    log_1mt = math.log1p(-t)
    drop0 = math.exp(ai * log_t + am * log_1mt - math.log(ai) - lb0)
    lb1 = lb0 + math.log(ai / (ai + am))
    drop1 = math.exp((ai + 1.0) * log_t + am * log_1mt - math.log(ai + 1.0) - lb1)
    i1 = i0 - drop0
    i2 = i1 - drop1
    return (w0 * i0 + w1 * i1 + w2 * i2) / total


@njit(cache=True)
def conditional_cdf_kernel(ai: float, am: float, sigma: float, u: float, c: float, t: float) -> float:
    """F(t) for the scaled conditional of one coordinate given the others."""
    w0, w1, w2, total = _beta_kernel_weights(ai, am, sigma, u, c)
    lb0 = math.lgamma(ai) + math.lgamma(am) - math.lgamma(ai + am)
    return _conditional_cdf_value(ai, am, w0, w1, w2, total, lb0, t)


@njit(cache=True)
def gibbs_kernel(alpha: np.ndarray, sigma: float, uniforms: np.ndarray):
    """Systematic-scan Gibbs chain over the free coordinates 0..m-2.

    One row of ``uniforms`` per iteration; each coordinate update inverts its
    conditional CDF by bisection (interval < 1e-15 or 60 iterations). A
    numerically degenerate slice restarts the coordinate at the slice
    midpoint; the restart count is returned alongside the chain.
    """
    iterations = uniforms.shape[0]
    m = alpha.shape[0]
    chain = np.empty((iterations, m))
    p = np.full(m, 1.0 / m)
    restarts = 0
    for it in range(iterations):
        for i in range(m - 1):
            u = p[i] + p[m - 1]
            c = 0.0
            for j in range(m - 1):
                if j != i:
                    c += p[j] * p[j]
            ai = alpha[i]
            am = alpha[m - 1]
            w0, w1, w2, total = _beta_kernel_weights(ai, am, sigma, u, c)
            q = uniforms[it, i]
            if u <= 0.0 or not total > 1e-300 or not np.isfinite(total):
                t = 0.5
                restarts += 1
            else:
                lb0 = math.lgamma(ai) + math.lgamma(am) - math.lgamma(ai + am)
                lo = 0.0
                hi = 1.0
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    f_mid = _conditional_cdf_value(ai, am, w0, w1, w2, total, lb0, mid)
                    if f_mid < q:
                        lo = mid
                    else:
                        hi = mid
                    if hi - lo < 1e-15:
                        break
                t = 0.5 * (lo + hi)
                if not np.isfinite(t):
                    t = 0.5
                    restarts += 1
            if t < 1e-15:
                t = 1e-15
            elif t > 1.0 - 1e-15:
                t = 1.0 - 1e-15
            p[i] = u * t
            p[m - 1] = u - p[i]
        norm = 0.0
        for j in range(m):
            norm += p[j]
        for j in range(m):
            p[j] /= norm
            chain[it, j] = p[j]
    return chain, restarts
