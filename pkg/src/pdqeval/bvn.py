"""Bivariate normal probabilities.

The correlated case uses Genz's adaptation of the Drezner & Wesolowsky
(1989) method: Gauss-Legendre quadrature of the correlation integral with
6, 12 or 20 points depending on ``|r|``, and an asymptotic expansion for
``|r| >= 0.925``. Absolute accuracy is around 1e-15.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtr

_TWO_PI = 2.0 * math.pi
_RULES = {n: leggauss(n) for n in (6, 12, 20)}


def _rule(r: float) -> tuple[np.ndarray, np.ndarray]:
    ar = abs(r)
    n = 6 if ar < 0.3 else 12 if ar < 0.75 else 20
    t, w = _RULES[n]
    # nodes mapped from [-1, 1] to [0, 2]
    return 1.0 + t, w


def bvn_upper(h: np.ndarray, k: np.ndarray, r: float) -> np.ndarray:
    """``P(X > h, Y > k)`` for standard normals with correlation ``r``.

    ``h`` and ``k`` must be finite and broadcastable; ``r`` is a scalar.
    """
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    h, k = np.broadcast_arrays(h, k)
    if r == 0.0:
        return ndtr(-h) * ndtr(-k)
    x, w = _rule(r)
    hk = h * k
    if abs(r) < 0.925:
        hs = 0.5 * (h * h + k * k)
        asr = 0.5 * math.asin(r)
        sn = np.sin(asr * x)
        terms = np.exp((sn * hk[..., None] - hs[..., None]) / (1.0 - sn * sn))
        bvn = terms @ w * asr / _TWO_PI + ndtr(-h) * ndtr(-k)
        return np.clip(bvn, 0.0, 1.0)

    if r < 0:
        k = -k
        hk = -hk
    bvn = np.zeros_like(h)
    if abs(r) < 1:
        a_s = 1.0 - r * r
        a = math.sqrt(a_s)
        bs = (h - k) ** 2
        c = (4.0 - hk) / 8.0
        d = (12.0 - hk) / 80.0
        asr = -0.5 * (bs / a_s + hk)
        with np.errstate(under="ignore", over="ignore"):
            bvn = np.where(
                asr > -100,
                a * np.exp(asr) * (1.0 - c * (bs - a_s) * (1.0 - d * bs) / 3.0 + c * d * a_s * a_s),
                0.0,
            )
            b = np.sqrt(bs)
            sp = math.sqrt(_TWO_PI) * ndtr(-b / a)
            bvn = np.where(
                hk > -100,
                bvn - np.exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0),
                bvn,
            )
            a2 = 0.5 * a
            xs = (a2 * x) ** 2
            asr2 = -0.5 * (bs[..., None] / xs + hk[..., None])
            ok = asr2 > -100
            sp2 = 1.0 + c[..., None] * xs * (1.0 + 5.0 * d[..., None] * xs)
            rs = np.sqrt(1.0 - xs)
            ep = np.exp(-(hk[..., None] / 2.0) * xs / (1.0 + rs) ** 2) / rs
            inner = np.where(ok, np.exp(np.where(ok, asr2, 0.0)) * (sp2 - ep), 0.0) @ w
        bvn = (a2 * inner - bvn) / _TWO_PI
    if r > 0:
        bvn = bvn + ndtr(-np.maximum(h, k))
    else:
        lower = np.where(h < 0, ndtr(k) - ndtr(h), ndtr(-h) - ndtr(-k))
        bvn = np.where(h >= k, -bvn, lower - bvn)
    return np.clip(bvn, 0.0, 1.0)


def bvn_cdf(x: np.ndarray, y: np.ndarray, r: float) -> np.ndarray:
    """``P(X <= x, Y <= y)`` for standard normals with correlation ``r``.

    Infinite limits are allowed.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    out = np.empty(x.shape)
    xinf_hi, yinf_hi = np.isposinf(x), np.isposinf(y)
    zero = np.isneginf(x) | np.isneginf(y)
    finite = ~(xinf_hi | yinf_hi | zero)
    out[zero] = 0.0
    only_y = xinf_hi & ~zero
    out[only_y] = ndtr(y[only_y])
    only_x = yinf_hi & ~xinf_hi & ~zero
    out[only_x] = ndtr(x[only_x])
    if finite.any():
        out[finite] = bvn_upper(-x[finite], -y[finite], r)
    return out


def normal_interval(mean: float, var: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Mass of ``N(mean, var)`` on ``[lo, hi]``.

    Zero variance collapses to the indicator of ``lo <= mean <= hi``.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if var <= 0.0:
        return ((lo <= mean) & (mean <= hi)).astype(float)
    s = math.sqrt(var)
    a = (lo - mean) / s
    b = (hi - mean) / s
    # difference of upper tails is more accurate above the mean
    upper = np.minimum(a, b) > 0
    return np.where(upper, ndtr(-a) - ndtr(-b), ndtr(b) - ndtr(a)).clip(0.0, 1.0)


def rect_prob(
    mean: tuple[float, float],
    cov: np.ndarray,
    x_lo: np.ndarray,
    x_hi: np.ndarray,
    y_lo: np.ndarray,
    y_hi: np.ndarray,
) -> np.ndarray:
    """Mass of a 2-D normal over ``[x_lo, x_hi] x [y_lo, y_hi]`` (vectorised)."""
    vx, vy, cxy = float(cov[0, 0]), float(cov[1, 1]), 0.5 * float(cov[0, 1] + cov[1, 0])
    if cxy == 0.0 or vx <= 0.0 or vy <= 0.0:
        return normal_interval(mean[0], vx, x_lo, x_hi) * normal_interval(mean[1], vy, y_lo, y_hi)
    sx, sy = math.sqrt(vx), math.sqrt(vy)
    r = max(-1.0, min(1.0, cxy / (sx * sy)))
    a0 = (np.asarray(x_lo, dtype=float) - mean[0]) / sx
    a1 = (np.asarray(x_hi, dtype=float) - mean[0]) / sx
    b0 = (np.asarray(y_lo, dtype=float) - mean[1]) / sy
    b1 = (np.asarray(y_hi, dtype=float) - mean[1]) / sy
    p = bvn_cdf(a1, b1, r) - bvn_cdf(a0, b1, r) - bvn_cdf(a1, b0, r) + bvn_cdf(a0, b0, r)
    return np.clip(p, 0.0, 1.0)
