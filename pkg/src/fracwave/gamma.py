"""Gamma function and friends via the Lanczos approximation (g=7, n=9).

Works elementwise on numpy arrays. Arguments below 1/2 go through the
reflection formula with an exactly reduced ``sin(pi x)`` so that the
reciprocal gamma vanishes exactly at the poles.
"""
import math

import numpy as np

_G = 7.0
_COEFFS = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_FACTORIALS = np.array([float(math.factorial(k)) for k in range(23)])
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def sinpi(x):
    """sin(pi*x), exact zero at integers and exact +-1 at half-integers."""
    x = np.asarray(x, dtype=float)
    # reduce to [-1, 1) exactly; fmod of a float by 2 is exact
    r = np.fmod(x, 2.0)
    r = np.where(r >= 1.0, r - 2.0, r)
    r = np.where(r < -1.0, r + 2.0, r)
    # fold into [-1/2, 1/2] using sin(pi(1-r)) = sin(pi r)
    r = np.where(r > 0.5, 1.0 - r, r)
    r = np.where(r < -0.5, -1.0 - r, r)
    return np.sin(np.pi * r)


def _lanczos_series(x):
    # x >= 1/2, shifted by one inside as in the usual formulation
    xm = x - 1.0
    acc = np.full_like(xm, _COEFFS[0])
    for i in range(1, len(_COEFFS)):
        acc = acc + _COEFFS[i] / (xm + i)
    return xm, acc


def _unwrap(out, shape):
    out = out.reshape(shape)
    return out[()] if out.ndim == 0 else out


def log_gamma(x):
    """log Gamma(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.ravel()
    if np.any(x <= 0):
        raise ValueError("log_gamma requires positive arguments")
    small = x < 0.5
    xs = np.where(small, 1.0 - x, x)
    xm, acc = _lanczos_series(xs)
    t = xm + _G + 0.5
    lg = _HALF_LOG_2PI + (xm + 0.5) * np.log(t) - t + np.log(acc)
    if np.any(small):
        # Gamma(x) Gamma(1-x) = pi / sin(pi x), sin(pi x) > 0 on (0, 1)
        lg[small] = math.log(math.pi) - np.log(sinpi(x[small])) - lg[small]
    return _unwrap(lg, shape)


def _is_pole(x):
    return (x <= 0) & (x == np.floor(x))


def gamma(x):
    """Gamma(x) for real x away from the non-positive integers.

    >>> float(gamma(5.0))
    24.0
    """
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.ravel()
    if np.any(_is_pole(x)):
        raise ValueError("gamma has poles at non-positive integers")
    small = x < 0.5
    xs = np.where(small, 1.0 - x, x)
    xm, acc = _lanczos_series(xs)
    t = xm + _G + 0.5
    with np.errstate(over="ignore", invalid="ignore"):
        # split power keeps the error at a few ulps instead of exp(big)*eps
        half = np.power(t, 0.5 * (xm + 0.5))
        g = math.sqrt(2.0 * math.pi) * half * (half * np.exp(-t)) * acc
        if np.any(small):
            g[small] = math.pi / (sinpi(x[small]) * g[small])
    # integers up to 22 are exactly representable factorials
    exact = (x == np.floor(x)) & (x >= 1) & (x <= 23)
    if np.any(exact):
        idx = np.where(exact, x, 1.0).astype(int) - 1
        g = np.where(exact, _FACTORIALS[idx], g)
    return _unwrap(g, shape)


def rgamma(x):
    """1/Gamma(x), entire: returns 0 at the non-positive integers.

    Large positive arguments underflow gracefully through the log form.
    """
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.ravel()
    out = np.zeros_like(x)
    pos = x >= 0.5
    if np.any(pos):
        out[pos] = np.exp(-log_gamma(x[pos]))
    neg = ~pos
    if np.any(neg):
        xn = x[neg]
        # 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi, with 1-x > 1/2
        with np.errstate(over="ignore", invalid="ignore"):
            lg = log_gamma(1.0 - xn)
            val = sinpi(xn) * np.exp(lg) / math.pi
        out[neg] = np.where(_is_pole(xn), 0.0, val)
    return _unwrap(out, shape)
