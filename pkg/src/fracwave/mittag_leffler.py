"""Two-parameter Mittag-Leffler function.

E_{a,b}(z) = sum_k z^k / Gamma(a k + b), evaluated by

* the power series for |z| <= switch radius,
* the Hankel contour integral

      E_{a,b}(z) = 1/(2 pi i) \\int_Ha e^s s^(a-b) / (s^a - z) ds

  over two rays at angles +-eta joined by an arc of radius r, plus the
  residues of any poles s^a = z lying to the right of the path,
* the large-|z| expansion (pole residues minus sum_k z^-k / Gamma(b - a k))
  once |z|^(1/a) >= 36, where its truncation error is about exp(-36).

All public functions broadcast over array ``z``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace

import numpy as np

from .gamma import log_gamma, rgamma

SWITCH_RADIUS = 5.0
# |z|^(1/alpha) above which the asymptotic expansion is used
ASYMPTOTIC_RADIUS = 36.0

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
_BLOCK = 4096


class MittagLefflerError(ArithmeticError):
    """Evaluation of E_{a,b} failed."""


class SeriesDivergenceError(MittagLefflerError):
    pass


class QuadratureError(MittagLefflerError):
    pass


class PoleProximityError(MittagLefflerError):
    pass


def default_eta(alpha: float) -> float:
    """Contour half-angle centred in (pi/2, pi/alpha), kept >= pi/2 + 0.1."""
    upper = min(math.pi / alpha, math.pi)
    return max(0.5 * (0.5 * math.pi + upper), 0.5 * math.pi + 0.1)


@dataclass(frozen=True)
class MLParams:
    """Configuration for contour evaluation of E_{alpha,beta}.

    ``eta=None`` selects :func:`default_eta`. ``ray_length=None`` truncates
    each ray where |e^s| has dropped by 1e-18 relative to the arc.
    ``ray_nodes`` and ``arc_nodes`` are the starting resolutions; both are
    doubled until successive results differ by less than ``tol``.
    """

    alpha: float
    beta: float = 1.0
    eta: float | None = None
    radius: float = 1.0
    ray_nodes: int = 96
    arc_nodes: int = 32
    ray_length: float | None = None
    switch_radius: float = SWITCH_RADIUS
    tol: float = 1e-10
    max_doublings: int = 10

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if self.beta <= 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.eta is not None and not 0.5 * math.pi < self.eta < math.pi:
            raise ValueError("contour angle eta must lie in (pi/2, pi)")
        if self.radius <= 0.0:
            raise ValueError("contour radius must be positive")
        if self.ray_nodes < 8 or self.arc_nodes < 8:
            raise ValueError("node counts must be at least 8")
        if self.ray_length is not None and self.ray_length <= self.radius:
            raise ValueError("ray truncation length must exceed the radius")

    @property
    def angle(self) -> float:
        return default_eta(self.alpha) if self.eta is None else self.eta


# ---------------------------------------------------------------- series

def ml_series(alpha, beta, z, tol=1e-16, max_terms=500):
    """Power series sum_k z^k / Gamma(alpha k + beta).

    Stops once the terms are decreasing and below ``tol * max(1, |sum|)``;
    raises :class:`SeriesDivergenceError` if that has not happened after
    ``max_terms`` terms.
    """
    if alpha <= 0 or beta <= 0:
        raise ValueError("ml_series requires alpha > 0 and beta > 0")
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    zf = z.ravel()
    out = np.full(zf.shape, complex(rgamma(beta)))
    nz = zf != 0
    if np.any(nz):
        out[nz] = _series_nonzero(alpha, beta, zf[nz], tol, max_terms)
    out = out.reshape(shape)
    return out[()] if out.ndim == 0 else out


def _series_nonzero(alpha, beta, z, tol, max_terms):
    logz = np.log(z)
    total = np.zeros(z.shape, dtype=complex)
    active = np.ones(z.shape, dtype=bool)
    prev_mag = np.full(z.shape, np.inf)
    block = 32
    for start in range(0, max_terms, block):
        k = np.arange(start, min(start + block, max_terms), dtype=float)
        lg = log_gamma(alpha * k + beta)
        idx = np.flatnonzero(active)
        terms = np.exp(k[None, :] * logz[idx, None] - lg[None, :])
        # sum small terms first within the block is not needed: block sums are
        # dominated by the leading terms and the remainder is below tol
        partial = total[idx, None] + np.cumsum(terms, axis=1)
        mag = np.abs(terms)
        decreasing = np.concatenate([mag[:, :1] <= prev_mag[idx, None], mag[:, 1:] <= mag[:, :-1]], axis=1)
        small = mag <= tol * np.maximum(1.0, np.abs(partial))
        done = decreasing & small
        hit = done.any(axis=1)
        first = np.argmax(done, axis=1)
        rows = np.arange(len(idx))
        total[idx] = np.where(hit, partial[rows, first], partial[:, -1])
        prev_mag[idx] = mag[:, -1]
        active[idx[hit]] = False
        if not active.any():
            return total
    raise SeriesDivergenceError(
        f"series for E_{{{alpha},{beta}}} did not reach tol={tol} within {max_terms} terms"
    )


# ---------------------------------------------------------------- poles

def _poles(alpha, z):
    """Roots of s^alpha = z on the principal sheet |arg s| < pi.

    Returns (modulus, argument, valid) arrays of shape z.shape + (3,), one
    slot per branch index k in (-1, 0, 1); alpha <= 2 needs no more.
    """
    mod = np.abs(z) ** (1.0 / alpha)
    th = np.angle(z)
    ks = np.array([-1.0, 0.0, 1.0])
    raw = th[..., None] + 2.0 * math.pi * ks
    arg = raw / alpha
    valid = (np.abs(raw) < alpha * math.pi) & (mod[..., None] > 0)
    return np.broadcast_to(mod[..., None], arg.shape), arg, valid


def _residue(alpha, beta, mod, arg):
    s = mod * np.exp(1j * arg)
    with np.errstate(over="ignore", invalid="ignore"):
        return np.exp(s + (1.0 - beta) * (np.log(mod) + 1j * arg)) / alpha


# ---------------------------------------------------------------- contour

def _meromorphic(alpha, beta):
    """True when e^s s^(a-b)/(s^a - z) is single-valued (no branch cut)."""
    return alpha in (1.0, 2.0) and float(beta).is_integer() and 1.0 <= beta <= alpha


def _all_roots_residue_sum(alpha, beta, z):
    if alpha == 1.0:
        roots = z[..., None]
    else:
        sq = np.sqrt(z)
        roots = np.stack([sq, -sq], axis=-1)
    with np.errstate(over="ignore", invalid="ignore"):
        return np.sum(np.exp(roots) * roots ** (1.0 - beta), axis=-1) / alpha


def _choose_geometry(params: MLParams, z):
    """Per-point (radius, eta) keeping every pole clear of the path."""
    alpha = params.alpha
    eta0 = params.angle
    etas = [eta0]
    for d in (0.2, -0.2, 0.4, -0.4):
        e = eta0 + d
        if 0.5 * math.pi + 0.05 < e < math.pi - 0.05:
            etas.append(e)
    radii = [params.radius * 2.0 ** i for i in range(4)]
    mod, arg, valid = _poles(alpha, z)
    rad_out = np.full(z.shape, np.nan)
    eta_out = np.full(z.shape, np.nan)
    todo = np.ones(z.shape, dtype=bool)
    # the arc carries |e^s| up to e^r, so small radii are preferred and the
    # angle is shifted before the radius grows
    for r in radii:
        for e in etas:
            dang = np.abs(np.abs(arg) - e)
            ray_ok = ~valid | (dang >= 0.08) | (mod * np.sin(np.minimum(dang, 0.5 * math.pi)) >= 1.0)
            near_arc = valid & (np.abs(arg) <= e + 0.1) & (np.abs(mod - r) < 0.2 * r)
            on_ray = ~ray_ok & (mod > 0.5 * r)
            ok = todo & ~(near_arc | on_ray).any(axis=-1)
            rad_out[ok] = r
            eta_out[ok] = e
            todo &= ~ok
            if not todo.any():
                return rad_out, eta_out
    # nothing cleared every pole: fall back to the defaults and let the
    # proximity check decide
    rad_out[todo] = params.radius
    eta_out[todo] = eta0
    return rad_out, eta_out


def _ray_edges(r, length, level):
    # geometric panels (width proportional to distance from the origin, so a
    # pole at angular offset d sits ~d panel-widths away at every scale),
    # capped in width to resolve the e^{i rho sin(eta)} oscillation
    edges = [r]
    while edges[-1] < length:
        edges.append(min(edges[-1] + min(edges[-1], 16.0), length))
    edges = np.asarray(edges)
    for _ in range(level):
        mids = 0.5 * (edges[1:] + edges[:-1])
        edges = np.sort(np.concatenate([edges, mids]))
    return edges


@functools.lru_cache(maxsize=64)
def _gauss_legendre(n):
    return np.polynomial.legendre.leggauss(n)


def _path(r, eta, length, level, n_arc, upper_only=False):
    edges = _ray_edges(r, length, level)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    rho = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w_ray = (half[:, None] * _GL_W[None, :]).ravel()
    e_up = np.exp(1j * eta)
    if upper_only:
        xa, wa = _gauss_legendre(n_arc // 2)
        phi = 0.5 * eta * (xa + 1.0)
        w_arc = 0.5 * eta * wa
        s = np.concatenate([rho * e_up, r * np.exp(1j * phi)])
        ds = np.concatenate([w_ray * e_up, w_arc * 1j * r * np.exp(1j * phi)])
        return s, ds
    xa, wa = _gauss_legendre(n_arc)
    phi = eta * xa
    w_arc = eta * wa
    s = np.concatenate([rho * e_up, rho * np.conj(e_up), r * np.exp(1j * phi)])
    # ds factors, with the lower ray traversed inward (Ha_1 + Ha_2 - Ha_3)
    ds = np.concatenate([w_ray * e_up, -w_ray * np.conj(e_up), w_arc * 1j * r * np.exp(1j * phi)])
    return s, ds


def _real_sum_numpy(x, a_k, b_k, c_k, d_k):
    out = np.empty(x.shape)
    closest = np.inf
    for i in range(0, x.size, _BLOCK):
        xb = x[i:i + _BLOCK, None]
        den = (c_k - xb) ** 2 + d_k
        closest = min(closest, float(np.min(den)))
        out[i:i + _BLOCK] = ((a_k - xb * b_k) / den).sum(axis=1)
    return out, closest


try:
    import numba
except ImportError:  # optional accelerator
    _real_sum = _real_sum_numpy
else:
    @numba.njit(cache=True, nogil=True)
    def _real_sum(x, a_k, b_k, c_k, d_k):
        out = np.empty(x.size)
        closest = np.inf
        for i in range(x.size):
            xi = x[i]
            acc = 0.0
            for j in range(a_k.size):
                u = c_k[j] - xi
                den = u * u + d_k[j]
                if den < closest:
                    closest = den
                acc += (a_k[j] - xi * b_k[j]) / den
            out[i] = acc
        return out, closest


def _hankel(alpha, beta, z, r, eta, length, level, n_arc):
    # real z: the integrand is conjugate-symmetric, so the upper half of the
    # path carries everything and the integral is Im(upper half) / pi
    real = not np.any(z.imag)
    s, ds = _path(r, eta, length, level, n_arc, upper_only=real)
    num = np.exp(s + (alpha - beta) * np.log(s)) * ds
    sa = np.exp(alpha * np.log(s))
    closest = np.inf
    if real:
        # Im(num / (sa - x)) in real arithmetic
        x = z.real
        a_k = (num * np.conj(sa)).imag
        b_k = num.imag
        c_k = sa.real
        d_k = sa.imag ** 2
        out, closest = _real_sum(x, a_k, b_k, c_k, d_k)
        return out / math.pi + 0j, math.sqrt(closest)
    out = np.empty(z.shape, dtype=complex)
    for i in range(0, z.size, _BLOCK):
        zb = z[i:i + _BLOCK]
        den = sa[None, :] - zb[:, None]
        closest = min(closest, float(np.min(np.abs(den))))
        out[i:i + _BLOCK] = (num[None, :] / den).sum(axis=1)
    return out / (2j * math.pi), closest


def _contour_group(params: MLParams, z, r, eta):
    alpha, beta = params.alpha, params.beta
    if params.ray_length is not None and r == params.radius and eta == params.angle:
        length = params.ray_length
    else:
        length = (r + math.log(1e18)) / -math.cos(eta)
    # tail check: integrand at the truncation point must be negligible
    s_end = length * np.exp(1j * eta)
    tail = abs(np.exp(s_end)) * length ** (alpha - beta) / np.maximum(
        np.abs(np.exp(alpha * np.log(s_end)) - z), 1e-300)
    if np.any(tail / -math.cos(eta) > 1e-14 * math.exp(r)):
        raise QuadratureError("ray tail contribution exceeds tolerance")
    level = max(0, int(round(math.log2(max(1, params.ray_nodes // len(_GL_X))))) - 2)
    n_arc = params.arc_nodes
    prev, closest = _hankel(alpha, beta, z, r, eta, length, level, n_arc)
    if closest < 1e-12:
        raise PoleProximityError("pole of the integrand lies on the contour")
    result = np.empty_like(prev)
    pending = np.arange(z.size)
    for _ in range(params.max_doublings):
        level += 1
        n_arc = min(2 * n_arc, 256)
        cur, closest = _hankel(alpha, beta, z[pending], r, eta, length, level, n_arc)
        if closest < 1e-12:
            raise PoleProximityError("pole of the integrand lies on the contour")
        conv = np.abs(cur - prev) < params.tol * np.maximum(1.0, np.abs(cur))
        result[pending[conv]] = cur[conv]
        pending = pending[~conv]
        prev = cur[~conv]
        if pending.size == 0:
            break
    else:
        raise QuadratureError(
            f"contour quadrature did not converge for {pending.size} point(s) "
            f"after {params.max_doublings} doublings"
        )
    # residues of poles to the right of the path
    mod, arg, valid = _poles(alpha, z)
    right = valid & (np.abs(arg) < eta) & (mod > r)
    if right.any():
        res = np.where(right, _residue(alpha, beta, np.where(right, mod, 1.0), arg), 0.0)
        result = result + res.sum(axis=-1)
    return result


def ml_contour(params: MLParams, z):
    """E_{alpha,beta}(z) from the Hankel contour integral.

    Works in the normalized variable s = lambda t, so the radius ``r=1``
    corresponds to the choice r = 1/t for the time-scaled integral.  Poles
    that would sit on the path trigger a radius doubling (at most three
    times) or an angle shift; poles left to the right of the path enter
    through their residues.  When the integrand has no branch cut (alpha in
    {1, 2}, integer beta <= alpha) and |z| >= 1, the closed contour is
    evaluated exactly by the residue theorem.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    zf = z.ravel()
    out = np.empty(zf.shape, dtype=complex)
    alpha, beta = params.alpha, params.beta
    exact = np.zeros(zf.shape, dtype=bool)
    if _meromorphic(alpha, beta):
        exact = np.abs(zf) >= 1.0
        if exact.any():
            out[exact] = _all_roots_residue_sum(alpha, beta, zf[exact])
    rest = np.flatnonzero(~exact)
    if rest.size:
        zr = zf[rest]
        radii, etas = _choose_geometry(params, zr)
        for r, e in sorted(set(zip(radii.tolist(), etas.tolist()))):
            sel = (radii == r) & (etas == e)
            out[rest[sel]] = _contour_with_retry(params, zr[sel], r, e)
    out = out.reshape(shape)
    return out[()] if out.ndim == 0 else out


def _contour_with_retry(params, z, r, eta):
    for attempt in range(4):
        try:
            return _contour_group(params, z, r, eta)
        except PoleProximityError:
            if attempt == 3:
                raise
            r *= 2.0


# ---------------------------------------------------------------- asymptotic

@functools.lru_cache(maxsize=256)
def _asymptotic_coeffs(alpha, beta, max_terms):
    k = np.arange(max_terms + 1.0)
    x = beta - alpha * k
    rg = rgamma(x)
    # for x < 1/2, |1/Gamma(x)| <= Gamma(1 - x) / pi
    lg = np.full(k.shape, np.inf)
    neg = x < 0.5
    lg[neg] = log_gamma(1.0 - x[neg])
    return rg, lg


def ml_asymptotic(alpha, beta, z, tol=1e-17, max_terms=200):
    """Large-|z| expansion: all principal-sheet pole residues minus
    sum_{k>=1} z^-k / Gamma(beta - alpha k).

    Accurate to roughly exp(-|z|^(1/alpha)); callers use it only once that
    is far below double precision.
    """
    z = np.asarray(z, dtype=complex)
    mod, arg, valid = _poles(alpha, z)
    res = np.where(valid, _residue(alpha, beta, np.where(valid, mod, 1.0), arg), 0.0).sum(axis=-1)
    absz = np.abs(z)
    total = np.zeros(z.shape, dtype=complex)
    zinv = 1.0 / z
    power = np.ones(z.shape, dtype=complex)
    prev_bound = np.full(z.shape, np.inf)
    active = np.ones(z.shape, dtype=bool)
    rg, lg_bound = _asymptotic_coeffs(alpha, beta, max_terms)
    log_absz = np.log(absz)
    for k in range(1, max_terms + 1):
        power = power * zinv
        total = total - np.where(active, power * rg[k], 0.0)
        # magnitude bound ignoring the sine factor (which may vanish)
        if np.isfinite(lg_bound[k]):
            bound = np.exp(lg_bound[k] - k * log_absz) / math.pi
        else:
            bound = np.abs(power) * abs(rg[k])
        stop = (bound < tol * np.maximum(np.abs(total), 1e-300)) | (bound > prev_bound)
        active &= ~stop
        prev_bound = bound
        if not active.any():
            break
    out = res + total
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------- dispatcher

# the series loses about log10(largest term) digits to cancellation
_SERIES_TERM_LIMIT = 1e4


@functools.lru_cache(maxsize=256)
def _series_log_gammas(alpha, beta):
    return log_gamma(alpha * np.arange(200.0) + beta)


def _split(alpha, beta, absz, switch):
    near = absz <= switch
    if near.any():
        k = np.arange(200.0)
        lg = _series_log_gammas(float(alpha), float(beta))
        logz = np.log(np.maximum(absz[near], 1e-300))
        big = np.max(k[None, :] * logz[:, None] - lg[None, :], axis=1)
        near[near] = big <= math.log(_SERIES_TERM_LIMIT)
    with np.errstate(over="ignore"):
        far = ~near & (absz ** (1.0 / alpha) >= ASYMPTOTIC_RADIUS)
    if _meromorphic(alpha, beta):
        far[:] = False
    return near, far, ~near & ~far


def ml(alpha, beta, z, params: MLParams | None = None):
    """E_{alpha,beta}(z): series near the origin, contour elsewhere.

    Far out, where the contour would need very long rays, the asymptotic
    expansion takes over. ``z`` may be an array; real inputs still
    return complex values.
    """
    if params is None:
        params = MLParams(alpha=alpha, beta=beta)
    elif params.alpha != alpha or params.beta != beta:
        params = replace(params, alpha=alpha, beta=beta)
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    zf = z.ravel()
    out = np.empty(zf.shape, dtype=complex)
    near, far, mid = _split(alpha, beta, np.abs(zf), params.switch_radius)
    if near.any():
        try:
            out[near] = ml_series(alpha, beta, zf[near])
        except SeriesDivergenceError:
            mid |= near
    if far.any():
        out[far] = ml_asymptotic(alpha, beta, zf[far])
    if mid.any():
        out[mid] = ml_contour(params, zf[mid])
    if not np.any(zf.imag):
        # real data: drop round-off from complex logarithms of negative z
        out = out.real + 0j
    out = out.reshape(shape)
    return out[()] if out.ndim == 0 else out


def branch(alpha, beta, z, params: MLParams | None = None) -> str:
    """Name of the branch :func:`ml` uses at a single point."""
    switch = SWITCH_RADIUS if params is None else params.switch_radius
    near, far, _ = _split(alpha, beta, np.array([abs(complex(z))]), switch)
    if near[0]:
        return "series"
    return "asymptotic" if far[0] else "contour"
