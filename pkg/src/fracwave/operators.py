"""The cosine-, sine- and resolvent-type families acting on eigenmodes.

On the Dirichlet eigenbasis each family is diagonal. With x = lambda_n t^alpha
the per-mode multipliers are

    E: E_{a,1}(-x),   S: t E_{a,2}(-x),   R: t^(a-1) E_{a,a}(-x).

``symbol_inversion`` recomputes the same numbers straight from the Laplace
symbols by quadrature along a Hankel path, without going through the
Mittag-Leffler evaluator, and ``subordination_residual`` checks the integral
relations that tie S and R back to E.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .gamma import gamma
from .mittag_leffler import ml
from .spectral import SpectralDomain, SpectralField


class FamilyKind(str, enum.Enum):
    E = "E"
    S = "S"
    R = "R"


def _kind(family) -> FamilyKind:
    return family if isinstance(family, FamilyKind) else FamilyKind(str(family).upper())


def _check_alpha(alpha):
    if not 1.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (1, 2)")


def scalar_multiplier(family, alpha, lam, t):
    """Multiplier of one family for eigenvalues ``lam`` at time ``t``.

    ``lam`` and ``t`` broadcast against each other.
    """
    kind = _kind(family)
    lam, t = np.broadcast_arrays(np.asarray(lam, float), np.asarray(t, float))
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    out = np.zeros(lam.shape)
    pos = t > 0
    if kind is FamilyKind.E:
        out[~pos] = 1.0
    if pos.any():
        tp = t[pos]
        z = -lam[pos] * tp ** alpha
        if kind is FamilyKind.E:
            out[pos] = ml(alpha, 1.0, z).real
        elif kind is FamilyKind.S:
            out[pos] = tp * ml(alpha, 2.0, z).real
        else:
            out[pos] = tp ** (alpha - 1.0) * ml(alpha, alpha, z).real
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class MultiplierTable:
    t: float
    values: np.ndarray
    family: FamilyKind
    alpha: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ArithmeticError("non-finite multiplier")
        self.values.flags.writeable = False


def multipliers(domain: SpectralDomain, family, alpha: float, t: float) -> MultiplierTable:
    _check_alpha(alpha)
    if t < 0:
        raise ValueError("time must be non-negative")
    kind = _kind(family)
    m = np.asarray(scalar_multiplier(kind, alpha, domain.eigenvalues, t), dtype=float)
    return MultiplierTable(float(t), m, kind, float(alpha))


def apply(domain: SpectralDomain, family, alpha: float, t: float, fld: SpectralField) -> SpectralField:
    domain.check_field(fld)
    return SpectralField(multipliers(domain, family, alpha, t).values * fld.coeffs)


def operator_norm(domain: SpectralDomain, family, alpha: float, t: float,
                  theta_out: float, beta_in: float) -> float:
    """Norm from X^{beta_in} to X^{1+theta_out} on the retained modes.

    With ||x||_{X^{1+s}} = (sum lambda^(2s) c^2)^(1/2) a diagonal operator
    has norm sup_n lambda_n^(1 + theta_out - beta_in) |m_n|.
    """
    if t <= 0:
        raise ValueError("operator norms are taken at positive times")
    if not 0.0 <= beta_in <= 1.0 or theta_out < 0:
        raise ValueError("need 0 <= beta_in <= 1 and theta_out >= 0")
    m = multipliers(domain, family, alpha, t).values
    w = 1.0 + theta_out - beta_in
    return float(np.max(domain.eigenvalues ** w * np.abs(m)))


def expected_slope(family, alpha: float, theta_out: float, beta_in: float) -> float:
    """Small-t power of ``operator_norm``: t^slope."""
    w = 1.0 + theta_out - beta_in
    kind = _kind(family)
    if kind is FamilyKind.E:
        return -alpha * w
    if kind is FamilyKind.S:
        return 1.0 - alpha * w
    return alpha - 1.0 - alpha * w


# symbol numerators as powers of the Laplace variable
_SYMBOL_POWER = {FamilyKind.E: lambda a: a - 1.0, FamilyKind.S: lambda a: a - 2.0, FamilyKind.R: lambda a: 0.0}


def symbol_inversion(family, alpha: float, mu: float, t: float, eta: float | None = None,
                     tol: float = 1e-13) -> float:
    """Inverse Laplace transform of p^k / (p^alpha + mu) at time t.

    Integrates along the Hankel path with radius 1/t and ray angle ``eta``
    in the original Laplace variable p, using adaptive quadrature. For real
    data the lower half of the path mirrors the upper, so the value is
    Im(upper half)/pi.
    """
    kind = _kind(family)
    _check_alpha(alpha)
    if t <= 0 or mu < 0:
        raise ValueError("need t > 0 and mu >= 0")
    # centre of the admissible window (pi/2, pi/alpha)
    eta = 0.5 * (0.5 * math.pi + math.pi / alpha) if eta is None else eta
    if not math.pi / 2 < eta < min(math.pi, math.pi / alpha):
        raise ValueError("ray angle must keep p^alpha inside the resolvent sector")
    k = _SYMBOL_POWER[kind](alpha)
    r = 1.0 / t

    def g(p):
        return np.exp(p * t) * p ** k / (p ** alpha + mu)

    e = complex(math.cos(eta), math.sin(eta))

    def ray(rho):
        return (g(rho * e) * e).imag

    def arc(phi):
        p = r * complex(math.cos(phi), math.sin(phi))
        return (g(p) * 1j * p).imag

    # e^{rho t cos(eta)} has fallen below 1e-18 past this point
    length = (1.0 + math.log(1e18)) / (t * -math.cos(eta))
    # pole of the symbol, close to the ray when eta nears pi/alpha
    pole = mu ** (1.0 / alpha) if mu > 0 else 0.0
    marks = sorted({x for x in (pole, 2 * pole) if r < x < length})
    edges = [r] + marks + [length]
    total, _ = integrate.quad(arc, 0.0, eta, epsabs=tol, epsrel=tol, limit=200)
    for a, b in zip(edges[:-1], edges[1:]):
        # split long stretches so each piece sees a few oscillations
        n = max(1, int(math.ceil((b - a) * t * math.sin(eta) / 20.0)))
        for lo, hi in zip(np.linspace(a, b, n + 1)[:-1], np.linspace(a, b, n + 1)[1:]):
            part, _ = integrate.quad(ray, lo, hi, epsabs=tol, epsrel=tol, limit=200)
            total += part
    return total / math.pi


class QuadratureFailure(ArithmeticError):
    pass


def subordination_residual(domain: SpectralDomain, alpha: float, t: float, fld: SpectralField,
                           which: str = "S_from_E", tol: float = 1e-12) -> float:
    """L2 gap between S or R applied directly and rebuilt from E by quadrature.

    S(t) = int_0^t E(s) ds and R(t) = int_0^t g_{a-1}(t - s) E(s) ds with
    g_c(t) = t^(c-1)/Gamma(c). The R integrand is singular at s = t; the
    substitution v = (t - s)^(a-1) removes it. All active modes share one
    vector-valued adaptive quadrature.
    """
    _check_alpha(alpha)
    if t <= 0:
        raise ValueError("time must be positive")
    domain.check_field(fld)
    if which not in ("S_from_E", "R_from_E"):
        raise ValueError("which must be S_from_E or R_from_E")
    family = FamilyKind.S if which == "S_from_E" else FamilyKind.R
    active = np.flatnonzero(fld.coeffs)
    if active.size == 0:
        return 0.0
    direct = multipliers(domain, family, alpha, t).values[active]
    lam = domain.eigenvalues[active]

    def e_modes(s):
        return np.asarray(scalar_multiplier(FamilyKind.E, alpha, lam, max(s, 0.0)), float)

    if family is FamilyKind.S:
        val, err = integrate.quad_vec(e_modes, 0.0, t, epsabs=tol, epsrel=tol, limit=400)
    else:
        p = 1.0 / (alpha - 1.0)
        val, err = integrate.quad_vec(lambda v: e_modes(t - v ** p), 0.0, t ** (alpha - 1.0),
                                      epsabs=tol, epsrel=tol, limit=400)
        val = val * p / float(gamma(alpha - 1.0))
    if not np.all(np.isfinite(val)) or err > 1e-6:
        raise QuadratureFailure(f"subordination quadrature did not converge (err {err:.2e})")
    gap = (direct - val) * fld.coeffs[active]
    return float(np.sqrt(np.sum(gap ** 2)))
