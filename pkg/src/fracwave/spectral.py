"""Dirichlet Laplacian on intervals and rectangles, in its eigenbasis.

Eigenpairs are closed form: on (0, L) the modes are sqrt(2/L) sin(m pi x / L)
with eigenvalue (m pi / L)^2, and rectangles use tensor products. Grid
integration is the composite trapezoid rule on n + 1 uniform nodes per axis,
under which the retained sines are exactly orthonormal whenever the mode
index stays below n.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class DomainSpec:
    """Box geometry, grid intervals per axis and modes kept per axis."""

    dimension: int = 1
    lengths: tuple = (math.pi,)
    grid: int = 64
    modes: int = 16

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise DomainError("dimension must be 1 or 2")
        lengths = tuple(float(v) for v in np.atleast_1d(self.lengths))
        if len(lengths) == 1 and self.dimension == 2:
            lengths = lengths * 2
        if len(lengths) != self.dimension:
            raise DomainError("need one side length per axis")
        if any(not (v > 0 and math.isfinite(v)) for v in lengths):
            raise DomainError("side lengths must be positive")
        object.__setattr__(self, "lengths", lengths)
        if int(self.modes) != self.modes or self.modes < 1:
            raise DomainError("mode cutoff must be a positive integer")
        if int(self.grid) != self.grid or self.grid < 2 * self.modes:
            raise DomainError("grid resolution must be at least twice the mode cutoff")


def _readonly(a):
    a = np.asarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SpectralDomain:
    spec: DomainSpec
    eigenvalues: np.ndarray
    mode_index: np.ndarray  # (size, dimension) integer mode tuples

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    @property
    def dimension(self) -> int:
        return self.spec.dimension

    @property
    def grid_shape(self) -> tuple:
        return (self.spec.grid + 1,) * self.spec.dimension

    @cached_property
    def axes(self) -> tuple:
        return tuple(np.linspace(0.0, L, self.spec.grid + 1) for L in self.spec.lengths)

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights on the grid (outer product in 2D)."""
        per_axis = []
        for L in self.spec.lengths:
            w = np.full(self.spec.grid + 1, L / self.spec.grid)
            w[[0, -1]] *= 0.5
            per_axis.append(w)
        w = per_axis[0]
        for extra in per_axis[1:]:
            w = np.multiply.outer(w, extra)
        return _readonly(w)

    def _axis_table(self, axis):
        L = self.spec.lengths[axis]
        x = self.axes[axis]
        m = np.arange(1, self.spec.modes + 1)
        tab = math.sqrt(2.0 / L) * np.sin(np.outer(m, x) * (math.pi / L))
        tab[:, [0, -1]] = 0.0  # exact Dirichlet values
        return tab

    @cached_property
    def basis(self) -> np.ndarray:
        """Row n holds phi_n sampled on the flattened grid."""
        tabs = [self._axis_table(a) for a in range(self.dimension)]
        idx = self.mode_index - 1
        rows = tabs[0][idx[:, 0]]
        if self.dimension == 2:
            rows = (rows[:, :, None] * tabs[1][idx[:, 1]][:, None, :]).reshape(self.size, -1)
        return _readonly(rows)

    @cached_property
    def _weighted_basis(self):
        return _readonly(self.basis * self.weights.ravel()[None, :])

    def check_values(self, values):
        values = np.asarray(values, dtype=float)
        if values.shape != self.grid_shape:
            raise DomainError(f"grid values have shape {values.shape}, expected {self.grid_shape}")
        return values

    def check_field(self, fld: "SpectralField"):
        if fld.coeffs.shape != (self.size,):
            raise DomainError(f"field has {fld.coeffs.size} coefficients, domain has {self.size} modes")
        return fld


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Truncated eigen-expansion sum_n c_n phi_n."""

    coeffs: np.ndarray = field()

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        object.__setattr__(self, "coeffs", _readonly(c))

    def __len__(self):
        return self.coeffs.size

    def __add__(self, other):
        return SpectralField(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SpectralField(self.coeffs - other.coeffs)

    def __mul__(self, a):
        return SpectralField(a * self.coeffs)

    __rmul__ = __mul__

    def values(self, domain: SpectralDomain) -> np.ndarray:
        return inverse_transform(domain, self)


def build_domain(spec: DomainSpec) -> SpectralDomain:
    """Eigenpairs of -Laplacian with Dirichlet conditions, ascending.

    Ties (e.g. (1, 2) and (2, 1) on a square) are broken lexicographically
    on the mode tuple.
    """
    m = range(1, spec.modes + 1)
    tuples = np.array(list(itertools.product(m, repeat=spec.dimension)), dtype=int)
    scale = np.array([(math.pi / L) ** 2 for L in spec.lengths])
    lam = (tuples.astype(float) ** 2 * scale).sum(axis=1)
    keys = [tuples[:, a] for a in reversed(range(spec.dimension))] + [lam]
    order = np.lexsort(keys)
    return SpectralDomain(spec, _readonly(lam[order]), _readonly(tuples[order]))


def zero_field(domain: SpectralDomain) -> SpectralField:
    return SpectralField(np.zeros(domain.size))


def mode_field(domain: SpectralDomain, amplitudes: dict) -> SpectralField:
    """Field with the given coefficients on modes addressed by position."""
    c = np.zeros(domain.size)
    for n, a in amplitudes.items():
        c[n] = a
    return SpectralField(c)


def eigenfunction(domain: SpectralDomain, n: int) -> np.ndarray:
    """Grid samples of the n-th eigenfunction (0-based, ascending order)."""
    return domain.basis[n].reshape(domain.grid_shape).copy()


def transform(domain: SpectralDomain, values) -> SpectralField:
    values = domain.check_values(values)
    return SpectralField(domain._weighted_basis @ values.ravel())


def inverse_transform(domain: SpectralDomain, fld: SpectralField) -> np.ndarray:
    domain.check_field(fld)
    return (fld.coeffs @ domain.basis).reshape(domain.grid_shape)


def fractional_norm(domain: SpectralDomain, fld: SpectralField, theta: float) -> float:
    """Norm in the power space X^{1+theta}: sqrt(sum lambda^(2 theta) c^2)."""
    if not theta >= 0:
        raise DomainError("theta must be non-negative")
    domain.check_field(fld)
    return float(math.sqrt(np.sum(domain.eigenvalues ** (2.0 * theta) * fld.coeffs ** 2)))


def lq_norm(domain: SpectralDomain, values, q: float) -> float:
    if not q > 1:
        raise DomainError("q must exceed 1")
    values = domain.check_values(values)
    with np.errstate(over="ignore"):
        return float(np.sum(domain.weights * np.abs(values) ** q) ** (1.0 / q))


def dealias_mask(domain: SpectralDomain) -> np.ndarray:
    """2/3 rule: keep modes whose every index is within 2/3 of the cutoff."""
    keep = math.floor(2.0 * domain.spec.modes / 3.0)
    return np.all(domain.mode_index <= max(keep, 1), axis=1)


@dataclass(frozen=True)
class Admissibility:
    beta_max: float
    theta_sup: float
    lower: float
    ok: bool


def admissibility(N: int, q: float, rho: float, alpha: float) -> Admissibility:
    """Largest beta with rho <= 1 + 2q(1 - beta)/N, and whether it is usable.

    The usable window for beta is (1 - N/(2q'), 1) with 1/q + 1/q' = 1.
    ``beta_max`` is reported unclamped so that boundary cases stay visible;
    ``ok`` holds when it lands inside the window and alpha lies in (1, 2).
    """
    if N < 1 or not q > 1 or not rho > 1:
        return Admissibility(float("nan"), float("nan"), float("nan"), False)
    q_dual = q / (q - 1.0)
    beta_max = 1.0 - N * (rho - 1.0) / (2.0 * q)
    lower = max(1.0 - N / (2.0 * q_dual), 0.0)
    ok = lower < beta_max and 1.0 < alpha < 2.0
    return Admissibility(beta_max, beta_max, lower, bool(ok))
