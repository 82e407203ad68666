"""Mild solutions of the semilinear fractional wave equation by product integration.

The solution satisfies, mode by mode,

    u(t) = E(t) u0 + S(t) u1 + int_0^t R(t - s) f(u(s)) ds.

The forcing f(u) is frozen on each interval (t_{j-1}, t_j] at its right
endpoint value, and the kernel is integrated exactly through the primitive

    G(tau) = int_0^tau s^(a-1) E_{a,a}(-lam s^a) ds = tau^a E_{a,a+1}(-lam tau^a),

so node j enters the integral up to t_k with weight
G(t_k - t_{j-1}) - G(t_k - t_j). The current node carries the weight G(h),
which makes every step implicit; it is resolved by Picard iteration.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import io as fio
from .mittag_leffler import ml
from .operators import multipliers
from .spectral import (
    SpectralDomain,
    SpectralField,
    admissibility,
    dealias_mask,
    fractional_norm,
    lq_norm,
)


class SolverError(RuntimeError):
    pass


class PicardNonConvergence(SolverError):
    def __init__(self, message, residual, partial=None):
        super().__init__(message)
        self.residual = residual
        self.partial = partial


class AdmissibilityError(SolverError):
    pass


class StepSizeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class NonlinearitySpec:
    """f(u) = c u |u|^(rho-1), or a piecewise-linear table.

    The table is interpolated linearly and extended linearly beyond its end
    points, so two points (-1, -k), (1, k) give the linear map f(u) = k u.
    """

    kind: str = "power_abs"
    coefficient: float = 1.0
    exponent: float = 1.5
    table_x: tuple = ()
    table_y: tuple = ()

    def __post_init__(self):
        if self.kind not in ("power_abs", "custom_table"):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if not self.exponent > 1:
            raise ValueError("exponent must exceed 1")
        if self.kind == "custom_table":
            x = np.asarray(self.table_x, float)
            y = np.asarray(self.table_y, float)
            if x.size < 2 or x.shape != y.shape or np.any(np.diff(x) <= 0):
                raise ValueError("table needs at least two points with increasing x")
            object.__setattr__(self, "table_x", tuple(x))
            object.__setattr__(self, "table_y", tuple(y))

    @classmethod
    def linear(cls, kappa: float) -> "NonlinearitySpec":
        return cls(kind="custom_table", table_x=(-1.0, 1.0), table_y=(-kappa, kappa))

    @property
    def is_zero(self) -> bool:
        if self.kind == "power_abs":
            return self.coefficient == 0
        return not any(self.table_y)

    @property
    def growth_constant(self) -> float:
        """C in |f(r) - f(s)| <= C (|r|^(rho-1) + |s|^(rho-1)) |r - s|."""
        return abs(self.coefficient) * self.exponent

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "power_abs":
            with np.errstate(over="ignore", invalid="ignore"):
                return self.coefficient * u * np.abs(u) ** (self.exponent - 1.0)
        x = np.asarray(self.table_x)
        y = np.asarray(self.table_y)
        out = np.interp(u, x, y)
        lo = u < x[0]
        hi = u > x[-1]
        out[lo] = y[0] + (u[lo] - x[0]) * (y[1] - y[0]) / (x[1] - x[0])
        out[hi] = y[-1] + (u[hi] - x[-1]) * (y[-1] - y[-2]) / (x[-1] - x[-2])
        return out

    def lipschitz(self, bound: float) -> float:
        """Lipschitz constant of f on [-bound, bound]."""
        if self.kind == "power_abs":
            return abs(self.coefficient) * self.exponent * bound ** (self.exponent - 1.0)
        return float(np.max(np.abs(np.diff(self.table_y) / np.diff(self.table_x))))


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 1.5
    t_end: float = 1.0
    steps: int = 100
    picard_tol: float = 1e-12
    picard_max_iters: int = 100
    blowup_threshold: float = 1e6
    dealias: bool = False
    q: float = 2.0
    theta: float = 0.0
    grading: float = 1.0
    override_admissibility: bool = False

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie in (1, 2)")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("steps must be a positive integer")
        if not self.picard_tol >= 1e-14:
            raise ValueError("picard_tol must be at least 1e-14")
        if self.picard_max_iters < 1:
            raise ValueError("picard_max_iters must be positive")
        if not self.blowup_threshold > 0:
            raise ValueError("blowup_threshold must be positive")
        if not self.q > 1:
            raise ValueError("q must exceed 1")
        if self.theta < 0:
            raise ValueError("theta must be non-negative")
        if not self.grading >= 1:
            raise ValueError("grading exponent must be at least 1")

    def times(self) -> np.ndarray:
        s = np.arange(self.steps + 1) / self.steps
        return self.t_end * s ** self.grading


def kernel_primitive(alpha: float, lam, tau):
    """G(tau) = tau^a E_{a,a+1}(-lam tau^a), broadcasting lam against tau."""
    lam, tau = np.broadcast_arrays(np.asarray(lam, float), np.asarray(tau, float))
    out = np.zeros(lam.shape)
    pos = tau > 0
    if pos.any():
        ta = tau[pos] ** alpha
        out[pos] = ta * ml(alpha, alpha + 1.0, -lam[pos] * ta).real
    return out


def _is_uniform(times):
    d = np.diff(times)
    return d.size > 0 and np.all(np.abs(d - d[0]) <= 1e-12 * d[0])


def _weight_row(alpha, lam, times, k):
    # node j = 1..k gets G(t_k - t_{j-1}) - G(t_k - t_j); node 0 gets nothing
    lags = times[k] - times[: k + 1]
    g = kernel_primitive(alpha, lam[:, None], lags[None, :])
    row = np.zeros((lam.size, k + 1))
    row[:, 1:] = g[:, :-1] - g[:, 1:]
    return row


def convolution_weights(domain: SpectralDomain, alpha: float, times) -> np.ndarray:
    """Dense weights W[n, k, j] of node j in the integral up to t_k, per mode n."""
    times = np.asarray(times, float)
    if times[0] != 0 or np.any(np.diff(times) <= 0):
        raise ValueError("time grid must start at 0 and increase")
    lam = domain.eigenvalues
    K = times.size - 1
    W = np.zeros((lam.size, K + 1, K + 1))
    if _is_uniform(times):
        lagw = _LagWeights(alpha, lam, times[1])
        for k in range(1, K + 1):
            W[:, k, 1:k + 1] = lagw.get(k)[:, ::-1]
        return W
    for k in range(1, K + 1):
        W[:, k, : k + 1] = _weight_row(alpha, lam, times, k)
    return W


class _LagWeights:
    """Uniform grids: the weight of node j into t_k depends on k - j only."""

    def __init__(self, alpha, lam, h):
        self.alpha, self.lam, self.h = alpha, lam, h
        self.g = np.zeros((lam.size, 1))

    def get(self, k):
        """w[:, d] for lags d = 0..k-1 (d = 0 is the current node)."""
        have = self.g.shape[1] - 1
        if have < k:
            d = np.arange(have + 1, 2 * k + 1)
            extra = kernel_primitive(self.alpha, self.lam[:, None], (d * self.h)[None, :])
            self.g = np.concatenate([self.g, extra], axis=1)
        return self.g[:, 1:k + 1] - self.g[:, :k]


@dataclass
class Trajectory:
    domain: SpectralDomain
    config: SolverConfig
    nonlinearity: NonlinearitySpec
    u0: SpectralField
    u1: SpectralField
    times: list = field(default_factory=list)
    coeffs: list = field(default_factory=list)
    forcing: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    blown: bool = False
    t_flag: float | None = None
    advice: list = field(default_factory=list)

    @property
    def fields(self):
        return [SpectralField(c) for c in self.coeffs]

    @property
    def final(self) -> SpectralField:
        return SpectralField(self.coeffs[-1])

    def as_array(self) -> np.ndarray:
        return np.array(self.coeffs)

    def copy(self) -> "Trajectory":
        return replace(self, times=list(self.times), coeffs=list(self.coeffs),
                       forcing=list(self.forcing), diagnostics=[dict(d) for d in self.diagnostics],
                       advice=list(self.advice))


class _Forcing:
    """Pseudo-spectral f: coefficients -> grid -> pointwise f -> coefficients."""

    def __init__(self, domain, f, dealias):
        self.domain, self.f = domain, f
        self.mask = dealias_mask(domain) if dealias else None
        self.zero = f.is_zero

    def values(self, c):
        return (np.asarray(c) @ self.domain.basis).reshape(c.shape[:-1] + self.domain.grid_shape)

    def __call__(self, c, grid=None):
        if self.zero:
            return np.zeros_like(c)
        grid = self.values(c) if grid is None else grid
        fv = self.f(grid).reshape(c.shape[:-1] + (-1,))
        out = fv @ self.domain._weighted_basis.T
        if self.mask is not None:
            out = out * self.mask
        return out


def _check_admissible(domain, config, f):
    if f.kind != "power_abs" or f.is_zero:
        return
    verdict = admissibility(domain.dimension, 2.0, f.exponent, config.alpha)
    if verdict.ok:
        return
    msg = (f"exponent {f.exponent} is outside the admissible range for N={domain.dimension} "
           f"(beta_max={verdict.beta_max:.4g}, lower bound {verdict.lower:.4g})")
    if not config.override_admissibility:
        raise AdmissibilityError(msg)
    warnings.warn(msg, StepSizeWarning, stacklevel=3)


def _linear_part(domain, alpha, t, u0, u1):
    out = multipliers(domain, "E", alpha, t).values * u0.coeffs
    if np.any(u1.coeffs):
        out = out + multipliers(domain, "S", alpha, t).values * u1.coeffs
    return out


def _diagnostics(domain, config, t, c, grid, iters, resid, blown):
    return {
        "t": float(t),
        "l2_norm": float(np.linalg.norm(c)),
        "lq_norm": lq_norm(domain, grid, config.q),
        "frac_norm_theta": fractional_norm(domain, SpectralField(c), config.theta),
        "picard_iters": int(iters),
        "picard_residual": float(resid),
        "blown": bool(blown),
    }


def _advance(traj: Trajectory, new_times) -> Trajectory:
    """Append nodes at ``new_times``, reusing the full stored history."""
    domain, config, f = traj.domain, traj.config, traj.nonlinearity
    alpha = config.alpha
    lam = domain.eigenvalues
    forcing = _Forcing(domain, f, config.dealias)
    times = np.concatenate([np.asarray(traj.times, float), np.asarray(new_times, float)])
    uniform = _is_uniform(times)
    lagw = _LagWeights(alpha, lam, times[1]) if uniform else None
    F = traj.forcing
    start = len(traj.times)
    for k in range(start, times.size):
        t = times[k]
        if uniform:
            w = lagw.get(k)[:, ::-1]  # columns j = 1..k
            row = np.concatenate([np.zeros((lam.size, 1)), w], axis=1)
        else:
            row = _weight_row(alpha, lam, times, k)
        lin = _linear_part(domain, alpha, t, traj.u0, traj.u1)
        hist = lin.copy()
        if k > 1:
            hist += np.einsum("nj,jn->n", row[:, 1:k], np.asarray(F[1:k]))
        w_self = row[:, k]
        u = traj.coeffs[-1].copy()
        grid = forcing.values(u)
        resid = np.inf
        iters = 0
        blown = False
        if forcing.zero:
            u, grid, resid, iters = hist, forcing.values(hist), 0.0, 1
            fk = np.zeros_like(u)
        else:
            lip = f.lipschitz(max(float(np.max(np.abs(grid))), 1e-300)) * float(np.max(w_self))
            if lip >= 0.5:
                traj.advice.append((float(t), lip))
                warnings.warn(f"step at t={t:.6g}: weight x Lipschitz = {lip:.3g} >= 0.5, "
                              "consider a smaller step", StepSizeWarning, stacklevel=3)
            while iters < config.picard_max_iters:
                fk = forcing(u, grid)
                new = hist + w_self * fk
                iters += 1
                resid = float(np.linalg.norm(new - u))
                u = new
                grid = forcing.values(u)
                if not np.all(np.isfinite(u)) or lq_norm(domain, grid, config.q) > config.blowup_threshold:
                    blown = True
                    break
                if resid <= config.picard_tol * max(1.0, float(np.linalg.norm(u))):
                    break
            else:
                raise PicardNonConvergence(
                    f"Picard iteration at t={t:.6g} stopped after {iters} iterations "
                    f"with residual {resid:.3e}", resid, traj)
            fk = forcing(u, grid)
        diag = _diagnostics(domain, config, t, u, grid, iters, resid, False)
        if blown or not math.isfinite(diag["lq_norm"]) or diag["lq_norm"] > config.blowup_threshold:
            diag["blown"] = True
            blown = True
        traj.times.append(float(t))
        traj.coeffs.append(u)
        traj.forcing.append(fk)
        traj.diagnostics.append(diag)
        if blown:
            traj.blown = True
            traj.t_flag = float(t)
            break
    return traj


def _start(domain, config, f, u0, u1) -> Trajectory:
    domain.check_field(u0)
    domain.check_field(u1)
    traj = Trajectory(domain, config, f, u0, u1)
    forcing = _Forcing(domain, f, config.dealias)
    c0 = np.array(u0.coeffs, dtype=float)
    grid = forcing.values(c0)
    traj.times.append(0.0)
    traj.coeffs.append(c0)
    traj.forcing.append(forcing(c0, grid))
    diag = _diagnostics(domain, config, 0.0, c0, grid, 0, 0.0, False)
    traj.diagnostics.append(diag)
    if diag["lq_norm"] > config.blowup_threshold:
        traj.blown, traj.t_flag, diag["blown"] = True, 0.0, True
    return traj


def solve(domain: SpectralDomain, config: SolverConfig, f: NonlinearitySpec,
          u0: SpectralField, u1: SpectralField, times=None) -> Trajectory:
    """Time-stepped mild solution on the config grid (or explicit ``times``).

    Stops early, with ``blown`` set, once the monitored L^q norm passes the
    blow-up threshold. Raises PicardNonConvergence if a step's fixed-point
    iteration does not settle within ``picard_max_iters``.
    """
    _check_admissible(domain, config, f)
    times = config.times() if times is None else np.asarray(times, float)
    if times[0] != 0 or np.any(np.diff(times) <= 0):
        raise ValueError("time grid must start at 0 and increase")
    traj = _start(domain, config, f, u0, u1)
    if traj.blown:
        return traj
    return _advance(traj, times[1:])


def continue_trajectory(traj: Trajectory, extra_time: float, config: SolverConfig | None = None,
                        f: NonlinearitySpec | None = None, steps: int | None = None) -> Trajectory:
    """Extend a run past its horizon; the stored prefix is left untouched.

    New nodes are spaced like the last step unless ``steps`` is given.
    """
    if traj.blown:
        raise SolverError("cannot continue a trajectory flagged as blown up")
    if extra_time < 0:
        raise ValueError("extra_time must be non-negative")
    out = traj.copy()
    if config is not None:
        out.config = config
    if f is not None:
        out.nonlinearity = f
    if extra_time == 0:
        return out
    t_old = out.times[-1]
    if steps is None:
        h = out.times[-1] - out.times[-2] if len(out.times) > 1 else out.config.t_end / out.config.steps
        steps = max(1, int(round(extra_time / h)))
    new_times = t_old + extra_time * np.arange(1, steps + 1) / steps
    return _advance(out, new_times)


@dataclass
class GlobalPicardResult:
    trajectory: Trajectory
    iterations: int
    ratios: list
    diverged: bool
    converged: bool


def solve_picard_global(domain: SpectralDomain, config: SolverConfig, f: NonlinearitySpec,
                        u0: SpectralField, u1: SpectralField, tau: float | None = None,
                        initial: str = "linear") -> GlobalPicardResult:
    """Iterate the full fixed-point map on [0, tau] at once.

    Starts from the linear part (``initial="linear"``) or from zero, and
    records the contraction ratio sup||Tu - Tv|| / sup||u - v|| between
    successive iterates. Three ratios above 1 in a row mark divergence.
    """
    _check_admissible(domain, config, f)
    tau = config.t_end if tau is None else tau
    if not 0 < tau <= config.t_end * (1 + 1e-12):
        raise ValueError("window must satisfy 0 < tau <= t_end")
    times = config.times()
    times = times[times <= tau * (1 + 1e-12)]
    W = convolution_weights(domain, config.alpha, times)
    forcing = _Forcing(domain, f, config.dealias)
    lin = np.array([_linear_part(domain, config.alpha, t, u0, u1) for t in times])
    U = lin.copy() if initial == "linear" else np.zeros_like(lin)
    if initial == "zero":
        U[0] = u0.coeffs
    ratios, prev_step, above, diverged, converged = [], None, 0, False, False
    it = 0
    for it in range(1, config.picard_max_iters + 1):
        F = forcing(U)
        new = lin + np.einsum("nkj,jn->kn", W, F)
        step = float(np.max(np.linalg.norm(new - U, axis=1)))
        U = new
        if prev_step is not None and prev_step > 0:
            ratios.append(step / prev_step)
            above = above + 1 if ratios[-1] > 1 else 0
        prev_step = step
        if not np.all(np.isfinite(U)) or above >= 3:
            diverged = True
            break
        if step <= config.picard_tol * max(1.0, float(np.max(np.linalg.norm(U, axis=1)))):
            converged = True
            break
    traj = Trajectory(domain, config, f, u0, u1)
    grids = forcing.values(U)
    F = forcing(U) if np.all(np.isfinite(U)) else np.full_like(U, np.nan)
    for k, t in enumerate(times):
        traj.times.append(float(t))
        traj.coeffs.append(U[k])
        traj.forcing.append(F[k])
        with np.errstate(all="ignore"):
            traj.diagnostics.append(_diagnostics(domain, config, t, U[k], grids[k], it, prev_step or 0.0,
                                                 diverged))
    return GlobalPicardResult(traj, it, ratios, diverged, converged)


@dataclass(frozen=True)
class BlowupReport:
    blown: bool
    t_flag: float | None
    growth_table: list


def detect_blowup(traj: Trajectory) -> BlowupReport:
    table = [(d["t"], d["lq_norm"]) for d in traj.diagnostics]
    thr = traj.config.blowup_threshold
    crossed = [t for t, v in table if not (v <= thr)]
    if crossed:
        return BlowupReport(True, crossed[0], table)
    return BlowupReport(False, None, table)


TRAJECTORY_COLUMNS = ("t", "l2_norm", "lq_norm", "frac_norm_theta", "picard_iters", "picard_residual", "blown")


def trajectory_rows(traj: Trajectory):
    return [[d[c] for c in TRAJECTORY_COLUMNS] for d in traj.diagnostics]


def write_trajectory_csv(traj: Trajectory, path) -> None:
    fio.write_csv(path, TRAJECTORY_COLUMNS, trajectory_rows(traj))


def write_snapshots_csv(traj: Trajectory, path, at_times=None) -> None:
    """Coefficient vectors at the nodes nearest to ``at_times`` (all nodes if None)."""
    times = np.asarray(traj.times)
    if at_times is None:
        idx = range(times.size)
    else:
        idx = sorted({int(np.argmin(np.abs(times - t))) for t in at_times})
    header = ["t"] + [f"c{n}" for n in range(traj.domain.size)]
    rows = [[times[i]] + list(traj.coeffs[i]) for i in idx]
    fio.write_csv(path, header, rows)
