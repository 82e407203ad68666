"""Reproducible numerical experiments built on the operators and the solver.

Five experiment kinds are available:

* rates: log-log slopes of operator norms at small t.
* dependence: Lipschitz ratios of the solution map under perturbed data.
* convergence: observed order of the time stepping against a linear closed form.
* blowup: an amplitude ladder for the power nonlinearity.
* regularization: vanishing of t^(a theta) ||u(t)||_{X^{1+theta}} as t -> 0.

Every experiment returns an :class:`ExperimentReport`. ``write_report``
turns it into a JSON summary plus one CSV per experiment.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import io as fio
from .mittag_leffler import ml
from .operators import FamilyKind, expected_slope, multipliers
from .spectral import (
    DomainSpec,
    SpectralField,
    admissibility,
    build_domain,
    fractional_norm,
    mode_field,
    zero_field,
)
from .volterra import (
    NonlinearitySpec,
    SolverConfig,
    detect_blowup,
    solve,
)

KINDS = ("rates", "dependence", "convergence", "blowup", "regularization")


class ExperimentError(ValueError):
    pass


def _default_domain(kind):
    if kind == "rates":
        # lambda_max t_min^alpha must reach far past the peak of each
        # multiplier profile at t = 1e-4
        return DomainSpec(1, (math.pi,), grid=32000, modes=16000)
    return DomainSpec(1, (math.pi,), grid=64, modes=16)


def _default_solver(kind):
    if kind == "blowup":
        return SolverConfig(alpha=1.5, t_end=3.0, steps=600, blowup_threshold=1e6)
    if kind == "regularization":
        return SolverConfig(alpha=1.5, t_end=1.0, steps=64)
    return SolverConfig(alpha=1.5, t_end=1.0, steps=40)


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    alphas: tuple = (1.25, 1.5, 1.75)
    betas: tuple = (0.0, 0.25, 0.5, 1.0)
    thetas: tuple = (0.0, 0.25)
    families: tuple = ("E", "S", "R")
    t_min: float = 1e-4
    t_max: float = 1e-2
    t_samples: int = 20
    steps: tuple = (20, 40, 80, 160)
    deltas: tuple = (1e-3, 1e-4, 1e-5)
    amplitudes: tuple = (0.0, 1.0, 2.0, 4.0, 8.0, 16.0)
    kappa: float = 0.5
    dyadic_levels: int = 12
    slope_tol: float = 0.05
    r2_min: float = 0.99
    stability_tol: float = 0.2
    order_min: float = 0.9
    seed: int = 0
    output_dir: str | None = None
    threads: int = 1
    domain: DomainSpec | None = None
    solver: SolverConfig | None = None
    nonlinearity: NonlinearitySpec | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ExperimentError(f"unknown experiment kind {self.kind!r}")
        grids = {"rates": ("alphas", "betas", "thetas", "families"),
                 "dependence": ("deltas", "thetas"),
                 "convergence": ("alphas", "steps"),
                 "blowup": ("amplitudes",),
                 "regularization": ("thetas",)}[self.kind]
        for name in grids:
            if len(getattr(self, name)) == 0:
                raise ExperimentError(f"parameter grid {name!r} is empty")
        if not 0 < self.t_min < self.t_max:
            raise ExperimentError("t window must be positive and ordered")
        if self.t_samples < 3:
            raise ExperimentError("need at least three t samples")
        if any(int(s) != s or s < 1 for s in self.steps) or list(self.steps) != sorted(set(self.steps)):
            raise ExperimentError("step counts must be increasing positive integers")
        if any(not d >= 0 for d in self.deltas):
            raise ExperimentError("perturbation sizes must be non-negative")
        if self.threads < 0:
            raise ExperimentError("threads must be >= 0")

    def domain_spec(self) -> DomainSpec:
        return self.domain or _default_domain(self.kind)

    def solver_config(self) -> SolverConfig:
        return self.solver or _default_solver(self.kind)

    def power_law(self) -> NonlinearitySpec:
        return self.nonlinearity or NonlinearitySpec("power_abs", 1.0, 1.5)

    def params(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("domain", "solver", "nonlinearity")}
        out["domain"] = asdict(self.domain_spec())
        out["solver"] = asdict(self.solver_config())
        out["nonlinearity"] = asdict(self.power_law())
        return out


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    window: tuple
    expected_slope: float
    tolerance: float
    passed: bool
    flat: bool = False
    labels: tuple = ()

    @property
    def pass_(self) -> bool:
        return self.passed


@dataclass
class ExperimentReport:
    experiment: str
    params: dict
    results: list
    columns: tuple
    extra: dict = field(default_factory=dict)

    @property
    def pass_count(self) -> int:
        return sum(1 for r in self.results if r.get("pass") is True)

    @property
    def fail_count(self) -> int:
        return sum(1 for r in self.results if r.get("pass") is False)

    def summary(self) -> dict:
        return {"experiment": self.experiment, "params": self.params, "results": self.results,
                "pass_count": self.pass_count, "fail_count": self.fail_count, **self.extra}


def _threads(n):
    return os.cpu_count() or 1 if n == 0 else n


def _pmap(fn, items, threads):
    items = list(items)
    n = _threads(threads)
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def fit_loglog(t, y, expected: float, tol: float, r2_min: float = 0.99, labels=()) -> FitResult:
    """Least-squares line through (log t, log y).

    When log y varies by less than a tenth of what the slope tolerance
    could detect across the window, the data are flat to working accuracy:
    the coefficient of determination is then 0/0 and is reported as 1.
    """
    x = np.log(np.asarray(t, float))
    ly = np.log(np.asarray(y, float))
    slope, intercept = np.polyfit(x, ly, 1)
    resid = ly - (slope * x + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    flat = float(np.ptp(ly)) <= 0.1 * tol * float(np.ptp(x))
    if flat:
        r2 = 1.0
    else:
        r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot
    passed = bool(abs(slope - expected) <= tol and r2 >= r2_min)
    t = np.asarray(t, float)
    return FitResult(float(slope), float(intercept), r2, (float(t.min()), float(t.max())),
                     float(expected), tol, passed, flat, tuple(labels))


def rate_cells(spec: ExperimentSpec):
    """(family, alpha, beta, theta) cells; theta > 0 needs theta < beta."""
    cells = []
    for fam in spec.families:
        for a in spec.alphas:
            for b in spec.betas:
                for th in spec.thetas:
                    if th == 0 or th < b:
                        cells.append((FamilyKind(fam).value, float(a), float(b), float(th)))
    return cells


def run_rates(spec: ExperimentSpec) -> ExperimentReport:
    domain = build_domain(spec.domain_spec())
    lam = domain.eigenvalues
    ts = np.logspace(math.log10(spec.t_min), math.log10(spec.t_max), spec.t_samples)
    cells = rate_cells(spec)
    tables = sorted({(c[0], c[1]) for c in cells})

    def table(key):
        fam, a = key
        return key, np.array([np.abs(multipliers(domain, fam, a, t).values) for t in ts])

    mult = dict(_pmap(table, tables, spec.threads))
    half = lam.size // 2 if domain.dimension == 1 else None
    results, series = [], []
    for fam, a, b, th in cells:
        w = 1.0 + th - b
        weighted = lam ** w * mult[(fam, a)]
        norms = weighted.max(axis=1)
        fit = fit_loglog(ts, norms, expected_slope(fam, a, th, b), spec.slope_tol, spec.r2_min)
        row = {"family": fam, "alpha": a, "beta": b, "theta": th, "slope": fit.slope,
               "intercept": fit.intercept, "r_squared": fit.r_squared, "flat": fit.flat,
               "expected_slope": fit.expected_slope, "tolerance": fit.tolerance,
               "window": [spec.t_min, spec.t_max], "pass": fit.passed}
        if half:
            # the 1D spectrum with half the cutoff is a prefix of this one
            coarse = fit_loglog(ts, weighted[:, :half].max(axis=1), fit.expected_slope, spec.slope_tol)
            row["cutoff_drift"] = abs(fit.slope - coarse.slope)
        results.append(row)
        series.extend([fam, a, b, th, t, v] for t, v in zip(ts, norms))
    results.sort(key=lambda r: (r["family"], r["alpha"], r["beta"], r["theta"]))
    series.sort(key=lambda r: tuple(r[:5]))
    return ExperimentReport("rates", spec.params(), results,
                            ("family", "alpha", "beta", "theta", "t", "norm"), {"series": series})


def seeded_field(size: int, rng: np.random.Generator) -> SpectralField:
    """Coefficients n^-2 times uniforms on [-1, 1]."""
    n = np.arange(1, size + 1)
    return SpectralField(rng.uniform(-1.0, 1.0, size) / n ** 2)


def _unit(c):
    nrm = np.linalg.norm(c)
    return c / nrm if nrm > 0 else c


def _weighted_gap(domain, a, b, alpha, theta):
    return max(t ** (alpha * theta) * fractional_norm(domain, SpectralField(x - y), theta)
               for t, x, y in zip(a.times, a.coeffs, b.coeffs))


def dependence_ratio(domain, config, f, data, other, theta) -> float | None:
    """sup_t t^(a theta) ||u - w||_{X^{1+theta}} / (||u0 - w0|| + ||u1 - w1||).

    Returns None when the two data sets coincide (0/0).
    """
    size = np.linalg.norm(data[0].coeffs - other[0].coeffs) + np.linalg.norm(data[1].coeffs - other[1].coeffs)
    if size == 0:
        return None
    u = solve(domain, config, f, *data)
    w = solve(domain, config, f, *other)
    return _weighted_gap(domain, u, w, config.alpha, theta) / size


def run_dependence(spec: ExperimentSpec) -> ExperimentReport:
    domain = build_domain(spec.domain_spec())
    config = spec.solver_config()
    f = spec.power_law()
    rng = np.random.default_rng(spec.seed)
    u0, u1 = seeded_field(domain.size, rng), seeded_field(domain.size, rng)
    d0, d1 = seeded_field(domain.size, rng).coeffs, seeded_field(domain.size, rng).coeffs
    base = solve(domain, config, f, u0, u1)
    sup = admissibility(domain.dimension, 2.0, f.exponent, config.alpha).theta_sup

    def perturbed(delta):
        # split delta evenly between position and velocity
        w0 = SpectralField(u0.coeffs + 0.5 * delta * _unit(d0))
        w1 = SpectralField(u1.coeffs + 0.5 * delta * _unit(d1))
        return delta, solve(domain, config, f, w0, w1)

    runs = dict(_pmap(perturbed, [d for d in spec.deltas if d > 0], spec.threads))
    results = []
    for th in spec.thetas:
        rows = []
        for delta in spec.deltas:
            if delta == 0:
                rows.append({"theta": th, "delta": 0.0, "ratio": None, "exact_match": True})
                continue
            gap = _weighted_gap(domain, base, runs[delta], config.alpha, th)
            rows.append({"theta": th, "delta": delta, "ratio": gap / delta, "exact_match": False})
        ratios = [r["ratio"] for r in rows if r["ratio"] is not None]
        spread = (max(ratios) - min(ratios)) / max(ratios) if ratios and max(ratios) > 0 else 0.0
        ok = bool(ratios) and all(math.isfinite(r) for r in ratios) and spread < spec.stability_tol
        for r in rows:
            r.update({"spread": spread, "empirical_c": max(ratios) if ratios else None,
                      "admissible": th < sup, "pass": ok})
        results.extend(rows)
    results.sort(key=lambda r: (r["theta"], -r["delta"]))
    return ExperimentReport("dependence", spec.params(), results,
                            ("theta", "delta", "ratio", "spread", "empirical_c", "pass"))


def linear_closed_form(domain, alpha, kappa, t, u0, u1) -> np.ndarray:
    """Per-mode solution of D^a y = (kappa - lam) y with data (y0, y1)."""
    z = (kappa - domain.eigenvalues) * t ** alpha
    return ml(alpha, 1.0, z).real * u0.coeffs + t * ml(alpha, 2.0, z).real * u1.coeffs


def run_convergence(spec: ExperimentSpec) -> ExperimentReport:
    domain = build_domain(spec.domain_spec())
    base = spec.solver_config()
    rng = np.random.default_rng(spec.seed)
    u0, u1 = seeded_field(domain.size, rng), seeded_field(domain.size, rng)
    f = NonlinearitySpec.linear(spec.kappa) if spec.kappa != 0 else NonlinearitySpec("power_abs", 0.0, 1.5)

    def cell(args):
        alpha, steps = args
        config = replace(base, alpha=alpha, steps=int(steps))
        traj = solve(domain, config, f, u0, u1)
        exact = linear_closed_form(domain, alpha, spec.kappa, config.t_end, u0, u1)
        return args, float(np.linalg.norm(traj.coeffs[-1] - exact))

    errs = dict(_pmap(cell, [(a, s) for a in spec.alphas for s in spec.steps], spec.threads))
    results = []
    for a in spec.alphas:
        e = [errs[(a, s)] for s in spec.steps]
        exact_weights = max(e) <= 1e-10
        for i, s in enumerate(spec.steps):
            order = None
            if i > 0 and not exact_weights:
                order = math.log2(e[i - 1] / e[i]) / math.log2(spec.steps[i] / spec.steps[i - 1])
            results.append({"alpha": a, "kappa": spec.kappa, "steps": int(s), "error": e[i],
                            "order": order, "exact": exact_weights})
        orders = [r["order"] for r in results if r["alpha"] == a and r["order"] is not None]
        ok = exact_weights or (bool(orders) and min(orders) >= spec.order_min)
        for r in results:
            if r["alpha"] == a:
                r["pass"] = bool(ok)
    results.sort(key=lambda r: (r["alpha"], r["steps"]))
    return ExperimentReport("convergence", spec.params(), results,
                            ("alpha", "kappa", "steps", "error", "order", "pass"))


def run_blowup(spec: ExperimentSpec) -> ExperimentReport:
    domain = build_domain(spec.domain_spec())
    config = replace(spec.solver_config(), override_admissibility=True)
    f = spec.power_law()
    if f.kind != "power_abs":
        raise ExperimentError("blow-up probes need the power nonlinearity")
    linear = NonlinearitySpec("power_abs", 0.0, f.exponent)
    zero = zero_field(domain)

    def probe(args):
        amp, fn = args
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            traj = solve(domain, config, fn, mode_field(domain, {0: amp}), zero)
        return args, detect_blowup(traj), traj.times[-1]

    amps = sorted(float(a) for a in spec.amplitudes)
    top = [a for a in amps if a > 0][-1:] or [1.0]
    jobs = [(a, f) for a in amps] + [(a, linear) for a in (top[0], 2 * top[0])]
    out = {(a, fn.coefficient): (rep, t_last) for (a, fn), rep, t_last in _pmap(probe, jobs, spec.threads)}
    results, growth = [], []
    crossing = []
    for a in amps:
        rep, t_last = out[(a, f.coefficient)]
        crossing.append(rep.t_flag if rep.blown else math.inf)
        results.append({"case": "nonlinear", "amplitude": a, "blown": rep.blown, "t_flag": rep.t_flag,
                        "horizon_reached": t_last})
        growth.extend(["nonlinear", a, t, v] for t, v in rep.growth_table)
    monotone = all(c2 <= c1 for c1, c2 in zip(crossing, crossing[1:]))
    any_blown = any(math.isfinite(c) for c in crossing)
    zero_ok = all(not r["blown"] for r in results if r["amplitude"] == 0)
    for r in results:
        r["pass"] = bool(monotone and any_blown and zero_ok)
    lin = []
    for a in (top[0], 2 * top[0]):
        rep, t_last = out[(a, 0.0)]
        lin.append(rep)
        growth.extend(["linear", a, t, v] for t, v in rep.growth_table)
    # a linear problem scales with its data
    peak = [max(v for _, v in rep.growth_table) for rep in lin]
    scales = abs(peak[1] - 2 * peak[0]) <= 1e-9 * max(1.0, peak[1])
    for a, rep in zip((top[0], 2 * top[0]), lin):
        results.append({"case": "linear", "amplitude": a, "blown": rep.blown, "t_flag": rep.t_flag,
                        "horizon_reached": rep.growth_table[-1][0],
                        "pass": bool(not rep.blown and scales)})
    results.sort(key=lambda r: (r["case"], r["amplitude"]))
    growth.sort(key=lambda r: (r[0], r[1], r[2]))
    return ExperimentReport("blowup", spec.params(), results,
                            ("case", "amplitude", "t", "lq_norm"),
                            {"crossing_times_monotone": monotone, "growth": growth})


def dyadic_times(t0: float, levels: int, steps: int) -> np.ndarray:
    """t0 2^-j for j = 0..levels merged with a uniform grid of ``steps`` on [0, t0]."""
    dy = t0 * 2.0 ** -np.arange(levels + 1)
    grid = np.linspace(0.0, t0, steps + 1)
    return np.unique(np.concatenate([grid, dy]))


def monotone_tail(vals, min_len: int = 3):
    """First index from which ``vals`` keeps strictly decreasing, or None.

    ``vals`` is sampled along a decreasing t sequence; the tail must hold
    at least ``min_len`` samples to count.
    """
    k = len(vals) - 1
    while k > 0 and vals[k] < vals[k - 1]:
        k -= 1
    return k if len(vals) - k >= min_len else None


def run_regularization(spec: ExperimentSpec) -> ExperimentReport:
    domain = build_domain(spec.domain_spec())
    config = spec.solver_config()
    f = spec.power_law()
    sup = admissibility(domain.dimension, 2.0, f.exponent, config.alpha).theta_sup
    phi = mode_field(domain, {0: 1.0})
    cases = {"position": (phi, zero_field(domain)), "velocity": (zero_field(domain), phi)}
    times = dyadic_times(config.t_end, spec.dyadic_levels, config.steps)
    dy = config.t_end * 2.0 ** -np.arange(spec.dyadic_levels + 1)
    results = []
    for name, (u0, u1) in cases.items():
        traj = solve(domain, config, f, u0, u1, times=times)
        at = {t: c for t, c in zip(traj.times, traj.coeffs)}
        for th in spec.thetas:
            vals = []
            for t in dy:
                c = at[min(at, key=lambda s: abs(s - t))]
                vals.append(t ** (config.alpha * th) * fractional_norm(domain, SpectralField(c), th))
            # vals runs from t0 down toward 0
            start = monotone_tail(vals)
            t_star = float(dy[start]) if start is not None else None
            verdict = None
            if th > 0:
                verdict = bool(start is not None and vals[-1] < 0.1 * vals[0] and th < sup)
            for t, v in zip(dy, vals):
                results.append({"case": name, "theta": th, "t": float(t), "value": v, "t_star": t_star,
                                "pass": verdict})
    results.sort(key=lambda r: (r["case"], r["theta"], r["t"]))
    return ExperimentReport("regularization", spec.params(), results, ("case", "theta", "t", "value", "pass"))


RUNNERS = {"rates": run_rates, "dependence": run_dependence, "convergence": run_convergence,
           "blowup": run_blowup, "regularization": run_regularization}


def run(spec: ExperimentSpec) -> ExperimentReport:
    return RUNNERS[spec.kind](spec)


_PLOT_SCRIPT = '''"""Plot {name}.csv (needs matplotlib; not used by the library itself)."""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{name}.csv"
with open(path) as fh:
    rows = list(csv.DictReader(fh))
groups = defaultdict(list)
for r in rows:
    groups[tuple(r[k] for k in {keys!r})].append((float(r["{x}"]), float(r["{y}"])))
for key, pts in sorted(groups.items()):
    pts.sort()
    plt.loglog(*zip(*pts), label=" ".join(key))
plt.xlabel("{x}")
plt.ylabel("{y}")
plt.legend(fontsize=6)
plt.savefig(path.replace(".csv", ".png"), dpi=150)
'''


def _csv_payload(report: ExperimentReport):
    if report.experiment == "rates":
        return report.columns, report.extra["series"], ("family", "alpha", "beta", "theta"), "t", "norm"
    if report.experiment == "blowup":
        return report.columns, report.extra["growth"], ("case", "amplitude"), "t", "lq_norm"
    cols = report.columns
    rows = [[r.get(c) if r.get(c) is not None else "" for c in cols] for r in report.results]
    rows = [[("" if v == "" else (int(v) if isinstance(v, bool) else v)) for v in row] for row in rows]
    plot = {"dependence": (("theta",), "delta", "ratio"), "convergence": (("alpha",), "steps", "error"),
            "regularization": (("case", "theta"), "t", "value")}[report.experiment]
    return cols, rows, *plot


def write_report(report: ExperimentReport, out_dir, plot_script: bool = False) -> dict:
    """JSON summary + CSV data (+ optional plotting script); returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    name = report.experiment
    paths = {"json": os.path.join(out_dir, f"{name}.json"), "csv": os.path.join(out_dir, f"{name}.csv")}
    summary = report.summary()
    summary.pop("series", None)
    summary.pop("growth", None)
    fio.write_json(paths["json"], summary)
    cols, rows, keys, x, y = _csv_payload(report)
    fio.write_csv(paths["csv"], cols, rows)
    if plot_script:
        paths["plot"] = os.path.join(out_dir, f"plot_{name}.py")
        fio.atomic_write_text(paths["plot"], _PLOT_SCRIPT.format(name=name, keys=tuple(keys), x=x, y=y))
    return paths


__all__ = [
    "ExperimentSpec", "ExperimentReport", "FitResult", "fit_loglog", "rate_cells", "run", "run_rates",
    "run_dependence", "run_convergence", "run_blowup", "run_regularization", "write_report",
    "seeded_field", "linear_closed_form", "dependence_ratio", "dyadic_times", "monotone_tail",
]
