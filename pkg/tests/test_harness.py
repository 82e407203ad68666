import json
import math
from dataclasses import replace

import numpy as np
import pytest

from fracwave import harness
from fracwave.harness import ExperimentError, ExperimentSpec, fit_loglog, rate_cells, run, write_report
from fracwave.spectral import build_domain
from fracwave.volterra import NonlinearitySpec, SolverConfig


def test_fit_recovers_power_law():
    t = np.logspace(-4, -2, 20)
    fit = fit_loglog(t, 3.0 * t ** -1.3, -1.3, 0.05)
    assert fit.slope == pytest.approx(-1.3, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0) and fit.passed and not fit.flat
    assert fit.window == (1e-4, 1e-2)


def test_fit_rejects_wrong_slope_and_noisy_data():
    t = np.logspace(-4, -2, 20)
    assert not fit_loglog(t, t ** -1.0, -1.3, 0.05).passed
    noisy = t ** -1.0 * np.exp(np.random.default_rng(0).normal(0, 2.0, t.size))
    fit = fit_loglog(t, noisy, -1.0, 10.0)
    assert fit.r_squared < 0.99 and not fit.passed


def test_flat_data_reported_as_flat():
    t = np.logspace(-4, -2, 20)
    fit = fit_loglog(t, 1.0 - 1e-4 * t, 0.0, 0.05)
    assert fit.flat and fit.r_squared == 1.0 and fit.passed


def test_rate_lattice():
    cells = rate_cells(ExperimentSpec("rates"))
    assert len(cells) == 54
    assert all(th == 0 or th < b for _, _, b, th in cells)


def test_rates_small_lattice_and_schema(tmp_path):
    spec = ExperimentSpec("rates", alphas=(1.5,), betas=(0.0, 1.0), thetas=(0.0,))
    report = run(spec)
    assert report.fail_count == 0 and report.pass_count == 6
    assert all(r["r_squared"] >= 0.99 for r in report.results)
    paths = write_report(report, tmp_path, plot_script=True)
    summary = json.loads(open(paths["json"]).read())
    assert {"experiment", "params", "results", "pass_count", "fail_count"} <= set(summary)
    header = open(paths["csv"]).readline().strip().split(",")
    assert header == ["family", "alpha", "beta", "theta", "t", "norm"]
    assert (tmp_path / "plot_rates.py").exists()


def test_rate_slopes_stable_under_cutoff_doubling():
    # the default 16000-mode cutoff against 32000 modes
    spec = ExperimentSpec("rates")
    base = {(r["family"], r["alpha"], r["beta"], r["theta"]): r["slope"] for r in run(spec).results}
    fine_domain = replace(spec.domain_spec(), modes=32000, grid=64000)
    fine = run(replace(spec, domain=fine_domain))
    for r in fine.results:
        assert abs(r["slope"] - base[(r["family"], r["alpha"], r["beta"], r["theta"])]) <= 0.05
    assert fine.fail_count == 0


def test_no_pass_below_r2_threshold():
    report = run(ExperimentSpec("rates", alphas=(1.25, 1.75), families=("S", "R")))
    assert all(r["r_squared"] >= 0.99 for r in report.results if r["pass"])


def test_dependence_zero_perturbation_and_symmetry():
    spec = ExperimentSpec("dependence", deltas=(0.0, 1e-4), thetas=(0.0,))
    report = run(spec)
    zero = [r for r in report.results if r["delta"] == 0.0][0]
    assert zero["ratio"] is None and zero["exact_match"]
    domain = build_domain(spec.domain_spec())
    rng = np.random.default_rng(7)
    u = (harness.seeded_field(domain.size, rng), harness.seeded_field(domain.size, rng))
    w = (u[0] + harness.seeded_field(domain.size, rng) * 1e-3, u[1])
    cfg, f = spec.solver_config(), spec.power_law()
    a = harness.dependence_ratio(domain, cfg, f, u, w, 0.0)
    b = harness.dependence_ratio(domain, cfg, f, w, u, 0.0)
    assert a == pytest.approx(b, rel=1e-12)
    assert harness.dependence_ratio(domain, cfg, f, u, u, 0.0) is None


def test_convergence_exact_sentinel_without_forcing():
    report = run(ExperimentSpec("convergence", kappa=0.0, alphas=(1.5,)))
    assert report.fail_count == 0
    assert all(r["exact"] and r["order"] is None for r in report.results)


def test_convergence_order_insensitive_to_picard_tol():
    base = ExperimentSpec("convergence", alphas=(1.5,), steps=(20, 40, 80))
    tight = replace(base, solver=replace(base.solver_config(), picard_tol=5e-13))
    o1 = [r["order"] for r in run(base).results if r["order"] is not None]
    o2 = [r["order"] for r in run(tight).results if r["order"] is not None]
    assert max(abs(a - b) for a, b in zip(o1, o2)) <= 0.05


def test_blowup_zero_amplitude_never_blows():
    spec = ExperimentSpec("blowup", amplitudes=(0.0, 16.0),
                          solver=SolverConfig(alpha=1.5, t_end=2.0, steps=200))
    report = run(spec)
    rows = {(r["case"], r["amplitude"]): r for r in report.results}
    assert not rows[("nonlinear", 0.0)]["blown"]
    assert rows[("nonlinear", 16.0)]["blown"]
    assert not rows[("linear", 16.0)]["blown"] and not rows[("linear", 32.0)]["blown"]
    assert report.extra["crossing_times_monotone"]


def test_blowup_needs_power_nonlinearity():
    spec = ExperimentSpec("blowup", nonlinearity=NonlinearitySpec.linear(1.0))
    with pytest.raises(ExperimentError):
        run(spec)


def test_regularization_both_data_cases():
    report = run(ExperimentSpec("regularization", thetas=(0.0, 0.25)))
    verdicts = {(r["case"], r["theta"]): r["pass"] for r in report.results}
    assert verdicts[("position", 0.25)] and verdicts[("velocity", 0.25)]
    # theta = 0 asserts nothing
    assert verdicts[("position", 0.0)] is None
    pos = [r for r in report.results if r["case"] == "position" and r["theta"] == 0.25]
    early = [r["value"] for r in pos if r["t"] <= 1e-3]
    assert max(early) < 0.1 * pos[-1]["value"]


def test_dyadic_helpers():
    t = harness.dyadic_times(1.0, 3, 4)
    assert t.tolist() == [0.0, 0.125, 0.25, 0.5, 0.75, 1.0]
    assert harness.monotone_tail([5, 6, 4, 3, 2]) == 1
    assert harness.monotone_tail([1, 2, 3]) is None


@pytest.mark.parametrize("kind", ["rates", "dependence", "regularization"])
def test_reruns_are_bit_identical(kind, tmp_path):
    spec = ExperimentSpec(kind, alphas=(1.5,), betas=(0.5,), thetas=(0.25,))
    a = write_report(run(spec), tmp_path / "a")
    b = write_report(run(spec), tmp_path / "b")
    assert open(a["csv"], "rb").read() == open(b["csv"], "rb").read()
    assert open(a["json"], "rb").read() == open(b["json"], "rb").read()


def test_spec_validation():
    with pytest.raises(ExperimentError):
        ExperimentSpec("rates", alphas=())
    with pytest.raises(ExperimentError):
        ExperimentSpec("rates", t_min=1e-2, t_max=1e-4)
    with pytest.raises(ExperimentError):
        ExperimentSpec("nonsense")
    assert math.isfinite(ExperimentSpec("rates").slope_tol)
