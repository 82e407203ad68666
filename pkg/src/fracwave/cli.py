"""Command line: ``fracwave ml | solve | experiment``.

Exit codes: 0 success, 1 experiment failures, 2 bad configuration or
arguments, 3 Mittag-Leffler evaluation failure, 4 solver failure,
10 blow-up detected (a reported outcome, not an error).

Configuration files are INI style. Sections and keys::

    [domain]        dimension, lengths, grid, modes
    [solver]        alpha, t_end, steps, picard_tol, picard_max_iters,
                    blowup_threshold, dealias, q, theta, grading
    [nonlinearity]  kind, coefficient, exponent, table_x, table_y
    [data]          u0, u1  (``index:value`` lists over mode positions,
                    or ``random``), seed
    [experiment]    kind plus any ExperimentSpec grid or tolerance
    [output]        directory, formats (csv|json|both), snapshot_times,
                    plot_script

Unknown sections or keys are rejected.
"""
from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
import warnings
from dataclasses import replace

import numpy as np

from . import harness
from . import io as fio
from .mittag_leffler import (
    MittagLefflerError,
    MLParams,
    branch,
    ml,
    ml_contour,
    ml_series,
)
from .spectral import DomainError, DomainSpec, SpectralField, build_domain, mode_field, zero_field
from .volterra import (
    AdmissibilityError,
    NonlinearitySpec,
    SolverConfig,
    SolverError,
    detect_blowup,
    solve,
    write_snapshots_csv,
    write_trajectory_csv,
)

EXIT_OK, EXIT_FAILURES, EXIT_CONFIG, EXIT_ML, EXIT_SOLVER, EXIT_BLOWUP = 0, 1, 2, 3, 4, 10


class ConfigError(ValueError):
    pass


def _floats(text):
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


_DOMAIN_KEYS = {"dimension": int, "lengths": _floats, "grid": int, "modes": int}
_SOLVER_KEYS = {"alpha": float, "t_end": float, "steps": int, "picard_tol": float,
                "picard_max_iters": int, "blowup_threshold": float, "dealias": _bool, "q": float,
                "theta": float, "grading": float}
_NONLIN_KEYS = {"kind": str, "coefficient": float, "exponent": float, "table_x": _floats, "table_y": _floats}
_DATA_KEYS = {"u0": str, "u1": str, "seed": int}
_EXPERIMENT_KEYS = {"kind": str, "alphas": _floats, "betas": _floats, "thetas": _floats,
                    "families": lambda s: tuple(v.strip().upper() for v in s.split(",") if v.strip()),
                    "t_min": float, "t_max": float, "t_samples": int,
                    "steps": lambda s: tuple(int(v) for v in _floats(s)), "deltas": _floats,
                    "amplitudes": _floats, "kappa": float, "dyadic_levels": int, "slope_tol": float,
                    "r2_min": float, "stability_tol": float, "order_min": float, "seed": int}
_OUTPUT_KEYS = {"directory": str, "formats": str, "snapshot_times": _floats, "plot_script": _bool}
_SECTIONS = {"domain": _DOMAIN_KEYS, "solver": _SOLVER_KEYS, "nonlinearity": _NONLIN_KEYS,
             "data": _DATA_KEYS, "experiment": _EXPERIMENT_KEYS, "output": _OUTPUT_KEYS}


def read_config(path) -> dict:
    """Parse and type-check an INI file into {section: {key: value}}."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for section in parser.sections():
        keys = _SECTIONS.get(section)
        if keys is None:
            raise ConfigError(f"unknown section [{section}]")
        out[section] = {}
        for key, raw in parser.items(section):
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            try:
                out[section][key] = keys[key](raw)
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from exc
    return out


def _build(cls, values, what):
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [{what}] section: {exc}") from exc


def domain_from(cfg) -> DomainSpec | None:
    if "domain" not in cfg:
        return None
    return _build(DomainSpec, cfg["domain"], "domain")


def solver_from(cfg, override=False) -> SolverConfig | None:
    if "solver" not in cfg and not override:
        return None
    values = dict(cfg.get("solver", {}))
    values["override_admissibility"] = override
    return _build(SolverConfig, values, "solver")


def nonlinearity_from(cfg) -> NonlinearitySpec | None:
    if "nonlinearity" not in cfg:
        return None
    return _build(NonlinearitySpec, cfg["nonlinearity"], "nonlinearity")


def _data_field(text, domain, rng) -> SpectralField:
    text = (text or "").strip()
    if not text or text == "0":
        return zero_field(domain)
    if text.lower() == "random":
        return harness.seeded_field(domain.size, rng)
    amps = {}
    for item in text.split(","):
        if not item.strip():
            continue
        idx, _, val = item.partition(":")
        try:
            n, a = int(idx), float(val)
        except ValueError as exc:
            raise ConfigError(f"bad mode entry {item!r}; expected index:value") from exc
        if not 0 <= n < domain.size:
            raise ConfigError(f"mode index {n} outside 0..{domain.size - 1}")
        amps[n] = a
    return mode_field(domain, amps)


def _output_dir(args, cfg):
    return args.out or cfg.get("output", {}).get("directory") or "fracwave-out"


def _formats(cfg):
    fmt = cfg.get("output", {}).get("formats", "both")
    if fmt not in ("csv", "json", "both"):
        raise ConfigError("output.formats must be csv, json or both")
    return fmt


# ------------------------------------------------------------------ commands

def cmd_ml(args) -> int:
    try:
        params = MLParams(alpha=args.alpha, beta=args.beta)
    except (ValueError, MittagLefflerError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    z = complex(args.re_z, args.im_z)
    try:
        value = complex(ml(args.alpha, args.beta, z, params))
        used = branch(args.alpha, args.beta, z, params)
        estimate = _branch_gap(params, z, value, used)
    except MittagLefflerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ML
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        print("error: value overflowed", file=sys.stderr)
        return EXIT_ML
    print(fio.fmt(value.real) if value.imag == 0 else f"{fio.fmt(value.real)} {fio.fmt(value.imag)}j")
    print(f"branch {used}")
    print(f"estimate {fio.fmt(estimate)}")
    return EXIT_OK


def _branch_gap(params, z, value, used):
    """Disagreement with an independent route at the same point."""
    if z == 0:
        return abs(value - complex(ml_contour(params, z)))
    if used == "contour" and abs(z) <= 8:
        try:
            return abs(value - complex(ml_series(params.alpha, params.beta, z)))
        except MittagLefflerError:
            pass
    if used == "contour":
        alt = replace(params, radius=2 * params.radius)
        return abs(value - complex(ml_contour(alt, z)))
    return abs(value - complex(ml_contour(params, z)))


def cmd_solve(args) -> int:
    try:
        cfg = read_config(args.config)
        spec = domain_from(cfg) or DomainSpec()
        config = solver_from(cfg, args.override_admissibility) or SolverConfig()
        f = nonlinearity_from(cfg) or NonlinearitySpec()
        domain = build_domain(spec)
        data = cfg.get("data", {})
        rng = np.random.default_rng(data.get("seed", 0))
        u0 = _data_field(data.get("u0"), domain, rng)
        u1 = _data_field(data.get("u1"), domain, rng)
        fmt = _formats(cfg)
    except (ConfigError, DomainError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _output_dir(args, cfg)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            traj = solve(domain, config, f, u0, u1)
    except AdmissibilityError as exc:
        print(f"config error: {exc} (pass --override-admissibility to run anyway)", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, MittagLefflerError, ArithmeticError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    report = detect_blowup(traj)
    last = traj.diagnostics[-1]
    summary = {
        "final_t": last["t"],
        "final_l2_norm": last["l2_norm"],
        "final_lq_norm": last["lq_norm"],
        "final_frac_norm_theta": last["frac_norm_theta"],
        "blown": report.blown,
        "t_flag": report.t_flag,
        "total_picard_iters": int(sum(d["picard_iters"] for d in traj.diagnostics)),
        "steps_taken": len(traj.times) - 1,
        "step_advice": [{"t": t, "weight_x_lipschitz": v} for t, v in traj.advice[:20]],
    }
    os.makedirs(out, exist_ok=True)
    if fmt in ("csv", "both"):
        write_trajectory_csv(traj, os.path.join(out, "trajectory.csv"))
        snaps = cfg.get("output", {}).get("snapshot_times")
        if snaps:
            write_snapshots_csv(traj, os.path.join(out, "snapshots.csv"), snaps)
    if fmt in ("json", "both"):
        fio.write_json(os.path.join(out, "summary.json"), summary)
    print(f"t={fio.fmt(last['t'])} l2={fio.fmt(last['l2_norm'])} lq={fio.fmt(last['lq_norm'])} "
          f"blown={report.blown}" + (f" t_flag={fio.fmt(report.t_flag)}" if report.blown else ""))
    return EXIT_BLOWUP if report.blown else EXIT_OK


def experiment_spec(kind, cfg, threads=1, override=False) -> harness.ExperimentSpec:
    section = dict(cfg.get("experiment", {}))
    declared = section.pop("kind", kind)
    if declared != kind:
        raise ConfigError(f"config describes a {declared!r} experiment, not {kind!r}")
    extra = {"threads": threads}
    if (d := domain_from(cfg)) is not None:
        extra["domain"] = d
    if "solver" in cfg:
        extra["solver"] = solver_from(cfg, override)
    if (f := nonlinearity_from(cfg)) is not None:
        extra["nonlinearity"] = f
    return harness.ExperimentSpec(kind=kind, **section, **extra)


def cmd_experiment(args) -> int:
    try:
        cfg = read_config(args.config) if args.config else {}
        if args.config and "experiment" not in cfg:
            raise ConfigError("config has no [experiment] section")
        spec = experiment_spec(args.kind, cfg, args.threads, args.override_admissibility)
        _formats(cfg)
    except (ConfigError, DomainError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _output_dir(args, cfg)
    try:
        report = harness.run(spec)
    except MittagLefflerError as exc:
        print(f"evaluation failure: {exc}", file=sys.stderr)
        return EXIT_ML
    except (SolverError, ArithmeticError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    plot = bool(cfg.get("output", {}).get("plot_script", False))
    paths = harness.write_report(report, out, plot_script=plot)
    print(f"{report.experiment}: {report.pass_count} passed, {report.fail_count} failed -> {paths['json']}")
    return EXIT_OK if report.fail_count == 0 else EXIT_FAILURES


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracwave", description="Fractional diffusion-wave toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("ml", help="evaluate E_{alpha,beta}(z)")
    q.add_argument("alpha", type=float)
    q.add_argument("beta", type=float)
    q.add_argument("re_z", type=float)
    q.add_argument("im_z", type=float, nargs="?", default=0.0)
    q.set_defaults(func=cmd_ml)

    def common(sp, config_required):
        sp.add_argument("--config", required=config_required, help="INI configuration file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--override-admissibility", action="store_true",
                        help="run even when the exponent is outside the admissible range")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (0 = auto)")

    s = sub.add_parser("solve", help="time-step the mild solution from a config")
    common(s, True)
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("experiment", help="run one of the analysis experiments")
    e.add_argument("kind", choices=harness.KINDS)
    common(e, False)
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv[:1] == ["ml"] and "--" not in argv and not {"-h", "--help"} & set(argv):
        # let negative numbers such as -1e4 through as positionals
        argv.insert(1, "--")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if getattr(args, "threads", 1) < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
