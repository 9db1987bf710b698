"""Batch command-line front end.

Subcommands: roll, spectrum, dispersion, zigzag, semigroup, kernel, simulate,
sweep.  Configuration comes from key=value files (INI sections named after the
subcommand) overridden by flags (precedence: flags > file > defaults); unknown
keys in a section are rejected.  Every output file is paired with a line in
manifest.jsonl.  The environment variable ZZLAB_THREADS caps sweep
parallelism.  Exit codes: 0 ok, 2 configuration error, 3 convergence error,
4 numerical blow-up, 5 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import io as zio
from .bloch import SigmaPoint, critical_branch, make_axis_grid, spectral_gap
from .errors import (
    BlowUp,
    ConfigError,
    ParseError,
    ValidationError,
    ZZLabError,
)
from .expand import c2_closed, fit_dispersion, kappa_z_root
from .kernels import build_branch_interpolant, sample_k1, verify_k1_bound
from .roll import Params, solve_roll
from .semigroup import DecayLawSpec, decay_curve
from .sim import (
    HNormDiagnostics,
    PerturbationSpec,
    SimConfig,
    run_decay_experiment,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_BLOWUP = 4
EXIT_IO = 5

ZIGZAG_EPS_LADDER = (0.05, 0.1, 0.2)

# per-subcommand option schema: name -> (type, default)
SCHEMAS = {
    "roll": {
        "eps": (float, 0.1),
        "kappa": (float, 0.0),
        "n_modes": (int, 32),
        "tol": (float, 1e-10),
    },
    "spectrum": {
        "eps": (float, 0.1),
        "kappa": (float, 0.0),
        "j": (int, 64),
        "sigma_max": (float, 0.25),
        "n_per_side": (int, 10),
    },
    "dispersion": {
        "eps": (float, 0.1),
        "kappa": (float, 0.0),
        "j": (int, 64),
        "fit_radius": (float, 0.08),
        "n_points": (int, 12),
    },
    "zigzag": {
        "eps_list": ("floats", ",".join(str(e) for e in ZIGZAG_EPS_LADDER)),
        "n_modes": (int, 32),
        "j": (int, 64),
        "spectral": ("bool", False),
    },
    "semigroup": {
        "k": (int, 0),
        "p": (int, 4),
        "d1": (float, 1.0),
        "d2": (float, 1.0),
        "kind": (str, "integral"),
        "t_lo": (float, 10.0),
        "t_hi": (float, 1e3),
        "n_samples": (int, 25),
    },
    "kernel": {
        "eps": (float, 0.2),
        "kappa": (float, 0.0),
        "n_samples": (int, 60),
        "sigma_box": (float, 0.07),
        "grid_half_points": (int, 10),
        "j": (int, 64),
    },
    "simulate": {
        "eps": (float, 0.3),
        "kappa": (float, None),
        "kappa_mode": (str, None),
        "m_x": (int, 128),
        "l_y": (float, 400.0),
        "n_x": (int, 2048),
        "n_y": (int, 128),
        "dt": (float, 0.5),
        "t_end": (float, 3000.0),
        "delta": (float, None),
        "x_width": (float, 3.0),
        "y_width": (float, 3.0),
        "n_samples": (int, 60),
        "diagnostics": ("bool", False),
        "checkpoint": (str, None),
    },
    "sweep": {
        "eps_list": ("floats", "0.3"),
        "seed_list": ("ints", "1,2,3"),
        "kappa_mode": (str, "at_zigzag"),
        "m_x": (int, 128),
        "l_y": (float, 400.0),
        "n_x": (int, 2048),
        "n_y": (int, 128),
        "dt": (float, 0.5),
        "t_end": (float, 3000.0),
        "delta": (float, None),
        "x_width": (float, 3.0),
        "y_width": (float, 3.0),
        "n_samples": (int, 60),
    },
}

GLOBAL_KEYS = {"output_dir": (str, "."), "seed": (int, None)}


def _parse_value(key, kind, raw):
    try:
        if kind is float:
            return float(raw)
        if kind is int:
            return int(raw)
        if kind == "bool":
            if isinstance(raw, bool):
                return raw
            return str(raw).strip().lower() in ("1", "true", "yes", "on")
        if kind == "floats":
            return [float(x) for x in str(raw).split(",") if x.strip()]
        if kind == "ints":
            return [int(x) for x in str(raw).split(",") if x.strip()]
        return str(raw)
    except (TypeError, ValueError) as ex:
        raise ParseError(f"key '{key}': cannot parse {raw!r}: {ex}") from ex


def parse_config(subcommand: str, config_file: str = None, flag_values: dict = None):
    """Resolve the configuration for a subcommand.

    Precedence: flags > file section > schema defaults.  Unknown keys in the
    file section raise ValidationError listing all of them.
    """
    schema = dict(SCHEMAS[subcommand])
    schema.update(GLOBAL_KEYS)
    resolved = {}
    for key, (kind, default) in schema.items():
        if default is None or isinstance(default, (int, float, bool, list)):
            resolved[key] = default
        else:
            resolved[key] = _parse_value(key, kind, default)

    if config_file:
        parser = configparser.ConfigParser()
        try:
            read = parser.read(config_file)
        except configparser.Error as ex:
            raise ParseError(f"{config_file}: {ex}") from ex
        if not read:
            raise ParseError(f"config file not readable: {config_file}")
        if parser.has_section(subcommand):
            unknown = [k for k in parser[subcommand] if k not in schema]
            if unknown:
                raise ValidationError(
                    [f"unknown key '{k}' in section [{subcommand}]" for k in unknown]
                )
            for key, raw in parser[subcommand].items():
                resolved[key] = _parse_value(key, schema[key][0], raw)

    for key, val in (flag_values or {}).items():
        if val is None:
            continue
        if key not in schema:
            raise ValidationError([f"unknown flag '{key}' for {subcommand}"])
        kind = schema[key][0]
        resolved[key] = _parse_value(key, kind, val) if not isinstance(
            val, (list, bool)
        ) else val

    _validate(subcommand, resolved)
    return resolved


def _validate(subcommand: str, cfg: dict):
    problems = []
    if subcommand in ("simulate",):
        if cfg.get("kappa") is not None and cfg.get("kappa_mode") is not None:
            problems.append("kappa and kappa_mode are mutually exclusive")
        mode = cfg.get("kappa_mode")
        if mode is not None and mode != "at_zigzag" and not mode.startswith("offset:"):
            problems.append(
                f"kappa_mode must be 'at_zigzag' or 'offset:<value>', got {mode!r}"
            )
    if subcommand == "semigroup":
        if cfg["kind"] not in ("sup", "integral", "both"):
            problems.append("kind must be sup, integral or both")
        if cfg["p"] not in (2, 4):
            problems.append("p must be 2 or 4")
        if cfg["k"] not in (0, 1):
            problems.append("k must be 0 or 1")
    if problems:
        raise ValidationError(problems)


def _resolve_kappa(eps: float, kappa, kappa_mode):
    if kappa is not None:
        return float(kappa)
    mode = kappa_mode or "at_zigzag"
    kz = kappa_z_root(eps, spectral=False).kappa_z_numeric
    if mode == "at_zigzag":
        return kz
    return kz + float(mode.split(":", 1)[1])


def _outpath(cfg, name):
    outdir = cfg.get("output_dir") or "."
    os.makedirs(outdir, exist_ok=True)
    return os.path.join(outdir, name)


def _manifest(cfg, subcommand, outputs, summary=None):
    rec = {
        "subcommand": subcommand,
        "config": {k: v for k, v in cfg.items() if v is not None},
        "outputs": outputs,
        "seed": cfg.get("seed"),
    }
    if summary:
        rec["summary"] = summary
    zio.append_manifest(cfg.get("output_dir") or ".", rec)


def cmd_roll(cfg):
    params = Params(cfg["eps"], cfg["kappa"])
    roll = solve_roll(params, n_modes=cfg["n_modes"], tol=cfg["tol"])
    path = _outpath(cfg, "roll.csv")
    zio.write_csv(
        path,
        ["harmonic", "cosine_coeff"],
        zip(roll.harmonics, roll.cosine_coeffs),
    )
    summary = {"a1": roll.a1, "a3": roll.a3, "residual_inf": roll.residual_inf}
    _manifest(cfg, "roll", [path], summary)
    print(
        f"roll eps={cfg['eps']} kappa={cfg['kappa']}: a1={roll.a1:.12g} "
        f"a3={roll.a3:.12g} residual={roll.residual_inf:.3e}"
    )
    return EXIT_OK


def cmd_spectrum(cfg):
    params = Params(cfg["eps"], cfg["kappa"])
    roll = solve_roll(params)
    grid = make_axis_grid(cfg["sigma_max"], cfg["n_per_side"])
    branch = critical_branch(
        roll, grid, J=cfg["j"], sigma_max=cfg["sigma_max"] * (1 + 1e-12)
    )
    path = _outpath(cfg, "spectrum.csv")
    zio.write_csv(
        path,
        ["sigma1", "sigma2", "lambda", "second_lambda"],
        [
            (s.sigma1, s.sigma2, lam, lam2)
            for s, lam, lam2 in zip(branch.grid, branch.lambdas, branch.second_lambdas)
        ],
    )
    gap0 = spectral_gap(roll, [SigmaPoint(0.0, 0.0)], J=cfg["j"])
    summary = {"lambda0": branch.lambda0, "gap_at_origin": gap0}
    _manifest(cfg, "spectrum", [path], summary)
    print(f"spectrum: lambda0={branch.lambda0:.12g} gap(0)={gap0:.12g}")
    return EXIT_OK


def cmd_dispersion(cfg):
    params = Params(cfg["eps"], cfg["kappa"])
    roll = solve_roll(params)
    grid = make_axis_grid(cfg["fit_radius"], cfg["n_points"])
    branch = critical_branch(
        roll, grid, J=cfg["j"], sigma_max=cfg["fit_radius"] * (1 + 1e-12)
    )
    fit = fit_dispersion(branch, cfg["fit_radius"])
    closed = c2_closed(cfg["eps"], cfg["kappa"], roll.a1)
    path = _outpath(cfg, "dispersion.csv")
    zio.write_csv(
        path,
        ["eps", "kappa", "c1", "c2", "c3", "fit_residual", "c2_closed"],
        [(cfg["eps"], cfg["kappa"], fit.c1, fit.c2, fit.c3, fit.fit_residual, closed)],
    )
    _manifest(cfg, "dispersion", [path], {"c1": fit.c1, "c2": fit.c2, "c3": fit.c3})
    print(
        f"dispersion: c1={fit.c1:.6g} c2={fit.c2:.6g} c3={fit.c3:.6g} "
        f"-c2_closed={-closed:.6g}"
    )
    return EXIT_OK


def cmd_zigzag(cfg):
    rows = []
    for eps in cfg["eps_list"]:
        res = kappa_z_root(
            eps, n_modes=cfg["n_modes"], J=cfg["j"], spectral=cfg["spectral"]
        )
        rows.append(
            (
                eps,
                res.kappa_z_series,
                res.kappa_z_numeric,
                res.kappa_z_spectral if res.kappa_z_spectral is not None else math.nan,
            )
        )
        print(
            f"zigzag eps={eps}: series={res.kappa_z_series:.12e} "
            f"numeric={res.kappa_z_numeric:.12e}"
        )
    path = _outpath(cfg, "zigzag.csv")
    zio.write_csv(
        path,
        ["eps", "kappa_z_series", "kappa_z_numeric", "kappa_z_spectral"],
        rows,
    )
    _manifest(cfg, "zigzag", [path])
    return EXIT_OK


def cmd_semigroup(cfg):
    spec = DecayLawSpec(
        d1=cfg["d1"], d2=cfg["d2"], transverse_power=cfg["p"], k=cfg["k"]
    )
    kinds = ("sup", "integral") if cfg["kind"] == "both" else (cfg["kind"],)
    rows, slopes = [], {}
    for kind in kinds:
        curve = decay_curve(
            spec, kind, t_lo=cfg["t_lo"], t_hi=cfg["t_hi"], n_samples=cfg["n_samples"]
        )
        slopes[kind] = curve.fitted_slope
        rows.extend(
            (t, v, cfg["k"], kind, cfg["p"]) for t, v in zip(curve.times, curve.values)
        )
        expected = (
            spec.expected_slope_sup if kind == "sup" else spec.expected_slope_integral
        )
        print(
            f"semigroup k={cfg['k']} p={cfg['p']} {kind}: slope="
            f"{curve.fitted_slope:.4f} (expected {expected:+.2f})"
        )
    path = _outpath(cfg, "semigroup.csv")
    zio.write_csv(path, ["t", "value", "k", "kind", "p"], rows)
    _manifest(cfg, "semigroup", [path], {"slopes": slopes})
    return EXIT_OK


def cmd_kernel(cfg):
    params = Params(cfg["eps"], cfg["kappa"])
    roll = solve_roll(params)
    interp = build_branch_interpolant(
        roll, n_half=cfg["grid_half_points"], J=cfg["j"]
    )
    rng = np.random.default_rng(cfg["seed"] if cfg["seed"] is not None else 0)
    box = cfg["sigma_box"]
    pairs = [
        (
            SigmaPoint(*rng.uniform(-box, box, 2)),
            SigmaPoint(*rng.uniform(-box, box, 2)),
        )
        for _ in range(cfg["n_samples"])
    ]
    samples = sample_k1(roll, interp, pairs)
    c_fit, violations = verify_k1_bound(samples)
    path = _outpath(cfg, "kernel.csv")
    zio.write_csv(
        path,
        ["sigma1", "sigma2", "sigma1t", "sigma2t", "re_k1", "im_k1", "bound_rhs"],
        [
            (
                s.sigma.sigma1,
                s.sigma.sigma2,
                s.sigma_tilde.sigma1,
                s.sigma_tilde.sigma2,
                s.k1_value.real,
                s.k1_value.imag,
                s.bound_rhs,
            )
            for s in samples
        ],
    )
    _manifest(cfg, "kernel", [path], {"c_fit": c_fit, "violations": violations})
    print(f"kernel: C_fit={c_fit:.6g} violations={violations}")
    return EXIT_OK


def _build_sim_config(cfg):
    eps = cfg["eps"]
    kappa = _resolve_kappa(eps, cfg.get("kappa"), cfg.get("kappa_mode"))
    params = Params(eps, kappa)
    roll = solve_roll(params)
    delta = cfg["delta"] if cfg["delta"] is not None else 1e-3 * roll.a1
    seed = cfg.get("seed") if cfg.get("seed") is not None else 0
    pert = PerturbationSpec(
        amplitude=delta,
        x_width=cfg["x_width"],
        y_width=cfg["y_width"],
        seed=seed,
    )
    return SimConfig(
        params=params,
        m_x=cfg["m_x"],
        l_y=cfg["l_y"],
        n_x=cfg["n_x"],
        n_y=cfg["n_y"],
        dt=cfg["dt"],
        t_end=cfg["t_end"],
        perturbation=pert,
        n_samples=cfg["n_samples"],
    )


def cmd_simulate(cfg):
    sim_cfg = _build_sim_config(cfg)
    diagnostics = None
    if cfg.get("diagnostics"):
        roll = solve_roll(sim_cfg.params)
        interp = build_branch_interpolant(roll)
        diagnostics = HNormDiagnostics(interp)
    report = run_decay_experiment(sim_cfg, diagnostics=diagnostics)
    diag = report.h_norm_components
    diag_at = {}
    if diagnostics is not None:
        diag_at = {
            t: (a, s1a, vs)
            for t, a, s1a, vs in zip(
                diag["times"], diag["a_l1"], diag["sigma1a_l1"], diag["vs_l1"]
            )
        }
    rows = []
    for t, v in zip(report.times, report.v_inf_norms):
        extra = diag_at.get(t, (math.nan, math.nan, math.nan))
        rows.append((t, v) + extra)
    path = _outpath(cfg, "decay.csv")
    zio.write_csv(path, ["t", "v_inf", "a_l1", "sigma1a_l1", "vs_l1"], rows)
    summary = {
        "fitted_exponent": report.fitted_exponent,
        "window": list(report.window),
        "kappa": sim_cfg.params.kappa,
    }
    _manifest(cfg, "simulate", [path], summary)
    print(
        f"simulate eps={cfg['eps']} kappa={sim_cfg.params.kappa:.6e}: "
        f"exponent={report.fitted_exponent:.3f} window={report.window}"
    )
    return EXIT_OK


def _sweep_one(args):
    cfg = dict(args)
    return cmd_simulate(cfg)


def cmd_sweep(cfg):
    jobs = []
    for eps in cfg["eps_list"]:
        for seed in cfg["seed_list"]:
            sub = {
                k: v
                for k, v in cfg.items()
                if k not in ("eps_list", "seed_list", "output_dir")
            }
            sub["eps"] = eps
            sub["seed"] = seed
            sub["kappa"] = None
            base = cfg.get("output_dir") or "."
            sub["output_dir"] = os.path.join(base, f"run_eps{eps}_seed{seed}")
            sub.setdefault("diagnostics", False)
            sub.setdefault("checkpoint", None)
            jobs.append(sub)
    workers = int(os.environ.get("ZZLAB_THREADS", "0")) or (os.cpu_count() or 1)
    workers = min(workers, len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_sweep_one, jobs))
    else:
        for job in jobs:
            _sweep_one(job)
    _manifest(cfg, "sweep", [j["output_dir"] for j in jobs])
    print(f"sweep: {len(jobs)} runs complete")
    return EXIT_OK


COMMANDS = {
    "roll": cmd_roll,
    "spectrum": cmd_spectrum,
    "dispersion": cmd_dispersion,
    "zigzag": cmd_zigzag,
    "semigroup": cmd_semigroup,
    "kernel": cmd_kernel,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="zzlab",
        description="Roll stability laboratory for the planar Swift-Hohenberg equation",
    )
    sub = parser.add_subparsers(dest="subcommand")
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="key=value config file")
        sp.add_argument("--output-dir", dest="output_dir", default=None)
        sp.add_argument("--seed", type=int, default=None)
        for key, (kind, _) in schema.items():
            flag = "--" + key.replace("_", "-")
            if kind == "bool":
                sp.add_argument(flag, dest=key, action="store_true", default=None)
            else:
                sp.add_argument(flag, dest=key, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.subcommand:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    schema = SCHEMAS[args.subcommand]
    flag_values = {k: getattr(args, k) for k in schema}
    for k in GLOBAL_KEYS:
        flag_values[k] = getattr(args, k)
    try:
        cfg = parse_config(args.subcommand, args.config, flag_values)
        threads = os.environ.get("ZZLAB_THREADS")
        if threads is not None and not threads.isdigit():
            raise ConfigError(f"ZZLAB_THREADS must be an integer, got {threads!r}")
        return COMMANDS[args.subcommand](cfg)
    except (ParseError, ValidationError, ConfigError, ValueError) as ex:
        _emit_error(ex, EXIT_CONFIG)
        return EXIT_CONFIG
    except BlowUp as ex:
        _emit_error(ex, EXIT_BLOWUP)
        return EXIT_BLOWUP
    except ZZLabError as ex:
        _emit_error(ex, EXIT_CONVERGENCE)
        return EXIT_CONVERGENCE
    except OSError as ex:
        _emit_error(ex, EXIT_IO)
        return EXIT_IO


def _emit_error(ex, code):
    record = {
        "error": type(ex).__name__,
        "message": str(ex),
        "exit_code": code,
    }
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
