"""Command-line entry point: run | sweep | check | profile.

Exit codes: 0 pass, 1 usage/configuration error, 2 physics-metric failure.
The environment variable EITLAB_OUT overrides the output root.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import copy
import json
import math
import os
import sys as _sys
from pathlib import Path

import numpy as np

from . import dynamics, experiments, polariton, reporting
from .model import (
    Config,
    ConfigError,
    LevelSystem,
    PropagationGeometry,
    StorageUndefinedError,
    load_preset,
    omega_total,
    preset_names,
    validate,
)


def _resolve_config(spec: str) -> dict:
    """Load a config from a path, or fall back to a shipped preset name."""
    p = Path(spec)
    if p.exists():
        with open(p, "r", encoding="utf-8") as fh:
            return json.load(fh)
    name = p.stem if p.suffix == ".json" else spec
    try:
        return load_preset(name)
    except KeyError:
        raise FileNotFoundError(
            f"config file not found: {spec!r} (and no preset of that name; "
            f"presets: {', '.join(preset_names())})")


def _out_root(args) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    env = os.environ.get("EITLAB_OUT")
    return Path(env) if env else Path("eitlab_out")


def _derived_quantities(cfg: Config) -> dict:
    """Analytic values at the run start: angles, rates, velocities."""
    sys_, geom = cfg.system, cfg.geometry
    om = cfg.pump_amplitudes(0.0)
    out: dict = {"pump_amplitudes": [float(v) for v in om],
                 "omega_total": omega_total(om)}
    if omega_total(om) <= cfg.options.storage_tol:
        out["storage"] = True
        return out
    ang = polariton.mixing_angles(sys_, geom, om)
    out["theta"] = ang.theta
    out["phi"] = list(ang.phi)
    out["phi_pair"] = list(ang.phi_pair)
    out["beta"] = list(ang.beta)
    out["cos_alpha"] = list(ang.cos_alpha)
    out["group_velocity"] = polariton.group_velocity(sys_, geom, om)
    out["mismatch_decay_rates"] = [
        polariton.mismatch_decay_rate(j, sys_, om) for j in range(1, sys_.channels)]
    if sys_.channels >= 2:
        out["stationary_backward_pump"] = polariton.stationary_pump_amplitude(sys_, om[:-1])
    return out


# ---------------------------------------------------------------------------
# run


def cmd_run(args) -> int:
    raw = _resolve_config(args.config)
    if args.scheme:
        raw.setdefault("grid", {})["scheme"] = args.scheme
    cfg = validate(raw)

    if args.dry_run:
        print(json.dumps(_derived_quantities(cfg), indent=2, sort_keys=True))
        return 0

    outdir = _out_root(args) / (Path(args.config).stem if Path(args.config).suffix
                                else args.config)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = reporting.RunManifest(config_sha256=reporting.config_hash(raw),
                                     started_unix=reporting.now())
    t0 = reporting.now()

    report = experiments.run_experiment(cfg, outdir)
    rpath = reporting.write_report(report, outdir / "report.json")

    if args.export_trajectory or cfg.experiment.get("name", "raw") == "raw":
        traj = dynamics.run(cfg)
        for p in reporting.export_trajectory(traj, outdir / "trajectory", fmt=args.format):
            manifest.add_artifact(p)

    manifest.add_artifact(rpath)
    for p in report.artifacts:
        manifest.add_artifact(p)
    manifest.wall_seconds = reporting.now() - t0
    reporting.write_manifest(manifest, outdir / "manifest.json")

    for name, m in report.metrics.items():
        status = "PASS" if m.passed else "FAIL"
        pred = "" if m.predicted is None else f" predicted={m.predicted:.6g}"
        print(f"[{status}] {name}: measured={m.measured:.6g}{pred}")
    for w in report.warnings:
        print(f"[warn] {w}", file=_sys.stderr)
    print(f"report: {rpath}")
    return 0 if report.passed else 2


# ---------------------------------------------------------------------------
# sweep


def _set_path(d: dict, path: str, value):
    parts = path.split(".")
    cur = d
    for p in parts[:-1]:
        cur = cur[int(p)] if isinstance(cur, list) else cur[p]
    last = parts[-1]
    if isinstance(cur, list):
        cur[int(last)] = value
    else:
        cur[last] = value


def _get_path(d: dict, path: str):
    cur = d
    for p in path.split("."):
        cur = cur[int(p)] if isinstance(cur, list) else cur[p]
    return cur


def _sweep_member(payload) -> dict:
    raw, param, value = payload
    raw = copy.deepcopy(raw)
    _set_path(raw, param, value)
    try:
        cfg = validate(raw)
        report = experiments.run_experiment(cfg, None)
        row = {"value": value, "passed": report.passed, "error": ""}
        for name, m in report.metrics.items():
            row[f"{name}.measured"] = m.measured
            if m.predicted is not None:
                row[f"{name}.predicted"] = m.predicted
                row[f"{name}.rel_err"] = m.rel_err
            row[f"{name}.passed"] = m.passed
        return row
    except Exception as e:  # member failures are recorded, the sweep continues
        return {"value": value, "passed": False, "error": f"{type(e).__name__}: {e}"}


def cmd_sweep(args) -> int:
    raw = _resolve_config(args.config)
    values = [json.loads(v) for v in args.values.split(",") if v.strip() != ""]
    if not values:
        raise ConfigError(["sweep: empty value list"])
    try:
        _get_path(raw, args.param)
    except (KeyError, IndexError, TypeError):
        raise ConfigError([f"sweep: parameter path {args.param!r} not found in config"])

    payloads = [(raw, args.param, v) for v in values]
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_sweep_member, payloads))
    else:
        rows = [_sweep_member(p) for p in payloads]

    cols: list[str] = ["value", "passed", "error"]
    for row in rows:
        for k in row:
            if k not in cols:
                cols.append(k)
    outdir = _out_root(args)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "sweep.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(row.get(c, "")) for c in cols) + "\n")
    print(f"sweep written: {path} ({len(rows)} rows over {args.param})")
    return 0 if all(r["passed"] for r in rows) else 2


def _csv_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    s = str(v)
    return '"' + s.replace('"', "'") + '"' if "," in s else s


# ---------------------------------------------------------------------------
# check (analytic calculators)


def _check_system(args) -> LevelSystem:
    g = tuple(float(v) for v in args.g.split(","))
    return LevelSystem(m=len(g) + 2, g=g, Gamma=args.Gamma, N=args.N)


def _check_geometry(args, channels: int) -> PropagationGeometry:
    if args.d:
        d = tuple(int(v) for v in args.d.split(","))
    else:
        d = tuple([1] * channels)
    return PropagationGeometry(d=d, nu=tuple([1.0] * channels), c_scaled=args.c)


def cmd_check(args) -> int:
    om = np.array([float(v) for v in args.omega.split(",")]) if args.omega else np.array([])

    def need_sys():
        return _check_system(args)

    name = args.formula
    inputs = {"g": args.g, "omega": args.omega, "N": args.N, "Gamma": args.Gamma,
              "d": args.d, "c": args.c, "T": args.T, "j": args.j, "sigma": args.sigma}
    try:
        if name == "omega0":
            value = omega_total(om)
        elif name == "theta":
            value = polariton.mixing_theta(need_sys(), om)
        elif name == "phi":
            value = [float(v) for v in polariton.mixing_phi(need_sys(), om)]
        elif name == "pair":
            value = polariton.pair_mixing_angle(args.j, need_sys(), om)
        elif name == "beta":
            value = polariton.pair_beta(args.j, need_sys(), om)
        elif name == "rate":
            value = polariton.mismatch_decay_rate(args.j, need_sys(), om)
        elif name == "cosalpha":
            sys_ = need_sys()
            sigma = args.sigma if args.sigma else sys_.channels
            value = polariton.direction_cosine(sys_, _check_geometry(args, sys_.channels),
                                               om, sigma)
        elif name == "vg":
            sys_ = need_sys()
            value = polariton.group_velocity(sys_, _check_geometry(args, sys_.channels), om)
        elif name == "stationary":
            value = polariton.stationary_pump_amplitude(need_sys(), om)
        elif name == "stationary-literal":
            value = polariton.stationary_pump_amplitude_literal(need_sys(), om)
        elif name == "tau":
            value = polariton.adiabatic_parameter(need_sys(), args.T)
        else:
            print(f"unknown formula {name!r}; available: omega0, theta, phi, pair, beta, "
                  "rate, cosalpha, vg, stationary, stationary-literal, tau", file=_sys.stderr)
            return 1
    except (StorageUndefinedError, polariton.UndefinedAngleError, ValueError) as e:
        print(f"error: {e}", file=_sys.stderr)
        return 1
    print(json.dumps({"formula": name, "inputs": inputs, "value": value},
                     indent=2, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# profile


def cmd_profile(args) -> int:
    raw = _resolve_config(args.config)
    cfg = validate(raw)
    if cfg.experiment.get("name") != "localization_profiles":
        raise ConfigError(["profile: config must set experiment.name = 'localization_profiles'"])
    outdir = _out_root(args) / "profiles"
    manifest = reporting.RunManifest(config_sha256=reporting.config_hash(raw),
                                     started_unix=reporting.now())
    t0 = reporting.now()
    report = experiments.run_experiment(cfg, outdir)
    rpath = reporting.write_report(report, outdir / "report.json")
    manifest.add_artifact(rpath)
    for p in report.artifacts:
        manifest.add_artifact(p)
    manifest.wall_seconds = reporting.now() - t0
    reporting.write_manifest(manifest, outdir / "manifest.json")
    for name, m in report.metrics.items():
        print(f"[{'PASS' if m.passed else 'FAIL'}] {name}: {m.measured:.6g}")
    print(f"report: {rpath}")
    return 0 if report.passed else 2


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eitlab",
                                 description="Multi-level EIT Maxwell-Bloch laboratory")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate a configuration and grade its experiment")
    p_run.add_argument("--config", required=True, help="config JSON path or preset name")
    p_run.add_argument("--out", default=None, help="output root (default $EITLAB_OUT)")
    p_run.add_argument("--scheme", choices=["quasistatic", "characteristics"], default=None,
                       help="override the integrator scheme for oracle cross-checks")
    p_run.add_argument("--format", choices=["csv", "bin"], default="csv",
                       help="trajectory export format")
    p_run.add_argument("--export-trajectory", action="store_true")
    p_run.add_argument("--dry-run", action="store_true",
                       help="validate and print derived analytic quantities only")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="re-run an experiment over a parameter list")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--param", required=True, help="dotted path, e.g. pumps.1.amplitude")
    p_sweep.add_argument("--values", required=True, help="comma-separated JSON numbers")
    p_sweep.add_argument("--jobs", type=int, default=1, help="concurrent member runs")
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    p_check = sub.add_parser("check", help="evaluate one analytic formula as JSON")
    p_check.add_argument("formula")
    p_check.add_argument("--g", default="1", help="comma-separated couplings")
    p_check.add_argument("--omega", default="", help="comma-separated pump amplitudes")
    p_check.add_argument("--N", type=float, default=1.0)
    p_check.add_argument("--Gamma", type=float, default=1.0)
    p_check.add_argument("--d", default="", help="comma-separated direction signs")
    p_check.add_argument("--c", type=float, default=1.0)
    p_check.add_argument("--T", type=float, default=1.0)
    p_check.add_argument("--j", type=int, default=1, help="channel pair index")
    p_check.add_argument("--sigma", type=int, default=0)
    p_check.set_defaults(func=cmd_check)

    p_prof = sub.add_parser("profile", help="generate interference localization profiles")
    p_prof.add_argument("--config", required=True)
    p_prof.add_argument("--out", default=None)
    p_prof.set_defaults(func=cmd_profile)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"configuration error:\n{e}", file=_sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=_sys.stderr)
        return 1
    except (KeyError, ValueError, experiments.ExperimentError) as e:
        print(f"error: {e}", file=_sys.stderr)
        return 1


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
