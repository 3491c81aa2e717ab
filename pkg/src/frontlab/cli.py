"""Command-line interface ``front-lab``.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical
failure, 4 a verification or acceptance check failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError, FrontLabError, Inconclusive, NoThresholdFound, NumericalFailure

__all__ = ["main", "parse_reaction_spec", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERICAL", "EXIT_CHECK"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CHECK = 4

log = logging.getLogger("frontlab")


class _CheckFailed(Exception):
    """A verification ran to completion but did not pass."""


def parse_reaction_spec(text: str):
    """Parse ``kind:key=value,...`` into a reaction.

    Examples: ``bistable:k=1,theta=0.3``, ``kpp:r=0.7``,
    ``modified:k=1,theta=0.3,eps=0.05``.
    """
    from .harness import ReactionConfig, build_reaction

    kind, _, rest = text.partition(":")
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"reaction parameter '{item}' is not of the form key=value")
        if key not in ("r", "k", "theta", "eps"):
            raise ConfigError(f"unknown reaction parameter '{key}'")
        try:
            params[key] = float(value)
        except ValueError:
            raise ConfigError(f"reaction parameter '{key}' is not a number: {value!r}") from None
    return build_reaction(ReactionConfig(kind.strip(), **params))


def _resolve(args, path: Optional[str], default: str) -> Path:
    p = Path(path if path else default)
    if not p.is_absolute():
        p = Path(args.out_dir) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------
def _cmd_wave(args) -> int:
    from .waves import bistable_front, kpp_front, kpp_min_speed

    f = parse_reaction_spec(args.reaction)
    if f.is_kpp:
        nu = kpp_min_speed(f) if args.speed is None else args.speed
        wave = kpp_front(f, nu)
    else:
        if args.speed is not None:
            raise ConfigError("--speed applies to KPP reactions only; bistable speeds are unique")
        wave = bistable_front(f)
    out = _resolve(args, args.out, "wave.csv")
    res = np.full(wave.abscissa.size, np.nan)
    if wave.residual.size == wave.abscissa.size - 2:
        res[1:-1] = wave.residual
    elif wave.residual.size == wave.abscissa.size:
        res = wave.residual
    with open(out, "w") as fh:
        fh.write(f"# speed={wave.speed!r} decay_plus={wave.decay_plus!r} decay_minus={wave.decay_minus!r}\n")
        fh.write("s,phi,residual\n")
        np.savetxt(fh, np.column_stack([wave.abscissa, wave.values, res]), delimiter=",", fmt="%.17g")
    _say(args, f"speed {wave.speed:.10g}  decay_plus {wave.decay_plus:.6g}  decay_minus "
               f"{wave.decay_minus:.6g}  -> {out}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    from .harness import load_config, run

    cfg = load_config(args.config)
    out = Path(args.out_dir) if args.run_dir is None else Path(args.run_dir)
    manifest = run(cfg, out)
    for w in manifest.warnings:
        log.warning(w)
    _say(args, f"run written to {out} ({len(manifest.files)} files, {manifest.wall_clock:.2f} s)")
    return EXIT_OK


def _cmd_fronts(args) -> int:
    from .fronts import fit_log_delay, fit_speed, trace_level
    from .harness import load_trajectory
    from .waves import kpp_min_speed

    traj = load_trajectory(args.traj)
    tr = trace_level(traj, args.level, args.side)
    out = _resolve(args, args.out, "fronts.csv")
    with open(out, "w") as fh:
        fh.write("t,position\n")
        np.savetxt(fh, np.column_stack([tr.times, tr.positions]), delimiter=",", fmt="%.17g")
        if args.fit:
            window = tuple(args.window) if args.window else (0.5 * traj.T, traj.T)
            if args.fit == "speed":
                fit = fit_speed(tr, window)
                rec = {"fit": "speed", "speed": fit.speed, "intercept": fit.intercept, "stderr": fit.stderr,
                       "window": list(fit.window), "n": fit.n}
            else:
                frozen = -(kpp_min_speed(traj.problem.field.left) + traj.c) if args.side == "left" else None
                fit = fit_log_delay(tr, window, frozen_a=frozen)
                rec = {"fit": "logdelay", "a": fit.a, "b": fit.b, "c0": fit.c0, "rms": fit.rms,
                       "window": list(fit.window), "n": fit.n, "frozen_a": fit.frozen_a,
                       "frozen_b": fit.frozen_b}
            fh.write("# fit " + json.dumps(rec, sort_keys=True) + "\n")
            _say(args, json.dumps(rec, sort_keys=True))
    _say(args, f"trace ({tr.times.size} samples) -> {out}")
    return EXIT_OK


def _cmd_stationary(args) -> int:
    from .harness import build_problem, load_config
    from .stationary import decay_rates, solve_blocking_profile

    cfg = load_config(args.config)
    problem = build_problem(cfg)
    eta, zeta = decay_rates(problem.field, problem.c)
    X = args.half_width if args.half_width is not None else math.ceil(40.0 / min(eta, zeta))
    prof = solve_blocking_profile(problem, X)
    out = _resolve(args, args.out, "stationary.csv")
    with open(out, "w") as fh:
        fh.write(f"# eta={prof.eta!r} zeta={prof.zeta!r} c={prof.c!r}\n")
        fh.write("x,U,residual\n")
        np.savetxt(fh, np.column_stack([prof.x, prof.values, prof.residual]), delimiter=",", fmt="%.17g")
    _say(args, f"blocking profile on [-{X}, {X}]: residual {prof.residual_max:.3g}, "
               f"{prof.iterations} iterations -> {out}")
    return EXIT_OK


def _cmd_verify_barriers(args) -> int:
    from .barriers import certify_case

    report = certify_case(args.case, theta=args.theta)
    out = _resolve(args, args.out, f"barriers_{args.case}.json")
    out.write_text(json.dumps(report, indent=2, sort_keys=True, default=_jsonable))
    for chk in report["checks"]:
        _say(args, f"{'PASS' if chk['passed'] else 'FAIL'}  {chk['name']:<32s} margin {chk['margin']:.4g}")
    if not report["passed"]:
        raise _CheckFailed(f"barrier case {args.case} failed")
    return EXIT_OK


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, (tuple, np.ndarray)):
        return list(o)
    return str(o)


def _cmd_classify(args) -> int:
    from .harness import load_trajectory
    from .phase import classify, predict
    from .waves import cached_bistable_front, kpp_min_speed

    traj = load_trajectory(args.traj)
    fld = traj.problem.field
    c_m = kpp_min_speed(fld.left)
    c_b = cached_bistable_front(fld.right).speed
    outcome = classify(traj)
    rec = {"measured_kind": outcome.kind, "measured_left": outcome.left, "measured_right": outcome.right,
           "c": traj.c, "c_m": c_m, "c_b": c_b}
    try:
        pred = predict(traj.c, c_m, c_b)
        rec.update(predicted_kind=pred.kind, predicted_left=pred.left, predicted_right=pred.right)
    except FrontLabError as exc:
        rec["prediction_error"] = str(exc)
    print(json.dumps(rec, sort_keys=True, default=_jsonable))
    return EXIT_OK


def _load_cells(path):
    from dataclasses import fields

    from .harness import tomllib
    from .phase import CellSpec, acceptance_cells

    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for key in data:
        if key not in ("preset", "cell"):
            raise ConfigError(f"unknown key '{key}' in sweep config")
    cells = []
    if "preset" in data:
        if data["preset"] != "acceptance":
            raise ConfigError(f"unknown preset '{data['preset']}'")
        cells += acceptance_cells()
    known = {f.name for f in fields(CellSpec)}
    for i, entry in enumerate(data.get("cell", [])):
        for key in entry:
            if key not in known:
                raise ConfigError(f"unknown key 'cell[{i}].{key}'")
        if "c" not in entry or "theta" not in entry:
            raise ConfigError(f"cell[{i}] needs 'c' and 'theta'")
        cells.append(CellSpec(**entry))
    if not cells:
        raise ConfigError("sweep config defines no cells")
    return cells


def _cmd_sweep(args) -> int:
    from .phase import sweep, write_sweep_csv

    cells = _load_cells(args.config)
    results = sweep(cells, jobs=args.jobs)
    out = _resolve(args, args.out, "sweep.csv")
    write_sweep_csv(results, out)
    bad = 0
    for res in results:
        row = res.row()
        ok = row["agreement"] in ("yes", "open")
        bad += not ok
        _say(args, f"{'PASS' if ok else 'FAIL'}  c={res.c:+.4f} theta={res.spec.theta:.2f} "
                   f"{res.spec.label or res.spec.datum}: predicted {row['predicted_kind']}, "
                   f"measured {row['measured_kind']}" + (f" ({res.error})" if res.error else ""))
    _say(args, f"{len(results) - bad}/{len(results)} cells agree -> {out}")
    if bad:
        raise _CheckFailed(f"{bad} sweep cells disagree with the prediction")
    return EXIT_OK


def _cmd_plot_data(args) -> int:
    from .harness import emit_plot_data

    out = _resolve(args, args.out, f"{args.kind}.dat")
    emit_plot_data(args.run, args.kind, out=out, level=args.level, side=args.side, t=args.time,
                   window=tuple(args.window) if args.window else None, every=args.every)
    _say(args, f"{args.kind} -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------
def _global_flags(defaults: bool) -> argparse.ArgumentParser:
    """Global flags, accepted both before and after the subcommand."""
    p = argparse.ArgumentParser(add_help=False)
    kw = (lambda v: {"default": v}) if defaults else (lambda v: {"default": argparse.SUPPRESS})
    p.add_argument("--out-dir", help="base directory for outputs (default: current directory)", **kw("."))
    p.add_argument("--jobs", type=int, help="worker processes for sweeps", **kw(1))
    p.add_argument("--quiet", action="store_true", help="suppress progress output", **kw(False))
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="front-lab", parents=[_global_flags(True)],
                                     description="Fronts of advected reaction-diffusion equations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = [_global_flags(False)]

    p = sub.add_parser("wave", parents=common, help="compute a traveling front")
    p.add_argument("--reaction", required=True, help="e.g. bistable:k=1,theta=0.3 or kpp:r=0.7")
    p.add_argument("--speed", type=float, help="front speed (KPP only; default: minimal speed)")
    p.add_argument("--out", help="CSV path (s, phi, residual)")
    p.set_defaults(func=_cmd_wave)

    p = sub.add_parser("simulate", parents=common, help="run a TOML experiment into a run directory")
    p.add_argument("--config", required=True)
    p.add_argument("--run-dir", help="run directory (default: --out-dir)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fronts", parents=common, help="extract a level-set trace from a run")
    p.add_argument("--traj", required=True, help="run directory")
    p.add_argument("--level", type=float, default=0.5)
    p.add_argument("--side", choices=("left", "right"), default="left")
    p.add_argument("--fit", choices=("speed", "logdelay"))
    p.add_argument("--window", type=float, nargs=2, metavar=("T1", "T2"))
    p.add_argument("--out", help="CSV path (t, position)")
    p.set_defaults(func=_cmd_fronts)

    p = sub.add_parser("stationary", parents=common, help="solve for the blocking stationary profile")
    p.add_argument("--config", required=True, help="experiment TOML (field, problem.c, problem.dx)")
    p.add_argument("--half-width", type=float, help="half-width X of the domain [-X, X]")
    p.add_argument("--out", help="CSV path (x, U, residual)")
    p.set_defaults(func=_cmd_stationary)

    p = sub.add_parser("verify-barriers", parents=common, help="certify barrier constructions")
    p.add_argument("--case", required=True, choices=("rightward", "leftward", "bump", "static"))
    p.add_argument("--theta", type=float, default=0.3)
    p.add_argument("--out", help="JSON report path")
    p.set_defaults(func=_cmd_verify_barriers)

    p = sub.add_parser("classify", parents=common, help="classify a finished run")
    p.add_argument("--traj", required=True, help="run directory")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("sweep", parents=common, help="run a phase-diagram sweep")
    p.add_argument("--config", required=True, help="TOML with preset = 'acceptance' and/or [[cell]] tables")
    p.add_argument("--out", help="merged CSV path")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("plot-data", parents=common, help="emit gnuplot-ready columns from a run")
    p.add_argument("--run", required=True, help="run directory")
    p.add_argument("--kind", required=True, help="spacetime_heat, trace or profile_overlay")
    p.add_argument("--level", type=float, default=0.5)
    p.add_argument("--side", choices=("left", "right"), default="left")
    p.add_argument("--time", type=float, help="snapshot time for profile_overlay")
    p.add_argument("--window", type=float, nargs=2, metavar=("X1", "X2"))
    p.add_argument("--every", type=int, default=1, help="snapshot stride for spacetime_heat")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_plot_data)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except _CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (NumericalFailure, NoThresholdFound, Inconclusive) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FrontLabError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
