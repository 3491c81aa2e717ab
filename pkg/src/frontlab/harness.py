"""Experiment configuration, run directories and plot-data emission.

A run directory holds

* ``config.toml``: the parsed configuration, re-serialized canonically;
* ``snapshots.csv``: ``t, x, u`` triples of the decimated snapshots;
* ``traces.csv``: streamed level-set positions;
* ``diagnostics.csv``: ``t, max_u, mass, boundary_max`` per tracked step;
* ``meta.json``: problem fields, scheme constants and package versions;
* ``events.log``: grid growth and warnings;
* ``fits.csv`` and ``outcome.json`` when an analysis block is present;
* ``manifest.json``: checksums of all of the above, written last, so a
  directory without it is an interrupted run.

Floats are written with 17 significant digits, which makes every output
file bit-reproducible for a given configuration.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

import numpy as np
import scipy
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from . import __version__
from .errors import ConfigError, FrontLabError
from .fronts_core import FrontTrace
from .fronts import fit_log_delay, fit_speed, match_profile, trace_level
from .reactions import (HeterogeneousField, Reaction, build_blend, build_cubic_bistable, build_kpp,
                        build_modified_bistable)
from .solver import PlateauBump, Problem, Trajectory, integrate
from .waves import bistable_front, kpp_min_speed

__all__ = [
    "ReactionConfig",
    "FieldConfig",
    "ProblemConfig",
    "InitialConfig",
    "RunConfig",
    "AnalysisConfig",
    "ExperimentConfig",
    "RunManifest",
    "parse_config",
    "load_config",
    "dump_config",
    "run",
    "load_trajectory",
    "emit_plot_data",
    "PLOT_KINDS",
    "build_reaction",
]

PLOT_KINDS = ("spacetime_heat", "trace", "profile_overlay")
_FMT = "%.17g"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ReactionConfig:
    """``kind`` plus the named parameters of that class."""

    kind: str
    r: Optional[float] = None
    k: Optional[float] = None
    theta: Optional[float] = None
    eps: Optional[float] = None


@dataclass(frozen=True)
class FieldConfig:
    left: ReactionConfig = ReactionConfig("kpp", r=0.7)
    right: ReactionConfig = ReactionConfig("bistable", k=1.0, theta=0.3)
    L: float = 5.0


@dataclass(frozen=True)
class ProblemConfig:
    c: float = 0.0
    x_lo: float = -60.0
    x_hi: float = 60.0
    dx: float = 0.1
    dt: float = 0.02
    bc: str = "neumann"
    grow: str = "expand"
    margin: float = 20.0
    grow_threshold: float = 1e-6


@dataclass(frozen=True)
class InitialConfig:
    """Plateau datum (``kind = 'plateau'``) of the given height and width."""

    kind: str = "plateau"
    height: float = 0.9
    width: float = 20.0
    center: float = -20.0
    shoulder: float = 2.0


@dataclass(frozen=True)
class RunConfig:
    T: float = 100.0
    snapshot_every: float = 1.0
    track_every: int = 1


@dataclass(frozen=True)
class AnalysisConfig:
    """Post-processing requests.

    ``levels`` and ``sides`` select streamed traces; speed fits use
    ``fit_window`` (default: last half); a log-delay fit of the left 0.5
    trace is made when ``log_window`` is set; ``match_t`` with
    ``match_window`` requests a profile match of the bistable front.
    """

    levels: tuple = (0.5,)
    sides: tuple = ("left", "right")
    fit_window: Optional[tuple] = None
    log_window: Optional[tuple] = None
    match_t: Optional[float] = None
    match_window: Optional[tuple] = None
    classify: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    field: FieldConfig = FieldConfig()
    problem: ProblemConfig = ProblemConfig()
    initial: InitialConfig = InitialConfig()
    run: RunConfig = RunConfig()
    analysis: Optional[AnalysisConfig] = None


_TUPLE_FIELDS = {"levels", "sides", "fit_window", "log_window", "match_window"}


def _coerce(cls, data: Any, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"'{path}' must be a table")
    known = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown key '{path + '.' if path else ''}{key}'")
    kwargs = {}
    for name, f in known.items():
        if name not in data:
            continue
        val = data[name]
        sub = _NESTED.get((cls, name))
        where = f"{path + '.' if path else ''}{name}"
        if sub is not None:
            kwargs[name] = _coerce(sub, val, where)
        elif name in _TUPLE_FIELDS:
            if not isinstance(val, (list, tuple)):
                raise ConfigError(f"'{where}' must be an array")
            kwargs[name] = tuple(float(v) if not isinstance(v, str) else v for v in val)
        else:
            kwargs[name] = _scalar(val, f, where)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"missing required key in '{path}': {exc}") from None


def _scalar(val, f, where):
    typ = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    if "bool" in typ:
        if not isinstance(val, bool):
            raise ConfigError(f"'{where}' must be a boolean")
        return val
    if "int" in typ:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"'{where}' must be an integer")
        return val
    if "float" in typ:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"'{where}' must be a number")
        return float(val)
    if "str" in typ:
        if not isinstance(val, str):
            raise ConfigError(f"'{where}' must be a string")
        return val
    return val


_NESTED = {
    (ExperimentConfig, "field"): FieldConfig,
    (ExperimentConfig, "problem"): ProblemConfig,
    (ExperimentConfig, "initial"): InitialConfig,
    (ExperimentConfig, "run"): RunConfig,
    (ExperimentConfig, "analysis"): AnalysisConfig,
    (FieldConfig, "left"): ReactionConfig,
    (FieldConfig, "right"): ReactionConfig,
}


def parse_config(data: dict) -> ExperimentConfig:
    """Build a configuration from a parsed TOML table, rejecting unknown keys.

    Raises
    ------
    ConfigError
        Naming the offending key.
    """
    return _coerce(ExperimentConfig, data, "")


def load_config(path) -> ExperimentConfig:
    """Read and parse a TOML configuration file."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data)


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        out = {}
        for f in fields(obj):
            v = getattr(obj, f.name)
            if v is None:
                continue
            out[f.name] = _to_plain(v)
        return out
    if isinstance(obj, tuple):
        return [_to_plain(v) for v in obj]
    return obj


def dump_config(cfg: ExperimentConfig) -> str:
    """Canonical TOML text of a configuration (``None`` entries omitted)."""
    return tomli_w.dumps(_to_plain(cfg))


def config_digest(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(dump_config(cfg).encode()).hexdigest()


def build_reaction(rc: ReactionConfig) -> Reaction:
    """Construct a reaction from its configuration block."""
    if rc.kind == "kpp":
        if rc.r is None:
            raise ConfigError("kpp reaction needs 'r'")
        return build_kpp(rc.r)
    if rc.kind in ("bistable", "modified"):
        if rc.k is None or rc.theta is None:
            raise ConfigError(f"{rc.kind} reaction needs 'k' and 'theta'")
        fb = build_cubic_bistable(rc.k, rc.theta)
        if rc.kind == "bistable":
            return fb
        if rc.eps is None:
            raise ConfigError("modified reaction needs 'eps'")
        return build_modified_bistable(fb, rc.eps)
    raise ConfigError(f"unknown reaction kind '{rc.kind}'")


def build_field(fc: FieldConfig) -> HeterogeneousField:
    return build_blend(build_reaction(fc.left), build_reaction(fc.right), fc.L)


def build_problem(cfg: ExperimentConfig) -> Problem:
    p = cfg.problem
    return Problem(build_field(cfg.field), p.c, p.x_lo, p.x_hi, dx=p.dx, dt=p.dt, bc=p.bc, grow=p.grow,
                   margin=p.margin, grow_threshold=p.grow_threshold)


def build_initial(ic: InitialConfig):
    if ic.kind == "plateau":
        return PlateauBump(ic.height, ic.width, center=ic.center, shoulder=ic.shoulder)
    raise ConfigError(f"unknown initial datum kind '{ic.kind}'")


# ---------------------------------------------------------------------------
# run directory
# ---------------------------------------------------------------------------
@dataclass
class RunManifest:
    """Record of a finished run: config digest, version, checksums and timing."""

    config_digest: str
    version: str
    files: dict
    wall_clock: float
    warnings: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_table(path: Path, header: list, columns: list) -> None:
    arr = np.column_stack([np.asarray(c, dtype=float) for c in columns]) if columns else np.zeros((0, 0))
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        if arr.size:
            np.savetxt(fh, arr, delimiter=",", fmt=_FMT)


def _write_snapshots(path: Path, traj: Trajectory) -> None:
    with open(path, "w") as fh:
        fh.write("t,x,u\n")
        for j, t in enumerate(traj.times):
            x = traj.grid(j)
            block = np.column_stack([np.full(x.size, t), x, traj.snapshots[j]])
            np.savetxt(fh, block, delimiter=",", fmt=_FMT)


def _trace_keys(cfg: ExperimentConfig) -> list:
    keys = [(0.5, "left"), (0.5, "right")]
    if cfg.analysis is not None:
        for lev in cfg.analysis.levels:
            for side in cfg.analysis.sides:
                if (float(lev), side) not in keys:
                    keys.append((float(lev), side))
    return keys


def _trace_name(key) -> str:
    return f"{key[1]}_{key[0]!r}"


def _meta(cfg: ExperimentConfig, problem: Problem, traj: Trajectory) -> dict:
    fld = problem.field
    return {
        "problem": problem.describe(),
        "scheme": {
            "time_stepping": "IMEX Euler: implicit diffusion and central advection, explicit reaction",
            "stencil": "three-point central differences",
            "undershoot_floor": -1e-12,
            "c_m": kpp_min_speed(fld.left),
        },
        "final_time": traj.T,
        "stop_reason": traj.stop_reason,
        "snapshots": int(traj.times.size),
        "final_grid": [float(traj.origins[-1]), float(traj.grid(len(traj.snapshots) - 1)[-1])],
        "versions": {"frontlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
    }


def _analysis(cfg: ExperimentConfig, traj: Trajectory, out: Path) -> list:
    """Write fits.csv and outcome.json; returns the written file names."""
    from .phase import classify

    an = cfg.analysis
    written = []
    T = traj.T
    window = tuple(an.fit_window) if an.fit_window else (0.5 * T, T)
    c_m = kpp_min_speed(traj.problem.field.left)
    rows = []
    for lev in an.levels:
        for side in an.sides:
            tr = trace_level(traj, float(lev), side)
            try:
                fit = fit_speed(tr, window)
                rows.append(("speed", side, float(lev), window[0], window[1], fit.speed, fit.stderr, fit.n))
            except FrontLabError as exc:
                rows.append(("speed_failed:" + type(exc).__name__, side, float(lev), window[0], window[1],
                             math.nan, math.nan, 0))
    if an.log_window:
        tr = trace_level(traj, 0.5, "left")
        lw = tuple(an.log_window)
        try:
            ld = fit_log_delay(tr, lw, frozen_a=-(c_m + traj.c))
            rows.append(("logdelay_a", "left", 0.5, lw[0], lw[1], ld.a, ld.rms, ld.n))
            rows.append(("logdelay_b", "left", 0.5, lw[0], lw[1], ld.b, ld.rms, ld.n))
            rows.append(("logdelay_frozen_b", "left", 0.5, lw[0], lw[1], ld.frozen_b, ld.frozen_rms, ld.n))
        except FrontLabError as exc:
            rows.append(("logdelay_failed:" + type(exc).__name__, "left", 0.5, lw[0], lw[1],
                         math.nan, math.nan, 0))
    if an.match_t is not None and an.match_window:
        wave = bistable_front(traj.problem.field.right)
        pm = match_profile(traj, an.match_t, wave, wave.speed - traj.c, tuple(an.match_window))
        rows.append(("profile_sup_error", "right", 0.5, an.match_t, an.match_t, pm.sup_error, pm.shift, 0))
    with open(out / "fits.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["quantity", "side", "level", "t1", "t2", "value", "spread", "n"])
        for r in rows:
            w.writerow([r[0], r[1], repr(r[2]), repr(float(r[3])), repr(float(r[4])), repr(float(r[5])),
                        repr(float(r[6])), r[7]])
    written.append("fits.csv")
    if an.classify:
        outcome = classify(traj)
        with open(out / "outcome.json", "w") as fh:
            json.dump(_outcome_record(outcome), fh, indent=2, sort_keys=True, default=_json_default)
        written.append("outcome.json")
    return written


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(type(o))


def _outcome_record(outcome) -> dict:
    rec = {"kind": outcome.kind, "left_speed": outcome.left, "right_speed": outcome.right,
           "note": outcome.note}
    rec["diagnostics"] = {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                          for k, v in outcome.diagnostics.items()}
    return rec


def run(config: ExperimentConfig, out_dir) -> RunManifest:
    """Execute a configuration and write its run directory.

    Any library error is written to ``error.log`` in the run directory and
    re-raised; no manifest is written in that case.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "manifest.json"
    if manifest_path.exists():
        manifest_path.unlink()
    start = time.perf_counter()
    try:
        problem = build_problem(config)
        u0 = build_initial(config.initial)
        traj = integrate(problem, u0, config.run.T, snapshot_every=config.run.snapshot_every,
                         track=_trace_keys(config), track_every=config.run.track_every)
        files = ["config.toml", "snapshots.csv", "traces.csv", "diagnostics.csv", "meta.json", "events.log"]
        (out / "config.toml").write_text(dump_config(config))
        _write_snapshots(out / "snapshots.csv", traj)
        keys = list(traj.traces)
        _write_table(out / "traces.csv", ["t"] + [_trace_name(k) for k in keys],
                     [traj.diag_times] + [traj.traces[k].positions for k in keys])
        _write_table(out / "diagnostics.csv", ["t", "max_u", "mass", "boundary_max"],
                     [traj.diag_times, traj.max_u, traj.mass, traj.boundary_max])
        with open(out / "meta.json", "w") as fh:
            json.dump(_meta(config, problem, traj), fh, indent=2, sort_keys=True)
        (out / "events.log").write_text("".join(e + "\n" for e in traj.events))
        if config.analysis is not None:
            files += _analysis(config, traj, out)
    except FrontLabError as exc:
        (out / "error.log").write_text(f"{type(exc).__name__}: {exc}\n")
        raise
    manifest = RunManifest(config_digest(config), __version__,
                           {name: _sha256(out / name) for name in files},
                           time.perf_counter() - start, list(traj.warnings))
    manifest_path.write_text(manifest.to_json())
    return manifest


def load_trajectory(run_dir) -> Trajectory:
    """Rebuild a trajectory (snapshots, traces, diagnostics) from a run directory.

    Raises
    ------
    ConfigError
        If the directory has no manifest (interrupted or foreign directory).
    """
    d = Path(run_dir)
    if not (d / "manifest.json").exists():
        raise ConfigError(f"{d} is not a completed run directory (no manifest.json)")
    cfg = load_config(d / "config.toml")
    problem = build_problem(cfg)
    snap = np.loadtxt(d / "snapshots.csv", delimiter=",", skiprows=1, ndmin=2)
    starts = np.flatnonzero(np.r_[True, np.diff(snap[:, 0]) != 0.0])
    ends = np.r_[starts[1:], snap.shape[0]]
    times = snap[starts, 0].copy()
    snapshots = [snap[a:b, 2].copy() for a, b in zip(starts, ends)]
    origins = snap[starts, 1].copy()
    with open(d / "traces.csv") as fh:
        header = fh.readline().strip().split(",")
    tr = np.loadtxt(d / "traces.csv", delimiter=",", skiprows=1, ndmin=2)
    traces = {}
    for i, name in enumerate(header[1:], start=1):
        side, lev = name.split("_", 1)
        traces[(float(lev), side)] = FrontTrace(float(lev), side, tr[:, 0].copy(), tr[:, i].copy())
    dg = np.loadtxt(d / "diagnostics.csv", delimiter=",", skiprows=1, ndmin=2)
    meta = json.loads((d / "meta.json").read_text())
    events = [ln for ln in (d / "events.log").read_text().splitlines() if ln]
    warnings = [e[len("warning: "):] for e in events if e.startswith("warning: ")]
    return Trajectory(problem=problem, times=times, snapshots=snapshots, origins=origins, traces=traces,
                      diag_times=dg[:, 0].copy(), max_u=dg[:, 1].copy(), mass=dg[:, 2].copy(),
                      boundary_max=dg[:, 3].copy(), events=events, warnings=warnings,
                      stop_reason=meta.get("stop_reason"), initial_sup=float(snapshots[0].max()))


def emit_plot_data(run_dir, kind: str, out=None, level: float = 0.5, side: str = "left",
                   t: Optional[float] = None, window: Optional[tuple] = None,
                   every: int = 1) -> str:
    """Write gnuplot-ready whitespace-separated columns for one plot kind.

    ``spacetime_heat`` gives ``t x u`` blocks separated by blank lines (every
    ``every``-th snapshot); ``trace`` gives ``t position``; ``profile_overlay``
    gives ``x u phi_shifted`` at time ``t`` (default: final) for the
    best-matching shifted bistable front.

    Returns the text; also writes it to ``out`` when given.

    Raises
    ------
    ConfigError
        For an unknown kind.
    """
    if kind not in PLOT_KINDS:
        raise ConfigError(f"unknown plot kind '{kind}'; choose from {', '.join(PLOT_KINDS)}")
    traj = load_trajectory(run_dir)
    buf = io.StringIO()
    if kind == "spacetime_heat":
        buf.write("# t x u\n")
        for j in range(0, traj.times.size, max(1, every)):
            block = np.column_stack([np.full(traj.snapshots[j].size, traj.times[j]), traj.grid(j),
                                     traj.snapshots[j]])
            np.savetxt(buf, block, fmt=_FMT)
            buf.write("\n")
    elif kind == "trace":
        tr = trace_level(traj, level, side)
        buf.write("# t position\n")
        np.savetxt(buf, np.column_stack([tr.times, tr.positions]), fmt=_FMT)
    else:
        tt = traj.T if t is None else float(t)
        wave = bistable_front(traj.problem.field.right)
        x, u = traj.profile_at(tt)
        win = tuple(window) if window else (float(x[0]), float(x[-1]))
        pm = match_profile(traj, tt, wave, wave.speed - traj.c, win)
        sel = (x >= win[0] - 1e-9) & (x <= win[1] + 1e-9)
        phi = wave(x[sel] - pm.sigma * tt + pm.shift)
        buf.write(f"# x u phi_shifted  (t={tt!r}, shift={pm.shift!r}, sup_error={pm.sup_error!r})\n")
        np.savetxt(buf, np.column_stack([x[sel], u[sel], phi]), fmt=_FMT)
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text
