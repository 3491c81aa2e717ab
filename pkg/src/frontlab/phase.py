"""Outcome prediction, classification of runs, sweeps and threshold search.

Speeds are reported as spreading speeds: the leftward speed is minus the
slope of the leftmost level-set trace and the rightward speed is the slope
of the rightmost one, so a positive leftward speed means invasion to the left.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (FrontLabError, InconsistentSpeeds, InsufficientSamples, InvalidParameter,
                     NoThresholdFound, WrongRegime)
from .fronts import SpeedFit, fit_speed
from .reactions import build_blend, build_cubic_bistable, build_kpp
from .solver import PlateauBump, Problem, Trajectory, integrate
from .stationary import semi_persistence_check
from .waves import cached_bistable_front, kpp_min_speed

log = logging.getLogger(__name__)

__all__ = [
    "Prediction",
    "predict",
    "Thresholds",
    "Outcome",
    "classify",
    "CellSpec",
    "CellResult",
    "acceptance_cells",
    "run_cell",
    "sweep",
    "write_sweep_csv",
    "SWEEP_COLUMNS",
    "speeds_agree",
    "ThresholdResult",
    "threshold_width",
]

SWEEP_COLUMNS = ["c", "theta", "k", "r", "c_m", "c_b", "predicted_kind", "predicted_left",
                 "predicted_right", "measured_kind", "measured_left", "measured_right", "agreement"]

_SAME_SPEED = 1e-12


# ---------------------------------------------------------------------------
# prediction
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Prediction:
    """Predicted long-time behaviour for constant data ``(c, c_m, c_b)``.

    Attributes
    ----------
    kind : {'propagation', 'blocking_right', 'extinction', 'conditional', 'open'}
        ``conditional`` means the outcome depends on the initial datum:
        large data propagate with the listed speeds, small data go extinct.
    left, right : float or None
        Leftward and rightward spreading speeds (for ``conditional``, those of
        large data). Blocking has ``right = 0``.
    cell : str
        Name of the table cell.
    left_involves_cm, right_involves_cm : bool
        Whether the speed is a KPP speed (its level sets carry a
        logarithmic delay).
    """

    c: float
    c_m: float
    c_b: float
    kind: str
    left: Optional[float]
    right: Optional[float]
    cell: str
    left_involves_cm: bool = False
    right_involves_cm: bool = False

    @property
    def conditional(self) -> bool:
        return self.kind == "conditional"

    def resolve(self, large_data: bool) -> "Prediction":
        """Definite prediction of a conditional cell for large or small data."""
        if not self.conditional:
            return self
        if large_data:
            return Prediction(self.c, self.c_m, self.c_b, "propagation", self.left, self.right,
                              self.cell + ":large")
        return Prediction(self.c, self.c_m, self.c_b, "extinction", None, None, self.cell + ":small")


def predict(c: float, c_m: float, c_b: float) -> Prediction:
    """Table lookup of the predicted outcome.

    Raises
    ------
    InconsistentSpeeds
        If ``c_m <= c_b``.
    InvalidParameter
        If ``c_m <= 0``.
    """
    if not c_m > 0:
        raise InvalidParameter(f"c_m must be positive, got {c_m}")
    if not c_m > c_b:
        raise InconsistentSpeeds(f"c_m={c_m} must exceed c_b={c_b}")
    if c > -c_m:
        left = c_m + c
        if abs(c - c_b) <= _SAME_SPEED:
            return Prediction(c, c_m, c_b, "propagation", left, 0.0, "virtual_blocking", True, False)
        if c_b < c < c_m:
            return Prediction(c, c_m, c_b, "blocking_right", left, 0.0, "blocking", True, False)
        if c >= c_m:
            return Prediction(c, c_m, c_b, "propagation", left, c_m - c, "kpp_retreat", True, True)
        return Prediction(c, c_m, c_b, "propagation", left, c_b - c, "complete_propagation", True, False)
    if c_b > 0:
        return Prediction(c, c_m, c_b, "conditional", c_b + c, c_b - c, "conditional")
    if c_b < 0:
        return Prediction(c, c_m, c_b, "extinction", None, None, "extinction")
    return Prediction(c, c_m, c_b, "open", None, None, "open")


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Thresholds:
    """Classification thresholds.

    Attributes
    ----------
    extinction : float
        ``max u(T)`` below this means extinction.
    undecided_ceiling : float
        A decaying run with ``max u(T)`` below this is undecided.
    block_variation : float
        Largest total variation of the right trace over the last half for blocking.
    settle_drift : float
        Largest displacement of the right trace over the last quarter for
        blocking; slower-than-linear drift beyond this (the ``c = c_b`` case)
        is propagation with vanishing speed.
    window_fraction : float
        Fits and variations use ``[(1 - window_fraction) T, T]``.
    """

    extinction: float = 1e-3
    undecided_ceiling: float = 0.1
    block_variation: float = 1.0
    settle_drift: float = 0.05
    window_fraction: float = 0.5


@dataclass
class Outcome:
    """Measured outcome of one run."""

    kind: str
    left_fit: Optional[SpeedFit]
    right_fit: Optional[SpeedFit]
    diagnostics: dict = field(default_factory=dict)
    note: str = ""

    @property
    def left(self) -> Optional[float]:
        return None if self.left_fit is None else -self.left_fit.speed

    @property
    def right(self) -> Optional[float]:
        return None if self.right_fit is None else self.right_fit.speed


def _try_fit(traj: Trajectory, side: str, window, log_correction: float) -> Optional[SpeedFit]:
    tr = traj.traces.get((0.5, side))
    if tr is None:
        return None
    try:
        return fit_speed(tr, window, log_correction=log_correction)
    except InsufficientSamples:
        return None


def classify(traj: Trajectory, thresholds: Thresholds = Thresholds(),
             log_corrections: tuple[float, float] = (0.0, 0.0)) -> Outcome:
    """Classify a run as extinction, right blocking or propagation.

    Parameters
    ----------
    traj : Trajectory
        Must carry the streamed ``(0.5, 'left')`` and ``(0.5, 'right')`` traces.
    thresholds : Thresholds
    log_corrections : (float, float)
        Coefficients of known ``b ln t`` terms of the left and right traces,
        removed before the speed fits.

    Returns
    -------
    Outcome
        ``kind`` is ``'undecided'`` when the run neither satisfies a
        definition nor can be fitted; ``note`` then suggests a longer run.
    """
    th = thresholds
    T = traj.T
    diag: dict = {"T": T, "max_u_final": float(traj.max_u[-1]), "stop_reason": traj.stop_reason}
    m_end = float(traj.max_u[-1])
    if m_end < th.extinction:
        return Outcome("extinction", None, None, diag)
    i_q = int(np.searchsorted(traj.diag_times, 0.75 * T))
    decaying = float(traj.max_u[min(i_q, traj.max_u.size - 1)]) > m_end
    if m_end < th.undecided_ceiling and decaying:
        return Outcome("undecided", None, None, diag, "max u still decaying; extend T")
    t1 = (1.0 - th.window_fraction) * T
    window = (t1, T)
    left_fit = _try_fit(traj, "left", window, log_corrections[0])
    right_fit = _try_fit(traj, "right", window, log_corrections[1])
    rtr = traj.traces.get((0.5, "right"))
    tv = drift = math.nan
    if rtr is not None:
        _, pos = rtr.window(t1, T)
        if pos.size > 1:
            tv = float(np.sum(np.abs(np.diff(pos))))
            _, last = rtr.window(T - 0.25 * T, T)
            drift = float(last[-1] - last[0]) if last.size > 1 else math.nan
    diag.update(right_variation=tv, right_drift=drift)
    x_bar = -traj.problem.field.L - 5.0
    try:
        persistent = semi_persistence_check(traj, x_bar)
    except InvalidParameter:
        persistent = False
    diag["semi_persistent"] = persistent
    if tv < th.block_variation and abs(drift) < th.settle_drift and persistent:
        return Outcome("blocking_right", left_fit, right_fit, diag)
    if left_fit is not None and right_fit is not None:
        return Outcome("propagation", left_fit, right_fit, diag)
    return Outcome("undecided", left_fit, right_fit, diag, "fronts could not be fitted; extend T")


def speeds_agree(predicted: Optional[float], measured: Optional[float],
                 rel: float = 0.05, abs_tol: float = 0.02) -> bool:
    """Match within 5% or 0.02 absolute, whichever is larger."""
    if predicted is None:
        return True
    if measured is None or not math.isfinite(measured):
        return False
    return abs(measured - predicted) <= max(rel * abs(predicted), abs_tol)


# ---------------------------------------------------------------------------
# cells and sweeps
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class CellSpec:
    """One sweep cell of the reference family ``r = k (1 - theta)``.

    ``datum`` selects the initial data: ``'kpp_region'`` (height 0.9, width
    20, centered at ``-L - 15``), ``'large_bistable'`` (height 0.9, width 50,
    centered at 100) or ``'small_bistable'`` (height 0.25, width 50, centered
    at 100). ``c`` may be the string ``'c_b'`` for the bistable speed itself.
    """

    c: object
    theta: float
    k: float = 1.0
    r: Optional[float] = None
    datum: str = "kpp_region"
    T: float = 300.0
    dx: float = 0.1
    dt: float = 0.02
    L: float = 5.0
    label: str = ""

    @property
    def r_value(self) -> float:
        return self.k * (1.0 - self.theta) if self.r is None else float(self.r)

    def speeds(self) -> tuple[float, float, float]:
        """Return ``(c, c_m, c_b)`` with ``c`` resolved."""
        fm = build_kpp(self.r_value)
        fb = build_cubic_bistable(self.k, self.theta)
        c_m = kpp_min_speed(fm)
        c_b = cached_bistable_front(fb).speed
        c = c_b if self.c == "c_b" else float(self.c)
        return c, c_m, c_b

    def initial_datum(self) -> PlateauBump:
        if self.datum == "kpp_region":
            return PlateauBump(0.9, 20.0, center=-self.L - 15.0)
        if self.datum == "large_bistable":
            return PlateauBump(0.9, 50.0, center=100.0)
        if self.datum == "small_bistable":
            return PlateauBump(0.25, 50.0, center=100.0)
        raise InvalidParameter(f"unknown datum family {self.datum!r}")


def acceptance_cells() -> list[CellSpec]:
    """The twelve cells of the acceptance sweep."""
    cells = [CellSpec(c, 0.3, label=f"theta0.3_c{c}") for c in (3.0, 2.0, 1.0, "c_b", 0.0, -1.0)]
    cells.append(CellSpec(-2.0, 0.3, datum="large_bistable", label="theta0.3_c-2_large"))
    cells.append(CellSpec(-2.0, 0.3, datum="small_bistable", label="theta0.3_c-2_small"))
    # below -c_m the question is whether large data survive, so those cells use the large datum
    cells.append(CellSpec(0.0, 0.6, label="theta0.6_c0"))
    cells.append(CellSpec(-1.5, 0.6, datum="large_bistable", label="theta0.6_c-1.5"))
    cells.append(CellSpec(0.0, 0.95, label="theta0.95_c0"))
    cells.append(CellSpec(-0.7, 0.95, datum="large_bistable", label="theta0.95_c-0.7"))
    return cells


@dataclass
class CellResult:
    """Prediction, measured outcome and agreement of one cell."""

    spec: CellSpec
    c: float
    c_m: float
    c_b: float
    prediction: Optional[Prediction]
    outcome: Optional[Outcome]
    agreement: str
    extra: dict = field(default_factory=dict)
    error: Optional[str] = None

    def row(self) -> dict:
        p, o = self.prediction, self.outcome

        def fmt(v):
            return "" if v is None else repr(float(v))

        return {
            "c": repr(self.c), "theta": repr(self.spec.theta), "k": repr(self.spec.k),
            "r": repr(self.spec.r_value), "c_m": repr(self.c_m), "c_b": repr(self.c_b),
            "predicted_kind": "" if p is None else p.kind,
            "predicted_left": fmt(None if p is None else p.left),
            "predicted_right": fmt(None if p is None else p.right),
            "measured_kind": "error" if o is None else o.kind,
            "measured_left": fmt(None if o is None else o.left),
            "measured_right": fmt(None if o is None else o.right),
            "agreement": self.agreement,
        }


def _extinct_stop(level: float):
    def stop(t, x, u):
        return "extinct" if float(u.max()) < level else None
    return stop


def run_cell(spec: CellSpec, thresholds: Thresholds = Thresholds(),
             keep_trajectory: bool = False, compare_blocking: bool = True) -> CellResult:
    """Simulate one cell, classify it and compare with the prediction.

    The grid grows with the solution and carries zero far-field values. A
    zero-flux boundary upstream of the drift would keep re-seeding the KPP
    region and turn its convectively unstable zero state into an absolutely
    unstable one.

    Blocking cells additionally record ``blocking_distance``, the sup
    distance between ``u(T)`` and the blocking profile on ``[-20, 20]``.
    """
    from .stationary import decay_rates, solve_blocking_profile

    c, c_m, c_b = spec.speeds()
    fm = build_kpp(spec.r_value)
    fb = build_cubic_bistable(spec.k, spec.theta)
    fld = build_blend(fm, fb, spec.L)
    u0 = spec.initial_datum()
    lo, hi = u0.support
    problem = Problem(fld, c, min(-60.0, lo - 30.0), max(60.0, hi + 30.0), dx=spec.dx, dt=spec.dt,
                      bc="dirichlet_farfield")
    pred = predict(c, c_m, c_b)
    if pred.conditional:
        pred = pred.resolve(spec.datum == "large_bistable")
    traj = integrate(problem, u0, spec.T, snapshot_every=1.0,
                     track=((0.5, "left"), (0.5, "right"), (0.01, "right")),
                     stop=_extinct_stop(0.1 * thresholds.extinction), stop_every=1.0)
    corr = (3.0 / c_m if pred.left_involves_cm else 0.0, -3.0 / c_m if pred.right_involves_cm else 0.0)
    out = classify(traj, thresholds, corr)
    extra: dict = {"log_corrections": list(corr), "events": len(traj.events)}
    if out.kind == "blocking_right" and compare_blocking:
        eta, zeta = decay_rates(fld, c)
        X = spec.dx * math.ceil((40.0 / min(eta, zeta) + 10.0) / spec.dx)
        U = solve_blocking_profile(Problem(fld, c, -X, X, dx=spec.dx, dt=spec.dt), X)
        x, u = traj.profile_at(traj.T)
        sel = (x >= -20.0 - 1e-9) & (x <= 20.0 + 1e-9)
        extra["blocking_distance"] = float(np.max(np.abs(u[sel] - U(x[sel]))))
    if keep_trajectory:
        extra["trajectory"] = traj
    agreement = _agreement(pred, out)
    return CellResult(spec, c, c_m, c_b, pred, out, agreement, extra)


def _agreement(pred: Prediction, out: Outcome) -> str:
    if out.kind == "undecided":
        return "undecided"
    if pred.kind == "open":
        return "open"
    if pred.kind != out.kind:
        return "no"
    if pred.kind == "extinction":
        return "yes"
    ok = speeds_agree(pred.left, out.left) and speeds_agree(pred.right, out.right)
    return "yes" if ok else "no"


def _run_cell_safe(spec: CellSpec) -> CellResult:
    try:
        return run_cell(spec)
    except FrontLabError as exc:
        try:
            c, c_m, c_b = spec.speeds()
        except FrontLabError:
            c, c_m, c_b = math.nan, math.nan, math.nan
        return CellResult(spec, c, c_m, c_b, None, None, "error", error=f"{type(exc).__name__}: {exc}")


def sweep(cells: Sequence[CellSpec], jobs: int = 1) -> list[CellResult]:
    """Run every cell (in parallel when ``jobs > 1``); results keep the cell order.

    Errors of one cell are recorded in its result and do not stop the sweep.
    """
    cells = list(cells)
    if not cells:
        return []
    if jobs <= 1:
        return [_run_cell_safe(s) for s in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell_safe, cells))


def write_sweep_csv(results: Sequence[CellResult], path) -> None:
    """Write the sweep table with the fixed column set."""
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        w.writeheader()
        for res in results:
            w.writerow(res.row())


# ---------------------------------------------------------------------------
# threshold search
# ---------------------------------------------------------------------------
@dataclass
class ThresholdResult:
    """Bisection outcome: ``width`` lies between an extinct and a propagating width."""

    width: float
    extinct_width: float
    propagating_width: float
    extinct_outcome: str
    propagating_outcome: str
    runs: list = field(default_factory=list)


def _threshold_run(fld, c: float, height: float, width: float, center: float, T_max: float,
                   dx: float, dt: float, shoulder: float) -> tuple[str, float]:
    u0 = PlateauBump(height, width, center=center, shoulder=shoulder)
    lo, hi = u0.support
    problem = Problem(fld, c, min(-30.0, lo - 30.0), max(40.0, hi + 30.0), dx=dx, dt=dt,
                      bc="dirichlet_farfield")
    target = width + 2.0 * shoulder + 30.0

    def stop(t, x, u):
        if float(u.max()) < 1e-3:
            return "extinct"
        above = np.nonzero(u > 0.5)[0]
        if above.size and (above[-1] - above[0]) * dx >= target:
            return "propagating"
        return None

    traj = integrate(problem, u0, T_max, snapshot_every=T_max, track=(), stop=stop, stop_every=0.5)
    return traj.stop_reason or "undecided", float(traj.times[-1])


def threshold_width(c: float, theta: float, height: float, k: float = 1.0, r: Optional[float] = None,
                    tol_w: float = 0.5, w_max: float = 200.0, center: float = 100.0,
                    T_max: float = 600.0, dx: float = 0.1, dt: float = 0.02, shoulder: float = 0.5,
                    L: float = 5.0) -> ThresholdResult:
    """Bisect the plateau width separating extinction from propagation.

    Each run starts from a plateau of the given height (shoulders of width
    ``shoulder``) centered at ``center`` and stops once ``max u < 1e-3``
    (extinct) or once ``{u > 0.5}`` is 30 units wider than the datum
    (propagating).

    Raises
    ------
    WrongRegime
        Unless ``c <= -c_m`` and ``c_b > 0``.
    NoThresholdFound
        If the width ``w_max`` does not propagate (by comparison, no smaller
        width does either).
    """
    r = k * (1.0 - theta) if r is None else r
    fm, fb = build_kpp(r), build_cubic_bistable(k, theta)
    c_m = kpp_min_speed(fm)
    c_b = cached_bistable_front(fb).speed
    if not (c <= -c_m and c_b > 0):
        raise WrongRegime(f"threshold search needs c <= -c_m and c_b > 0 (c={c}, c_m={c_m:.6g}, c_b={c_b:.6g})")
    fld = build_blend(fm, fb, L)
    args = (fld, c, height)
    kw = dict(center=center, T_max=T_max, dx=dx, dt=dt, shoulder=shoulder)
    runs = []
    top, t_top = _threshold_run(*args, w_max, **kw)
    runs.append((w_max, top, t_top))
    if top != "propagating":
        raise NoThresholdFound(f"width {w_max} at height {height} ended {top} at t={t_top:g}")
    bottom, t_bot = _threshold_run(*args, 0.0, **kw)
    runs.append((0.0, bottom, t_bot))
    if bottom != "extinct":
        raise NoThresholdFound(f"even width 0 at height {height} ended {bottom}; no extinct bracket")
    lo, hi = 0.0, w_max
    while hi - lo > tol_w:
        mid = 0.5 * (lo + hi)
        res, t_end = _threshold_run(*args, mid, **kw)
        runs.append((mid, res, t_end))
        if res == "propagating":
            hi = mid
        elif res == "extinct":
            lo = mid
        else:
            raise NoThresholdFound(f"width {mid} ended undecided at t={t_end:g}; increase T_max")
    return ThresholdResult(0.5 * (lo + hi), lo, hi, "extinct", "propagating", runs)
