"""Time integration of ``u_t = u_xx + c u_x + f(x, u)`` on a truncated line.

The scheme is first-order IMEX: diffusion and advection (second-order central
differences) are implicit, the reaction is explicit,

    (I - dt D2 - dt c D1) u^{n+1} = u^n + dt f(x, u^n).

When ``|c| dx <= 2`` the implicit matrix is an M-matrix and, provided
``1 + dt * min d_s f >= 0``, one step is order preserving, so the discrete
solution obeys the comparison principle. The tridiagonal matrix is factored
once with LAPACK and refactored only when the domain grows.

Level-set positions, the maximum of ``u`` and the mass are streamed at every
step (or every ``track_every`` steps); full snapshots are decimated.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Protocol

import numpy as np
from scipy.linalg.lapack import dgttrf, dgttrs

from .errors import InvalidParameter, NumericalInstability, WindowOutsideDomain
from .fronts_core import FrontTrace, leftmost_crossing, rightmost_crossing
from .reactions import HeterogeneousField, smoothstep

log = logging.getLogger(__name__)

__all__ = [
    "Problem",
    "PlateauBump",
    "SampledDatum",
    "Trajectory",
    "ViolationReport",
    "integrate",
    "frame_shift",
    "gaussian_bound_check",
    "logistic_envelope",
]

MAX_SNAPSHOTS = 2000
CLAMP_FLOOR = -1e-12


class Field(Protocol):
    L: float

    def eval(self, x, s): ...

    def deriv_s(self, x, s): ...


@dataclass(frozen=True)
class Problem:
    """Discretized Cauchy problem.

    Attributes
    ----------
    field : HeterogeneousField
        Reaction ``f(x, s)``; any object with ``eval``, ``deriv_s`` and ``L``.
    c : float
        Advection rate.
    x_lo, x_hi : float
        Initial domain; nodes sit at integer multiples of ``dx`` offset from ``x_lo``.
    dx, dt : float
        Mesh width and time step.
    bc : {'neumann', 'dirichlet_farfield'}
    grow : {'expand', 'fixed'}
        ``expand`` adds 25% of the current length on a side whenever ``u``
        exceeds ``grow_threshold`` within ``margin`` of that boundary.
    margin, grow_threshold : float
    """

    field: Field
    c: float
    x_lo: float
    x_hi: float
    dx: float = 0.1
    dt: float = 0.02
    bc: str = "neumann"
    grow: str = "expand"
    margin: float = 20.0
    grow_threshold: float = 1e-6

    def __post_init__(self):
        if not (self.dx > 0 and self.dt > 0):
            raise InvalidParameter("dx and dt must be positive")
        if self.bc not in ("neumann", "dirichlet_farfield"):
            raise InvalidParameter(f"unknown boundary condition {self.bc!r}")
        if self.grow not in ("expand", "fixed"):
            raise InvalidParameter(f"unknown grow policy {self.grow!r}")
        L = self.field.L
        if not (self.x_lo < -L - 10.0 and self.x_hi > L + 10.0):
            raise InvalidParameter(f"domain [{self.x_lo}, {self.x_hi}] must contain [-L-10, L+10] with L={L}")

    @property
    def n_nodes(self) -> int:
        return int(round((self.x_hi - self.x_lo) / self.dx)) + 1

    def grid(self) -> np.ndarray:
        return self.x_lo + self.dx * np.arange(self.n_nodes)

    def describe(self) -> dict:
        """Plain-data description (used for metadata files)."""
        fld = self.field
        out = {
            "c": self.c, "x_lo": self.x_lo, "x_hi": self.x_hi, "dx": self.dx, "dt": self.dt,
            "bc": self.bc, "grow": self.grow, "margin": self.margin,
            "grow_threshold": self.grow_threshold, "L": fld.L,
        }
        if isinstance(fld, HeterogeneousField):
            out["left"] = fld.left.describe()
            out["right"] = fld.right.describe()
        return out


@dataclass(frozen=True)
class PlateauBump:
    """Plateau of height ``height`` on ``[center - width/2, center + width/2]``.

    The plateau falls to zero over a shoulder of width ``shoulder`` following
    a quintic smoothstep, so the datum is C2 and compactly supported.
    """

    height: float
    width: float
    center: float = 0.0
    shoulder: float = 2.0

    def __post_init__(self):
        if self.height < 0 or self.width < 0 or self.shoulder <= 0:
            raise InvalidParameter("bump height and width must be nonnegative and the shoulder positive")

    @property
    def support(self) -> tuple[float, float]:
        half = 0.5 * self.width + self.shoulder
        return self.center - half, self.center + half

    def __call__(self, x):
        d = np.abs(np.asarray(x, dtype=float) - self.center) - 0.5 * self.width
        return self.height * smoothstep(1.0 - d / self.shoulder)


@dataclass(frozen=True)
class SampledDatum:
    """Initial datum given by a callable.

    ``support`` is the declared compact support, or ``None`` for data that
    are positive on the whole line (these are simply truncated to the grid).
    """

    func: Callable[[np.ndarray], np.ndarray]
    support: Optional[tuple[float, float]] = None

    def __call__(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)


@dataclass
class Trajectory:
    """Decimated snapshots plus streamed diagnostics of one run.

    Snapshot ``j`` lives on ``origins[j] + dx * arange(len(snapshots[j]))``.
    """

    problem: Problem
    times: np.ndarray
    snapshots: list
    origins: np.ndarray
    traces: dict = field(default_factory=dict)
    diag_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    max_u: np.ndarray = field(default_factory=lambda: np.zeros(0))
    mass: np.ndarray = field(default_factory=lambda: np.zeros(0))
    boundary_max: np.ndarray = field(default_factory=lambda: np.zeros(0))
    events: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    frame_speed: float = 0.0
    stop_reason: Optional[str] = None
    initial_sup: float = 0.0

    @property
    def dx(self) -> float:
        return self.problem.dx

    @property
    def c(self) -> float:
        return self.problem.c

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def grid(self, j: int) -> np.ndarray:
        return self.origins[j] + self.dx * np.arange(self.snapshots[j].size)

    def snapshot_index(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))

    def profile_at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """``(x, u)`` at time ``t``, interpolating linearly between snapshots.

        Snapshots within ``dt / 2`` of ``t`` are returned as is.
        """
        j = self.snapshot_index(t)
        if abs(self.times[j] - t) <= 0.5 * self.problem.dt:
            return self.grid(j), self.snapshots[j]
        if t < self.times[0] or t > self.times[-1]:
            raise ValueError(f"t={t} outside the recorded time range")
        j1 = int(np.searchsorted(self.times, t))
        j0 = j1 - 1
        w = (t - self.times[j0]) / (self.times[j1] - self.times[j0])
        x = self.grid(j1) if self.snapshots[j1].size >= self.snapshots[j0].size else self.grid(j0)
        u0 = np.interp(x, self.grid(j0), self.snapshots[j0], left=0.0, right=0.0)
        u1 = np.interp(x, self.grid(j1), self.snapshots[j1], left=0.0, right=0.0)
        return x, (1.0 - w) * u0 + w * u1

    def trace(self, rho: float, side: str) -> Optional[FrontTrace]:
        return self.traces.get((float(rho), side))


def logistic_envelope(sup0: float, rate: float, t):
    """Solution of ``xi' = rate xi (1 - xi)`` with ``xi(0) = max(1, sup0)``."""
    xi0 = max(1.0, sup0)
    t = np.asarray(t, dtype=float)
    return xi0 / (xi0 + (1.0 - xi0) * np.exp(-rate * t))


class _Stepper:
    """Holds the factored operator and reaction weights for the current grid."""

    def __init__(self, problem: Problem, x0: float, n: int):
        self.p = problem
        self.rebuild(x0, n)

    def rebuild(self, x0: float, n: int):
        p = self.p
        self.x0, self.n = x0, n
        self.x = x0 + p.dx * np.arange(n)
        a = p.dt / p.dx**2
        b = p.dt * p.c / (2.0 * p.dx)
        d = np.full(n, 1.0 + 2.0 * a)
        dl = np.full(n - 1, -(a - b))
        du = np.full(n - 1, -(a + b))
        if p.bc == "neumann":
            du[0] = -2.0 * a
            dl[-1] = -2.0 * a
        else:
            d[0] = d[-1] = 1.0
            du[0] = 0.0
            dl[-1] = 0.0
        dl, d, du, du2, ipiv, info = dgttrf(dl, d, du)
        if info != 0:
            raise NumericalInstability(f"tridiagonal factorization failed (info={info})")
        self.lu = (dl, d, du, du2, ipiv)
        fld = p.field
        L = fld.L
        self.i_left = int(np.searchsorted(self.x, -L, side="right"))   # x < -L  -> pure left
        self.i_right = int(np.searchsorted(self.x, L, side="left"))    # x >= L  -> pure right
        self.chi = None
        if isinstance(fld, HeterogeneousField):
            self.chi = fld.chi(self.x[self.i_left:self.i_right])

    def reaction(self, u: np.ndarray) -> np.ndarray:
        fld = self.p.field
        if self.chi is None:
            return fld.eval(self.x, u)
        out = np.empty_like(u)
        il, ir = self.i_left, self.i_right
        out[:il] = fld.left.eval(u[:il])
        out[ir:] = fld.right.eval(u[ir:])
        um = u[il:ir]
        out[il:ir] = (1.0 - self.chi) * fld.left.eval(um) + self.chi * fld.right.eval(um)
        return out

    def step(self, u: np.ndarray) -> np.ndarray:
        rhs = u + self.p.dt * self.reaction(u)
        if self.p.bc == "dirichlet_farfield":
            rhs[0] = rhs[-1] = 0.0
        dl, d, du, du2, ipiv = self.lu
        out, info = dgttrs(dl, d, du, du2, ipiv, rhs, overwrite_b=True)
        if info != 0:
            raise NumericalInstability(f"tridiagonal solve failed (info={info})")
        return out


def _check_stability(problem: Problem, sup0: float):
    if abs(problem.c) * problem.dx > 2.0:
        raise InvalidParameter(
            f"|c| dx = {abs(problem.c) * problem.dx:.3g} > 2: the implicit operator is not monotone")
    top = max(1.0, sup0)
    s = np.linspace(0.0, top, 513)
    xs = np.linspace(-problem.field.L, problem.field.L, 33)
    rate = np.min(problem.field.deriv_s(xs[:, None], s[None, :]))
    if 1.0 + problem.dt * rate < 0.0:
        raise InvalidParameter(
            f"dt = {problem.dt} too large for the reaction: 1 + dt min f_s = {1 + problem.dt * rate:.3g} < 0")


def integrate(problem: Problem, u0, T: float, snapshot_every: float = 1.0,
              track: Iterable[tuple[float, str]] = ((0.5, "left"), (0.5, "right")),
              track_every: int = 1,
              stop: Optional[Callable[[float, np.ndarray, np.ndarray], Optional[str]]] = None,
              stop_every: float = 1.0) -> Trajectory:
    """Integrate the problem from ``u0`` up to time ``T``.

    Parameters
    ----------
    problem : Problem
    u0 : callable
        Initial datum evaluated on the grid (e.g. :class:`PlateauBump`).
    T : float
        Final time.
    snapshot_every : float
        Snapshot cadence; raised automatically so that at most
        ``MAX_SNAPSHOTS`` snapshots are kept.
    track : iterable of (level, side)
        Level sets streamed at every ``track_every``-th step.
    stop : callable, optional
        ``stop(t, x, u)`` evaluated every ``stop_every`` time units; a
        non-``None`` return value ends the run early and is recorded as
        ``stop_reason``.

    Returns
    -------
    Trajectory

    Raises
    ------
    NumericalInstability
        On non-finite values or undershoots below ``-1e-12``.
    """
    p = problem
    n_steps = int(round(T / p.dt))
    if n_steps < 0:
        raise InvalidParameter("T must be nonnegative")
    x0, n = p.x_lo, p.n_nodes
    x = x0 + p.dx * np.arange(n)
    support = getattr(u0, "support", None)
    if support is not None and (support[0] < x[0] or support[1] > x[-1]):
        raise WindowOutsideDomain(f"initial support {support} not inside [{x[0]}, {x[-1]}]")
    u = np.array(u0(x), dtype=float)
    if u.shape != x.shape or not np.all(np.isfinite(u)) or u.min() < 0:
        raise InvalidParameter("initial datum must be finite, nonnegative and defined on the grid")
    sup0 = float(u.max())
    _check_stability(p, sup0)
    st = _Stepper(p, x0, n)

    snap_stride = max(1, int(round(snapshot_every / p.dt)))
    if n_steps // snap_stride + 1 > MAX_SNAPSHOTS:
        snap_stride = int(math.ceil(n_steps / (MAX_SNAPSHOTS - 1)))
    stop_stride = max(1, int(round(stop_every / p.dt)))
    track = [(float(r), s) for r, s in track]
    for r, s in track:
        if not (0.0 < r < 1.0) or s not in ("left", "right"):
            raise InvalidParameter(f"bad tracked level {(r, s)}")
    n_track = n_steps // track_every + 1
    tr_t = np.empty(n_track)
    tr_pos = {key: np.empty(n_track) for key in track}
    d_max = np.empty(n_track)
    d_mass = np.empty(n_track)
    d_bnd = np.empty(n_track)

    times, snaps, origins = [], [], []
    events: list[str] = []
    warnings: list[str] = []
    k_margin = max(1, int(round(p.margin / p.dx)))
    escaped = False
    stop_reason = None
    i_track = 0

    def record(t):
        nonlocal i_track
        tr_t[i_track] = t
        for (r, s), arr in tr_pos.items():
            arr[i_track] = (leftmost_crossing if s == "left" else rightmost_crossing)(st.x0, p.dx, u, r)
        d_max[i_track] = u.max()
        d_mass[i_track] = p.dx * (u.sum() - 0.5 * (u[0] + u[-1]))
        d_bnd[i_track] = max(u[0], u[-1])
        i_track += 1

    record(0.0)
    times.append(0.0)
    snaps.append(u.copy())
    origins.append(st.x0)

    for step in range(1, n_steps + 1):
        u = st.step(u)
        m = u.min()
        if not m >= CLAMP_FLOOR:
            if not np.all(np.isfinite(u)):
                raise NumericalInstability(f"non-finite values at step {step} (t={step * p.dt:.6g})")
            raise NumericalInstability(f"undershoot {m:.3e} at step {step} (t={step * p.dt:.6g})")
        if m < 0.0:
            np.maximum(u, 0.0, out=u)
        t = step * p.dt
        lo_hot = u[:k_margin].max() > p.grow_threshold
        hi_hot = u[-k_margin:].max() > p.grow_threshold
        if lo_hot or hi_hot:
            if p.grow == "expand":
                length = (st.n - 1) * p.dx
                add = int(math.ceil(0.25 * length / p.dx))
                add_lo, add_hi = (add if lo_hot else 0), (add if hi_hot else 0)
                u = np.concatenate([np.zeros(add_lo), u, np.zeros(add_hi)])
                new_x0 = st.x0 - add_lo * p.dx
                st.rebuild(new_x0, u.size)
                events.append(f"t={t:.6g}: grid grown to [{st.x[0]:.6g}, {st.x[-1]:.6g}] ({u.size} nodes)")
            elif not escaped:
                escaped = True
                msg = f"t={t:.6g}: front within {p.margin} of a boundary under the fixed grid policy"
                warnings.append(msg)
                events.append("warning: " + msg)
        if step % track_every == 0:
            record(t)
        if step % snap_stride == 0 or step == n_steps:
            times.append(t)
            snaps.append(u.copy())
            origins.append(st.x0)
        if stop is not None and step % stop_stride == 0:
            stop_reason = stop(t, st.x, u)
            if stop_reason is not None:
                if times[-1] != t:
                    times.append(t)
                    snaps.append(u.copy())
                    origins.append(st.x0)
                if tr_t[i_track - 1] != t:
                    record(t)
                events.append(f"t={t:.6g}: stopped ({stop_reason})")
                break

    traces = {key: FrontTrace(key[0], key[1], tr_t[:i_track].copy(), arr[:i_track].copy())
              for key, arr in tr_pos.items()}
    return Trajectory(problem=p, times=np.array(times), snapshots=snaps, origins=np.array(origins),
                      traces=traces, diag_times=tr_t[:i_track].copy(), max_u=d_max[:i_track].copy(),
                      mass=d_mass[:i_track].copy(), boundary_max=d_bnd[:i_track].copy(),
                      events=events, warnings=warnings, stop_reason=stop_reason, initial_sup=sup0)


def frame_shift(traj: Trajectory, speed: Optional[float] = None) -> Trajectory:
    """Resample a trajectory in the frame ``y = x + speed * t``.

    ``speed`` defaults to the advection rate, which turns the advective
    equation into a pure reaction-diffusion equation with a heterogeneity
    moving at ``-c``. Snapshots are linearly interpolated onto a common
    ``dx``-spaced grid covering every shifted snapshot; values outside a
    snapshot's own grid are filled with its boundary values (the Neumann
    extension). Streamed traces are shifted exactly.
    """
    v = traj.c if speed is None else float(speed)
    dx = traj.dx
    shifted_lo = [o + v * t for o, t in zip(traj.origins, traj.times)]
    shifted_hi = [o + (s.size - 1) * dx + v * t for o, s, t in zip(traj.origins, traj.snapshots, traj.times)]
    lo = math.floor(min(shifted_lo) / dx + 1e-9) * dx
    hi = math.ceil(max(shifted_hi) / dx - 1e-9) * dx
    y = lo + dx * np.arange(int(round((hi - lo) / dx)) + 1)
    snaps = []
    for j, t in enumerate(traj.times):
        xj = traj.grid(j) + v * t
        uj = traj.snapshots[j]
        if v * t == 0.0 and abs(xj[0] - y[0]) < 1e-12 * max(1.0, abs(y[0])) and uj.size == y.size:
            snaps.append(uj.copy())
        else:
            snaps.append(np.interp(y, xj, uj))
    traces = {key: tr.shifted(v) for key, tr in traj.traces.items()}
    return replace(traj, snapshots=snaps, origins=np.full(len(snaps), lo), traces=traces,
                   frame_speed=traj.frame_speed + v, events=list(traj.events), warnings=list(traj.warnings))


@dataclass
class ViolationReport:
    """Per-snapshot excess of ``u`` over the Gaussian envelopes.

    ``excess[j]`` is ``nan`` for snapshots that were not evaluated (``t`` below
    ``t_min``).
    """

    times: np.ndarray
    excess: np.ndarray
    tolerance: float = 1e-8

    @property
    def evaluated(self) -> np.ndarray:
        return np.isfinite(self.excess)

    @property
    def passed(self) -> bool:
        ev = self.excess[self.evaluated]
        return bool(ev.size > 0 and np.all(ev <= self.tolerance))

    @property
    def worst(self) -> float:
        ev = self.excess[self.evaluated]
        return float(ev.max()) if ev.size else float("nan")


def gaussian_bound_check(traj: Trajectory, K: float, L1: float, L2: float, M: float,
                         t_min: float = 1.0, tolerance: float = 1e-8) -> ViolationReport:
    """Compare every snapshot with the heat-kernel envelopes of the support.

    For ``x <= -c t - L1`` the envelope is ``M exp(K t - (x + c t + L1)^2 / (4 t))``
    and for ``x >= L2 - c t`` it is ``M exp(K t - (x + c t - L2)^2 / (4 t))``.
    """
    c = traj.c
    excess = np.full(traj.times.size, np.nan)
    for j, t in enumerate(traj.times):
        if t < t_min:
            continue
        x = traj.grid(j)
        u = traj.snapshots[j]
        worst = -np.inf
        left = x <= -c * t - L1
        if np.any(left):
            env = M * np.exp(K * t - (x[left] + c * t + L1) ** 2 / (4.0 * t))
            worst = max(worst, float(np.max(u[left] - env)))
        right = x >= L2 - c * t
        if np.any(right):
            env = M * np.exp(K * t - (x[right] + c * t - L2) ** 2 / (4.0 * t))
            worst = max(worst, float(np.max(u[right] - env)))
        excess[j] = max(worst, 0.0) if np.isfinite(worst) else 0.0
    return ViolationReport(traj.times.copy(), excess, tolerance)
