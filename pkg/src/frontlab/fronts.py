"""Level sets, speed and logarithmic-delay fits, and profile matching."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import FitDegenerate, InsufficientSamples, InvalidParameter, WindowOutsideDomain
from .fronts_core import FrontTrace, crossing, leftmost_crossing, rightmost_crossing
from .waves import WaveProfile

if TYPE_CHECKING:
    from .solver import Trajectory

__all__ = [
    "FrontTrace",
    "SpeedFit",
    "LogDelayFit",
    "ProfileMatch",
    "trace_level",
    "fit_speed",
    "fit_log_delay",
    "match_profile",
    "leftmost_crossing",
    "rightmost_crossing",
]


@dataclass(frozen=True)
class SpeedFit:
    """Ordinary least-squares line ``position ~ speed * t + intercept``.

    ``log_correction`` is the coefficient ``b`` of a known ``b ln t`` term that
    was subtracted from the positions before fitting (0 for a plain fit).
    """

    speed: float
    intercept: float
    stderr: float
    window: tuple[float, float]
    n: int
    log_correction: float = 0.0


@dataclass(frozen=True)
class LogDelayFit:
    """Least-squares fit ``position ~ a t + b ln t + c0``.

    The ``frozen_*`` fields hold the constrained fit with ``a`` fixed at
    ``frozen_a`` (when one was supplied).
    """

    a: float
    b: float
    c0: float
    rms: float
    window: tuple[float, float]
    n: int
    frozen_a: Optional[float] = None
    frozen_b: Optional[float] = None
    frozen_c0: Optional[float] = None
    frozen_rms: Optional[float] = None


@dataclass(frozen=True)
class ProfileMatch:
    """Best shift of a profile against one snapshot in the sup norm."""

    shift: float
    sup_error: float
    window: tuple[float, float]
    sigma: float
    t: float
    mirrored: bool = False


def trace_level(traj: "Trajectory", rho: float, side: str, source: str = "auto") -> FrontTrace:
    """Leftmost (``side='left'``) or rightmost crossing of ``rho`` over time.

    Parameters
    ----------
    traj : Trajectory
    rho : float
        Level in ``(0, 1)``.
    side : {'left', 'right'}
    source : {'auto', 'streamed', 'snapshots'}
        ``auto`` uses the trace streamed during integration when one exists
        for this level, otherwise scans the stored snapshots.
    """
    if not (0.0 < rho < 1.0):
        raise InvalidParameter(f"level must lie in (0, 1), got {rho}")
    if side not in ("left", "right"):
        raise InvalidParameter(f"side must be 'left' or 'right', got {side!r}")
    if source in ("auto", "streamed"):
        tr = traj.traces.get((float(rho), side))
        if tr is not None:
            return FrontTrace(tr.level, tr.side, tr.times.copy(), tr.positions.copy())
        if source == "streamed":
            raise KeyError(f"level {rho} on side {side} was not streamed")
    pos = np.array([crossing(traj.origins[j], traj.dx, u, rho, side)
                    for j, u in enumerate(traj.snapshots)])
    return FrontTrace(float(rho), side, traj.times.copy(), pos)


def fit_speed(trace: FrontTrace, window: tuple[float, float], log_correction: float = 0.0) -> SpeedFit:
    """Fit a straight line to the trace on ``window``.

    Parameters
    ----------
    trace : FrontTrace
    window : (t1, t2)
        Time window, at least 10 time units long.
    log_correction : float
        Coefficient ``b`` of a known ``b ln t`` term removed before fitting.

    Raises
    ------
    InsufficientSamples
        Fewer than 50 gap-free samples or a window shorter than 10.
    """
    t1, t2 = map(float, window)
    if t2 - t1 < 10.0:
        raise InsufficientSamples(f"window [{t1}, {t2}] shorter than 10 time units")
    t, y = trace.window(t1, t2)
    if t.size < 50:
        raise InsufficientSamples(f"only {t.size} gap-free samples in [{t1}, {t2}]")
    if log_correction:
        y = y - log_correction * np.log(t)
    A = np.column_stack([t, np.ones_like(t)])
    coef, _, _, _ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(t.size - 2, 1)
    sxx = float(np.sum((t - t.mean()) ** 2))
    stderr = math.sqrt(float(resid @ resid) / dof / sxx) if sxx > 0 else math.inf
    return SpeedFit(float(coef[0]), float(coef[1]), stderr, (t1, t2), int(t.size), float(log_correction))


def fit_log_delay(trace: FrontTrace, window: tuple[float, float],
                  frozen_a: Optional[float] = None, max_condition: float = 1e12) -> LogDelayFit:
    """Fit ``position ~ a t + b ln t + c0`` on ``window``.

    Parameters
    ----------
    trace : FrontTrace
    window : (t1, t2)
        Needs ``t1 >= 50`` and at least 200 gap-free samples.
    frozen_a : float, optional
        If given, also fit ``position - frozen_a t ~ b ln t + c0``.
    max_condition : float
        Condition-number ceiling of the column-scaled design matrix.

    Raises
    ------
    InsufficientSamples, FitDegenerate
    """
    t1, t2 = map(float, window)
    if t1 < 50.0:
        raise InsufficientSamples(f"log-delay window must start at t >= 50, got {t1}")
    t, y = trace.window(t1, t2)
    if t.size < 200:
        raise InsufficientSamples(f"only {t.size} gap-free samples in [{t1}, {t2}]")
    A = np.column_stack([t, np.log(t), np.ones_like(t)])
    scale = np.linalg.norm(A, axis=0)
    cond = np.linalg.cond(A / scale)
    if not np.isfinite(cond) or cond > max_condition:
        raise FitDegenerate(f"design matrix condition number {cond:.3g} exceeds {max_condition:.1g}")
    coef, _, _, _ = np.linalg.lstsq(A / scale, y, rcond=None)
    coef = coef / scale
    rms = float(np.sqrt(np.mean((y - A @ coef) ** 2)))
    fz = dict(frozen_a=None, frozen_b=None, frozen_c0=None, frozen_rms=None)
    if frozen_a is not None:
        B = A[:, 1:]
        yz = y - frozen_a * t
        cz, _, _, _ = np.linalg.lstsq(B, yz, rcond=None)
        fz = dict(frozen_a=float(frozen_a), frozen_b=float(cz[0]), frozen_c0=float(cz[1]),
                  frozen_rms=float(np.sqrt(np.mean((yz - B @ cz) ** 2))))
    return LogDelayFit(float(coef[0]), float(coef[1]), float(coef[2]), rms, (t1, t2), int(t.size), **fz)


def _golden(fun, a: float, b: float, tol: float, max_iter: int = 200):
    """Golden-section search for a minimum of ``fun`` on ``[a, b]``.

    Returns the best ``(x, f(x))`` among all evaluated points.
    """
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fun(c), fun(d)
    best = min((fc, c), (fd, d))
    for _ in range(max_iter):
        if abs(b - a) <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fun(c)
            best = min(best, (fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fun(d)
            best = min(best, (fd, d))
    return best[1], best[0]


def match_profile(traj: "Trajectory", t: float, wave: WaveProfile, sigma: float,
                  window: tuple[float, float], mirrored: bool = False) -> ProfileMatch:
    """Best sup-norm fit of ``phi(x - sigma t + xi)`` (or ``phi(-x - sigma t + xi)``).

    The shift ``xi`` is first located on a ``dx``-spaced grid (aligned at
    integer multiples of ``dx``) covering every shift that places the
    profile's center inside the window, then refined by golden-section
    search to ``1e-4 dx``.

    Raises
    ------
    WindowOutsideDomain
        If the window is not inside the snapshot's grid.
    """
    x, u = traj.profile_at(t)
    xa, xb = map(float, window)
    if not (xa < xb) or xa < x[0] - 1e-9 or xb > x[-1] + 1e-9:
        raise WindowOutsideDomain(f"window [{xa}, {xb}] not inside [{x[0]}, {x[-1]}]")
    sel = (x >= xa - 1e-9) & (x <= xb + 1e-9)
    xs, us = x[sel], u[sel]
    orient = -1.0 if mirrored else 1.0
    base = orient * xs - sigma * t

    def err(xi):
        return float(np.max(np.abs(us - wave(base + xi))))

    dx = traj.dx
    # the profile centre phi = theta sits at base + xi = 0 for some window node
    lo, hi = -base.max(), -base.min()
    pad = 0.25 * (hi - lo) + 5.0
    k0, k1 = math.floor((lo - pad) / dx), math.ceil((hi + pad) / dx)
    grid = dx * np.arange(k0, k1 + 1)
    errs = np.empty(grid.size)
    for start in range(0, grid.size, 256):
        block = grid[start:start + 256]
        vals = wave(base[None, :] + block[:, None])
        errs[start:start + 256] = np.max(np.abs(us[None, :] - vals), axis=1)
    i = int(np.argmin(errs))
    best_xi, best_err = float(grid[i]), float(errs[i])
    xi, e = _golden(err, best_xi - dx, best_xi + dx, 1e-4 * dx)
    if e < best_err:
        best_xi, best_err = xi, e
    return ProfileMatch(best_xi, best_err, (xa, xb), float(sigma), float(t), bool(mirrored))
