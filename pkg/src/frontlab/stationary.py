"""Stationary states: the blocking profile and long-time probes.

The blocking profile ``U`` solves ``U'' + c U' + f(x, U) = 0`` with
``U(-inf) = 1`` and ``U(+inf) = 0``. It is computed on ``[-X, X]`` with the
same three-point stencil as the time stepper and exponential tail matching at
both ends. The unknown is stored as ``z = 1 - U`` left of the origin and
``z = U`` right of it, so that both tails keep full relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import InvalidParameter, NoConvergence, WrongRegime
from .solver import PlateauBump, Problem, SampledDatum, Trajectory, integrate
from .waves import cached_bistable_front, kpp_min_speed

__all__ = [
    "decay_rates",
    "StationaryProfile",
    "solve_blocking_profile",
    "ProbeReport",
    "uniqueness_probe",
    "semi_persistence_check",
]


def decay_rates(field, c: float) -> tuple[float, float]:
    """Tail rates ``(eta, zeta)`` of the blocking profile.

    ``1 - U ~ exp(eta x)`` as ``x -> -inf`` and ``U ~ exp(-zeta x)`` as ``x -> +inf``.
    """
    d1 = float(field.left.deriv(1.0))
    d0 = float(field.right.deriv(0.0))
    eta = 0.5 * (-c + math.sqrt(c * c - 4.0 * d1))
    zeta = 0.5 * (c + math.sqrt(c * c - 4.0 * d0))
    return eta, zeta


@dataclass
class StationaryProfile:
    """Discrete blocking profile on ``x = -X + i dx``.

    Attributes
    ----------
    x, values : ndarray
        Nodes and ``U`` at the nodes.
    split : ndarray
        ``1 - U`` at nodes ``x < 0`` and ``U`` at nodes ``x >= 0``, at full precision.
    c : float
    residual : ndarray
        Discrete residual ``U'' + c U' + f(x, U)`` at every node (boundary
        nodes use the tail-matching ghost values).
    eta, zeta : float
        Tail rates used in the boundary closure.
    iterations : int
        Newton plus pseudo-transient iterations used.
    """

    x: np.ndarray
    values: np.ndarray
    split: np.ndarray
    c: float
    residual: np.ndarray
    eta: float
    zeta: float
    iterations: int = 0

    @property
    def residual_max(self) -> float:
        return float(np.max(np.abs(self.residual)))

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def __call__(self, x):
        """Interpolate ``U``; outside ``[-X, X]`` the exponential tails are used."""
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.x, self.values)
        lo, hi = self.x[0], self.x[-1]
        left = x < lo
        right = x > hi
        out = np.where(left, 1.0 - self.split[0] * np.exp(self.eta * (x - lo)), out)
        out = np.where(right, self.split[-1] * np.exp(-self.zeta * (x - hi)), out)
        return out

    def is_strictly_decreasing(self) -> bool:
        """Strict decrease, judged on the split variable (``U`` rounds to 1 deep in the left tail)."""
        z = self.split
        left = self.x < 0
        zl, zr = z[left], z[~left]
        cross = zl.size == 0 or zr.size == 0 or self.values[left][-1] > self.values[~left][0]
        return bool(np.all(np.diff(zl) > 0) and np.all(np.diff(zr) < 0) and cross)

    def one_minus(self) -> np.ndarray:
        """``1 - U`` at the nodes, accurate in the left tail."""
        left = self.x < 0
        return np.where(left, self.split, 1.0 - self.values)

    def datum(self) -> SampledDatum:
        return SampledDatum(self.__call__)


class _BlockingSystem:
    """Residual and tridiagonal Jacobian of the split-variable discretization."""

    def __init__(self, field, c: float, x: np.ndarray, eta: float, zeta: float):
        self.field, self.c, self.x = field, c, x
        self.dx = float(x[1] - x[0])
        self.left = x < 0
        self.sigma = np.where(self.left, -1.0, 1.0)  # dU/dz
        self.eta, self.zeta = eta, zeta
        h = self.dx
        self.p = 1.0 / h**2 + c / (2.0 * h)
        self.m = -1.0 / h**2 + c / (2.0 * h)

    def state(self, z):
        return np.where(self.left, 1.0 - z, z)

    def reaction(self, z):
        out = np.empty_like(z)
        lm = self.left
        out[lm] = self.field.eval_below_one(self.x[lm], z[lm])
        out[~lm] = self.field.eval(self.x[~lm], z[~lm])
        return out

    def differences(self, z):
        """Forward differences ``D_i = U_{i+1} - U_i`` including both ghost values."""
        lm = self.left
        D = np.empty(z.size + 1)  # D[j] holds D_{j-1}, j = 0..n
        inner = np.where(lm[:-1] & lm[1:], z[:-1] - z[1:],
                         np.where(~lm[:-1] & ~lm[1:], z[1:] - z[:-1], z[1:] + z[:-1] - 1.0))
        D[1:-1] = inner
        h = self.dx
        D[0] = -D[1] - 2.0 * h * self.eta * z[0]          # U' = -eta (1 - U) at -X
        D[-1] = -D[-2] - 2.0 * h * self.zeta * z[-1]      # U' = -zeta U at X
        return D

    def residual(self, z):
        D = self.differences(z)
        return self.p * D[1:] + self.m * D[:-1] + self.reaction(z)

    def jacobian_bands(self, z):
        """Banded Jacobian of the residual in ``z`` (``solve_banded`` layout)."""
        n = z.size
        s = self.sigma
        h = self.dx
        p, m = self.p, self.m
        U = self.state(z)
        fs = self.field.deriv_s(self.x, U) * s
        # D_i = U_{i+1} - U_i with dU_j/dz_j = s_j
        diag = (m - p) * s + fs
        upper = p * s[1:]
        lower = -m * s[:-1]
        # ghost at -X: F_0 = (p - m) D_0 - 2 h eta m z_0 + f_0
        diag[0] = (m - p) * s[0] - 2.0 * h * self.eta * m + fs[0]
        upper[0] = (p - m) * s[1]
        # ghost at X: F_{n-1} = (m - p) D_{n-2} - 2 h zeta p z_{n-1} + f_{n-1}
        diag[-1] = (m - p) * s[-1] - 2.0 * h * self.zeta * p + fs[-1]
        lower[-1] = (p - m) * s[-2]
        ab = np.zeros((3, n))
        ab[0, 1:] = upper
        ab[1] = diag
        ab[2, :-1] = lower
        return ab


def _initial_guess(x, eta, zeta):
    left = x < 0
    return np.where(left, 0.5 * np.exp(eta * np.minimum(x, 0.0)), 0.5 * np.exp(-zeta * np.maximum(x, 0.0)))


def solve_blocking_profile(problem: Problem, X: float, tol: float = 1e-10, max_iter: int = 400,
                           check_domain: bool = True) -> StationaryProfile:
    """Solve for the blocking profile on ``[-X, X]`` with the problem's ``dx``.

    Parameters
    ----------
    problem : Problem
        Supplies the field, ``c`` and ``dx``.
    X : float
        Half-length of the domain, rounded to a multiple of ``dx``; must be at
        least ``40 / min(eta, zeta)``.
    tol : float
        Target for the largest absolute residual.

    Raises
    ------
    WrongRegime
        Unless ``max(c_b, -c_m) < c < c_m``.
    InvalidParameter
        If ``X`` is too short.
    NoConvergence
        If neither damped Newton nor pseudo-transient continuation reaches ``tol``.
    """
    fld, c = problem.field, float(problem.c)
    c_m = kpp_min_speed(fld.left)
    c_b = cached_bistable_front(fld.right).speed
    if not (max(c_b, -c_m) < c < c_m):
        raise WrongRegime(f"blocking needs max(c_b, -c_m) < c < c_m (c={c}, c_b={c_b:.6g}, c_m={c_m:.6g})")
    eta, zeta = decay_rates(fld, c)
    if check_domain and X < 40.0 / min(eta, zeta):
        raise InvalidParameter(f"X={X} is shorter than 40/min(eta, zeta) = {40.0 / min(eta, zeta):.4g}")
    dx = problem.dx
    nh = int(math.ceil(X / dx - 1e-9))
    x = dx * np.arange(-nh, nh + 1)
    sysm = _BlockingSystem(fld, c, x, eta, zeta)
    z = _initial_guess(x, eta, zeta)
    F = sysm.residual(z)
    res = float(np.max(np.abs(F)))
    it = 0
    pseudo_dt = 1.0
    newton_ok = True
    while res > tol and it < max_iter:
        it += 1
        ab = sysm.jacobian_bands(z)
        if newton_ok:
            step = solve_banded((1, 1), ab, -F)
            lam = 1.0
            accepted = False
            for _ in range(40):
                z_new = z + lam * step
                if np.all(z_new > 0):
                    F_new = sysm.residual(z_new)
                    r_new = float(np.max(np.abs(F_new)))
                    if r_new < res:
                        accepted = True
                        break
                lam *= 0.5
            if accepted:
                z, F, res = z_new, F_new, r_new
                continue
            newton_ok = False
        # pseudo-transient continuation on U_t = F, i.e. (s / dtau - J) dz = F
        ab_pt = ab.copy()
        ab_pt[1] -= sysm.sigma / pseudo_dt
        step = solve_banded((1, 1), -ab_pt, F)
        z_new = z + step
        if np.all(z_new > 0) and np.all(np.isfinite(z_new)):
            F_new = sysm.residual(z_new)
            r_new = float(np.max(np.abs(F_new)))
            pseudo_dt = min(pseudo_dt * max(min(res / max(r_new, 1e-300), 4.0), 0.5), 1e12)
            z, F, res = z_new, F_new, r_new
            if pseudo_dt >= 1e6:
                newton_ok = True
        else:
            pseudo_dt *= 0.25
            if pseudo_dt < 1e-10:
                break
    if not res <= tol:
        raise NoConvergence(f"blocking profile residual {res:.3e} > {tol:.1e} after {it} iterations")
    return StationaryProfile(x, sysm.state(z), z, c, F, eta, zeta, it)


# ---------------------------------------------------------------------------
# long-time probes
# ---------------------------------------------------------------------------
@dataclass
class ProbeReport:
    """Outcome of :func:`uniqueness_probe`.

    Attributes
    ----------
    regime : {'blocking', 'invasion'}
        ``blocking`` when ``max(c_b, -c_m) < c < c_m``; ``invasion`` when
        ``-c_m < c <= c_b`` (the only positive stationary state is 1).
    labels : list of str
        Name of each initial datum.
    limits : list of ndarray
        Final states restricted to the probe window.
    settled : list of bool
    clusters : list of list of int
        Indices of nontrivial limits grouped at sup-distance ``cluster_tol``.
    trivial : list of int
        Indices of runs whose limit vanished on the window (excluded).
    reference_distance : list of float
        Distance of each limit to ``U`` (blocking) or to 1 (invasion).
    window : (float, float)
    """

    regime: str
    labels: list
    limits: list
    settled: list
    clusters: list
    trivial: list
    reference_distance: list
    window: tuple
    x: np.ndarray
    times: list = field(default_factory=list)

    @property
    def inconclusive(self) -> bool:
        return not all(self.settled)

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)


def _regime(problem: Problem) -> tuple[str, float, float]:
    fld, c = problem.field, problem.c
    c_m = kpp_min_speed(fld.left)
    c_b = cached_bistable_front(fld.right).speed
    if max(c_b, -c_m) < c < c_m:
        return "blocking", c_b, c_m
    if -c_m < c <= c_b:
        return "invasion", c_b, c_m
    raise WrongRegime(f"probe needs -c_m < c < c_m (c={c}, c_b={c_b:.6g}, c_m={c_m:.6g})")


def _probe_data(problem: Problem, n_inits: int, regime: str):
    from .barriers import bump_admissible, static_blocking_supersolution

    fld, c, L = problem.field, problem.c, problem.field.L
    r = float(fld.left.deriv(0.0))
    eps = 0.5 * (r - 0.25 * c * c)
    bump = bump_admissible(c, fld.left, eps)
    data = [("bump", bump.datum(center=-L - bump.R - 1.0))]
    if regime == "blocking":
        sup = static_blocking_supersolution(fld.right, 0.05, c, L=L)
        data.append(("static_supersolution", sup.datum()))
    else:
        data.append(("unit_plateau", PlateauBump(1.0, 60.0, center=-L - 35.0)))
    extra = n_inits - 2
    for i in range(extra):
        height = 0.3 + 0.6 * (i + 1) / (extra + 1)
        data.append((f"plateau_{height:.2f}", PlateauBump(height, 20.0, center=-L - 15.0 - 5.0 * i)))
    return data


def uniqueness_probe(problem: Problem, n_inits: int = 3, T_max: float = 800.0,
                     window: tuple[float, float] = (-20.0, 20.0), settle_tol: float = 1e-6,
                     settle_lag: float = 10.0, cluster_tol: float = 1e-3,
                     profile: Optional[StationaryProfile] = None,
                     extra_data: Sequence = ()) -> ProbeReport:
    """Run several ordered initial data to their long-time limits and cluster them.

    The run is stopped once ``max |u(t) - u(t - settle_lag)| <= settle_tol``
    on ``window``; the problem's grid is kept fixed. Limits that vanish on
    the window (``max < cluster_tol``) are reported as trivial and excluded.
    ``extra_data`` holds further ``(label, datum)`` pairs run after the
    built-in ordered family.

    Raises
    ------
    InvalidParameter
        If ``n_inits < 3``.
    WrongRegime
        Outside ``-c_m < c < c_m``.
    """
    if n_inits < 3:
        raise InvalidParameter("the probe needs at least three initial data")
    regime, c_b, c_m = _regime(problem)
    prob = replace(problem, grow="fixed")
    x_all = prob.grid()
    sel = (x_all >= window[0] - 1e-9) & (x_all <= window[1] + 1e-9)
    if not np.any(sel):
        raise InvalidParameter("probe window does not meet the grid")
    xw = x_all[sel]
    data = _probe_data(prob, n_inits, regime) + list(extra_data)
    if regime == "blocking" and profile is None:
        X = 40.0 / min(decay_rates(prob.field, prob.c)) + 10.0
        profile = solve_blocking_profile(prob, X)
    labels, limits, settled, times = [], [], [], []
    for label, u0 in data:
        history: list = []

        def stop(t, x, u, history=history):
            w = u[sel].copy()
            history.append((t, w))
            while history and history[0][0] < t - settle_lag - 1e-9:
                history.pop(0)
            if len(history) > 1 and t - history[0][0] >= settle_lag - 1e-9:
                if float(np.max(np.abs(w - history[0][1]))) <= settle_tol:
                    return "settled"
            return None

        traj = integrate(prob, u0, T_max, snapshot_every=max(T_max / 20.0, 1.0), track=(),
                         stop=stop, stop_every=1.0)
        labels.append(label)
        limits.append(traj.snapshots[-1][sel].copy())
        settled.append(traj.stop_reason == "settled")
        times.append(float(traj.times[-1]))
    trivial = [i for i, w in enumerate(limits) if float(np.max(w)) < cluster_tol]
    clusters: list = []
    for i, w in enumerate(limits):
        if i in trivial:
            continue
        for cl in clusters:
            if float(np.max(np.abs(w - limits[cl[0]]))) <= cluster_tol:
                cl.append(i)
                break
        else:
            clusters.append([i])
    if regime == "blocking":
        ref = profile(xw)
        dist = [float(np.max(np.abs(w - ref))) for w in limits]
    else:
        dist = [float(np.max(np.abs(w - 1.0))) for w in limits]
    return ProbeReport(regime, labels, limits, settled, clusters, trivial, dist, tuple(window), xw, times)


def semi_persistence_check(traj: Trajectory, x_bar: float, depth: float = 50.0,
                           floor: float = 1e-3, rel_slack: float = 0.01) -> bool:
    """Whether ``u`` stays bounded away from zero left of ``x_bar``.

    The minimum ``m(t)`` of ``u(t, .)`` over ``[x_bar - depth, x_bar]`` must
    exceed ``floor`` at the final time and must not fall by more than the
    fraction ``rel_slack`` between ``3T/4`` and ``T``. The relative slack
    admits solutions that settle onto their limit from above.
    """
    T = traj.T
    if T <= 0:
        return False

    def window_min(j):
        x = traj.grid(j)
        u = traj.snapshots[j]
        m = (x >= x_bar - depth) & (x <= x_bar)
        if not np.any(m):
            raise InvalidParameter(f"window [{x_bar - depth}, {x_bar}] misses the grid")
        return float(np.min(u[m]))

    j_end = traj.snapshots.__len__() - 1
    j_q = traj.snapshot_index(0.75 * T)
    m_end, m_q = window_min(j_end), window_min(j_q)
    return bool(m_end > floor and m_end >= (1.0 - rel_slack) * m_q)
