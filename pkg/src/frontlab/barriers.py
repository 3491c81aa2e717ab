"""Explicit sub- and supersolutions and pointwise certification of their residuals.

Three families are built here:

* the compactly supported bump ``eta * exp(-c x / 2) cos(pi x / (2R))``, a
  stationary subsolution of the KPP problem;
* shifted-front barriers ``phi(xi(t, x)) +/- (delta e^{-delta tau} + delta e^{-mu (x - X)})``
  with a time-dependent phase correction ``omega e^{-delta tau}``, in a
  rightward and a leftward (mirrored) orientation;
* the static blocking supersolution, flat left of ``L`` and a front of a
  modified bistable reaction to the right.

Residuals ``N w = w_t - w_xx - c w_x - f(w)`` are evaluated from analytic
derivatives of each ansatz; the profile's second derivative comes from its
own equation, so no finite differences enter the certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidParameter, NoAdmissibleBump, WrongRegime
from .reactions import Reaction, build_cubic_bistable, build_kpp, build_modified_bistable
from .solver import SampledDatum
from .waves import WaveProfile, bistable_front, cached_bistable_front, kpp_min_speed

__all__ = [
    "BumpSpec",
    "bump_admissible",
    "FifeMcLeodParams",
    "InequalityCheck",
    "fm_params",
    "check_invariants",
    "barrier_value",
    "ResidualReport",
    "check_barrier_residual",
    "StaticSupersolution",
    "static_blocking_supersolution",
    "BARRIER_CASES",
    "certify_case",
]

SLACK = 0.2
_CORE_MARGIN = 1e-6  # keeps the crossing conditions strict under rounding


# ---------------------------------------------------------------------------
# bump subsolution
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class BumpSpec:
    """Bump ``eta * exp(-c x / 2) cos(pi x / (2R))`` on ``[-R, R]``, zero outside.

    Attributes
    ----------
    R : float
        Half-width; admissible when ``pi / (2R) < sqrt(r - eps - c^2/4)``.
    eta : float
        Largest amplitude certified on the check grid.
    c, eps : float
    reaction : Reaction
        The KPP reaction it is a subsolution for.
    R_min : float
        The admissibility threshold for ``R``.
    """

    R: float
    eta: float
    c: float
    eps: float
    reaction: Reaction
    R_min: float

    @property
    def wavenumber(self) -> float:
        return math.pi / (2.0 * self.R)

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) < self.R
        return np.where(inside, np.exp(-0.5 * self.c * x) * np.cos(self.wavenumber * x), 0.0)

    def psi_d1(self, x):
        x = np.asarray(x, dtype=float)
        k, c = self.wavenumber, self.c
        inside = np.abs(x) < self.R
        val = np.exp(-0.5 * c * x) * (-0.5 * c * np.cos(k * x) - k * np.sin(k * x))
        return np.where(inside, val, 0.0)

    def psi_d2(self, x):
        x = np.asarray(x, dtype=float)
        k, c = self.wavenumber, self.c
        inside = np.abs(x) < self.R
        val = np.exp(-0.5 * c * x) * ((0.25 * c * c - k * k) * np.cos(k * x) + c * k * np.sin(k * x))
        return np.where(inside, val, 0.0)

    def residual(self, x, eta: Optional[float] = None):
        """``-(eta Psi)'' - c (eta Psi)' - f(eta Psi)``; nonpositive for a subsolution."""
        eta = self.eta if eta is None else eta
        w = eta * self.psi(x)
        return -eta * self.psi_d2(x) - self.c * eta * self.psi_d1(x) - self.reaction.eval(w)

    def datum(self, center: float = 0.0, eta: Optional[float] = None) -> SampledDatum:
        """The bump translated to ``center``, usable as an initial datum."""
        eta = self.eta if eta is None else eta
        return SampledDatum(lambda x: eta * self.psi(x - center), (center - self.R, center + self.R))


def bump_admissible(c: float, fm: Reaction, eps: float, n_grid: int = 4001,
                    widen: float = 1.1) -> BumpSpec:
    """Smallest admissible half-width (widened by 10%) and a certified amplitude.

    The amplitude ``eta0`` is the largest value found by bisection for which
    the residual is ``<= 1e-10`` on an interior grid of ``(-R, R)``, reduced
    by 1% so that the certificate survives evaluation on finer grids; every
    ``eta <= eta0`` is then a subsolution as well because ``f(s)/s`` is
    nonincreasing for the logistic term.

    Raises
    ------
    NoAdmissibleBump
        When ``|c| >= c_m`` or the radicand ``f'(0) - eps - c^2/4`` is not positive.
    """
    c_m = kpp_min_speed(fm)
    if not eps > 0:
        raise InvalidParameter("eps must be positive")
    radicand = float(fm.deriv(0.0)) - eps - 0.25 * c * c
    if abs(c) >= c_m or radicand <= 0:
        raise NoAdmissibleBump(f"no admissible bump for c={c}, eps={eps} (radicand {radicand:.4g})")
    R_min = 0.5 * math.pi / math.sqrt(radicand)
    R = widen * R_min
    proto = BumpSpec(R, 1.0, float(c), float(eps), fm, R_min)
    x = np.linspace(-R, R, n_grid)[1:-1]

    def ok(eta):
        return float(np.max(proto.residual(x, eta))) <= 1e-10

    lo, hi = 0.0, 1.0
    if ok(hi):
        lo = hi
    else:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
    if lo <= 0:
        raise NoAdmissibleBump("no positive amplitude passes the residual check")
    return replace(proto, eta=0.99 * lo)


# ---------------------------------------------------------------------------
# shifted-front barriers
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class FifeMcLeodParams:
    """Constants of a shifted-front barrier.

    Attributes
    ----------
    direction : {'rightward', 'leftward'}
    c, c_b : float
        Advection rate and bistable speed.
    mu, delta, C, kappa, omega : float
        Spatial decay, temporal decay/amplitude, core half-width, minimal
        slope on the core, and phase-correction amplitude.
    B : float
        Offset of the rightward barriers (``B > omega``); for the leftward
        barrier this holds the shift ``A > omega + C``.
    max_slope : float
        ``max |f_b'|`` on the state range the barrier visits.
    T0, X0 : float
        Time and space origin of the barrier (``tau = t - T0``, ``x >= X0``).
    A : float
        Shift used by the rightward supersolution (``A >= B``).
    c_m : float, optional
        KPP minimal speed, when it entered the choice of ``mu``.
    center : float
        Translation applied to the profile, ``phi_used(s) = phi(s + center)``,
        placing the midpoint of its two core crossings at the origin.
    """

    direction: str
    c: float
    c_b: float
    mu: float
    delta: float
    C: float
    kappa: float
    omega: float
    B: float
    max_slope: float
    T0: float = 0.0
    X0: float = 6.0
    A: float = 0.0
    c_m: Optional[float] = None
    center: float = 0.0

    @property
    def z(self) -> float:
        """Translation constant of the barrier in its limiting (``tau -> inf``) form."""
        if self.direction == "rightward":
            return -self.X0 - self.omega - self.A - self.C
        return self.X0 - self.omega + self.B


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    lhs: float
    rhs: float
    holds: bool
    relation: str = "<"


def _slope_range(fb: Reaction, a: float, b: float, n: int = 4001) -> np.ndarray:
    return fb.deriv(np.linspace(a, b, n))


def _profile_core(profile: WaveProfile, delta: float) -> tuple[float, float]:
    """Center and half-width ``C`` of the core of the recentered profile.

    After translating by the returned center, ``phi >= 1 - delta/2`` left of
    ``-C`` and ``phi <= delta/2`` right of ``C``.
    """
    s_lo = profile.level_position(1.0 - 0.5 * delta)
    s_hi = profile.level_position(0.5 * delta)
    return 0.5 * (s_lo + s_hi), 0.5 * (s_hi - s_lo) + _CORE_MARGIN


def _min_core_slope(profile: WaveProfile, center: float, C: float, n: int = 20001) -> float:
    s = np.linspace(-C, C, n) + center
    return float(np.min(-profile.derivative(s)))


def _derivative_window_ok(fb: Reaction, delta: float, low: tuple, high: tuple) -> bool:
    d0, d1 = float(fb.deriv(0.0)), float(fb.deriv(1.0))
    a0, b0 = low
    a1, b1 = high
    lo_ok = np.max(_slope_range(fb, a0 * delta, b0 * delta)) <= 0.5 * d0
    hi_ok = np.max(_slope_range(fb, 1.0 + a1 * delta, 1.0 + b1 * delta)) <= 0.5 * d1
    return bool(lo_ok and hi_ok)


def _largest_delta(fb: Reaction, cap: float, low: tuple, high: tuple) -> float:
    lo, hi = 0.0, cap
    if _derivative_window_ok(fb, hi, low, high):
        return hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _derivative_window_ok(fb, mid, low, high):
            lo = mid
        else:
            hi = mid
    return lo


_WINDOWS = {
    # (low interval in units of delta, high interval offsets from 1 in units of delta, slope range)
    "rightward": ((-2.0, 3.0), (-3.0, 2.0), (-2.0, 2.0)),
    "leftward": ((0.0, 3.0), (-1.0, 2.0), (0.0, 2.0)),
}


def fm_params(fb_profile: WaveProfile, c: float, direction: str = "rightward",
              c_m: Optional[float] = None, T0: float = 0.0, X0: Optional[float] = None,
              L: float = 5.0) -> FifeMcLeodParams:
    """Choose barrier constants satisfying every recipe inequality with 20% slack.

    Parameters
    ----------
    fb_profile : WaveProfile
        Bistable front (normalized ``phi(0) = theta``).
    c : float
        Advection rate.
    direction : {'rightward', 'leftward'}
        ``rightward`` needs ``c < c_b``; ``leftward`` needs ``c <= -c_m`` and
        ``c + c_b < 0``.
    c_m : float, optional
        KPP minimal speed; required for ``leftward`` and, when given, also
        bounds ``mu`` for ``rightward``.
    T0, X0 : float
        Barrier origin (``X0`` defaults to ``L + 1``).

    Raises
    ------
    WrongRegime
    """
    fb = fb_profile.reaction
    c_b = fb_profile.speed
    d0, d1 = abs(float(fb.deriv(0.0))), abs(float(fb.deriv(1.0)))
    m0 = min(d0, d1)
    keep = 1.0 - SLACK
    X0 = L + 1.0 if X0 is None else X0
    low, high, srange = _WINDOWS.get(direction, (None, None, None))
    if low is None:
        raise InvalidParameter(f"direction must be 'rightward' or 'leftward', got {direction!r}")
    mu_cap = 0.5 * (c + math.sqrt(c * c + 2.0 * m0))
    if direction == "rightward":
        if not c < c_b:
            raise WrongRegime(f"rightward barriers need c < c_b (c={c}, c_b={c_b})")
        if c_m is not None:
            mu_cap = min(mu_cap, float(np.max(np.abs(_slope_range(fb, 0.0, 1.0)))) / c_m)
        mu = keep * mu_cap
        delta_cap = min(mu * (c_b - c), 0.5, d0 / 2.0, d1 / 2.0)
    else:
        if c_m is None:
            raise InvalidParameter("leftward barriers need the KPP minimal speed c_m")
        if not (c <= -c_m and c + c_b < 0):
            raise WrongRegime(f"leftward barriers need c <= -c_m and c + c_b < 0 (c={c}, c_m={c_m}, c_b={c_b})")
        mu = keep * mu_cap
        delta_cap = min(-mu * (c_b + c), 0.2, d0 / 2.0, d1 / 2.0)
    delta = keep * _largest_delta(fb, delta_cap, low, high)
    center, C = _profile_core(fb_profile, delta)
    kappa = keep * _min_core_slope(fb_profile, center, C)
    max_slope = float(np.max(np.abs(_slope_range(fb, srange[0] * delta, 1.0 + srange[1] * delta))))
    omega = (2.0 * delta + max_slope) / kappa / keep
    growth = max_slope + mu * mu - c * mu
    tail = max(math.log(growth / delta) / mu, 0.0) / keep
    if direction == "rightward":
        B = omega + tail + 1.0
        A = B
    else:
        B = omega + C + tail + 1.0  # the leftward shift A
        A = B
    return FifeMcLeodParams(direction, float(c), float(c_b), mu, delta, C, kappa, omega, B, max_slope,
                            T0=float(T0), X0=float(X0), A=float(A), c_m=c_m, center=float(center))


def check_invariants(params: FifeMcLeodParams, profile: WaveProfile) -> list[InequalityCheck]:
    """Re-check every recipe inequality from scratch (independent of the construction)."""
    fb = profile.reaction
    p = params
    c, c_b, mu, delta = p.c, p.c_b, p.mu, p.delta
    d0, d1 = float(fb.deriv(0.0)), float(fb.deriv(1.0))
    m0 = min(abs(d0), abs(d1))
    out = []
    if p.direction == "rightward":
        slope_lo, slope_hi = -2.0 * delta, 1.0 + 2.0 * delta
        mslope = float(np.max(np.abs(_slope_range(fb, slope_lo, slope_hi))))
        mu_bound = 0.5 * (c + math.sqrt(c * c + 2.0 * m0))
        if p.c_m is not None:
            mu_bound = min(mu_bound, mslope / p.c_m)
        out.append(InequalityCheck("mu", mu, mu_bound, 0 < mu < mu_bound))
        dmax = min(mu * (c_b - c), 0.5, abs(d0) / 2, abs(d1) / 2)
        out.append(InequalityCheck("delta", delta, dmax, 0 < delta < dmax))
        lo_int, hi_int = (-2.0 * delta, 3.0 * delta), (1.0 - 3.0 * delta, 1.0 + 2.0 * delta)
    else:
        slope_lo, slope_hi = 0.0, 1.0 + 2.0 * delta
        mslope = float(np.max(np.abs(_slope_range(fb, slope_lo, slope_hi))))
        mu_bound = 0.5 * (c + math.sqrt(c * c + 2.0 * m0))
        out.append(InequalityCheck("mu", mu, mu_bound, 0 < mu < mu_bound))
        dmax = min(-mu * (c_b + c), 0.2, abs(d0) / 2, abs(d1) / 2)
        out.append(InequalityCheck("delta", delta, dmax, 0 < delta < dmax))
        lo_int, hi_int = (0.0, 3.0 * delta), (1.0 - delta, 1.0 + 2.0 * delta)
    lo_max = float(np.max(_slope_range(fb, *lo_int)))
    hi_max = float(np.max(_slope_range(fb, *hi_int)))
    out.append(InequalityCheck("slope_near_0", lo_max, d0 / 2, lo_max <= d0 / 2, "<="))
    out.append(InequalityCheck("slope_near_1", hi_max, d1 / 2, hi_max <= d1 / 2, "<="))
    left_val = float(profile(p.center - p.C))
    right_val = float(profile(p.center + p.C))
    out.append(InequalityCheck("core_left", 1.0 - delta / 2, left_val, left_val >= 1.0 - delta / 2, "<="))
    out.append(InequalityCheck("core_right", right_val, delta / 2, right_val <= delta / 2, "<="))
    s = np.linspace(-p.C, p.C, 40001) + p.center
    min_slope = float(np.min(-profile.derivative(s)))
    out.append(InequalityCheck("kappa", p.kappa, min_slope, p.kappa <= min_slope, "<="))
    out.append(InequalityCheck("omega", 2 * delta + mslope, p.kappa * p.omega,
                               p.kappa * p.omega >= 2 * delta + mslope, "<="))
    growth = mslope + mu * mu - c * mu
    if p.direction == "rightward":
        env = growth * math.exp(-mu * (p.B - p.omega))
        out.append(InequalityCheck("B_exceeds_omega", p.omega, p.B, p.B > p.omega))
        out.append(InequalityCheck("envelope", env, delta, env <= delta, "<="))
        out.append(InequalityCheck("A_at_least_B", p.B, p.A, p.A >= p.B, "<="))
    else:
        env = growth * math.exp(-mu * (p.B - p.omega - p.C))
        out.append(InequalityCheck("A_exceeds_omega_plus_C", p.omega + p.C, p.B, p.B > p.omega + p.C))
        out.append(InequalityCheck("envelope", env, delta, env <= delta, "<="))
    return out


def _phase(params: FifeMcLeodParams, kind: str, t, x):
    """Return ``(xi, xi_t, xi_x, e_t, e_x)`` of the barrier ansatz."""
    p = params
    tau = t - p.T0
    e_t = np.exp(-p.delta * tau)
    e_x = np.exp(-p.mu * (x - p.X0))
    if p.direction == "rightward":
        v = p.c_b - p.c
        if kind == "super":
            xi = x - p.X0 - v * tau + p.omega * e_t - p.omega - p.A - p.C
            xi_t = -v - p.omega * p.delta * e_t
        else:
            xi = x - p.X0 - v * tau - p.omega * e_t + p.omega - p.B - p.C
            xi_t = -v + p.omega * p.delta * e_t
        xi_x = np.ones_like(xi)
    else:
        if kind != "super":
            raise InvalidParameter("only the leftward supersolution is defined")
        v = p.c_b + p.c
        xi = -x + p.X0 - v * tau + p.omega * e_t - p.omega + p.B
        xi_t = -v - p.omega * p.delta * e_t
        xi_x = -np.ones_like(xi)
    return xi, xi_t, xi_x, e_t, e_x


def barrier_value(params: FifeMcLeodParams, phi: WaveProfile, t, x, kind: str = "super"):
    """Evaluate the barrier at ``(t, x)`` (broadcasting)."""
    xi, _, _, e_t, e_x = _phase(params, kind, np.asarray(t, float), np.asarray(x, float))
    sign = 1.0 if kind == "super" else -1.0
    return phi(xi + params.center) + sign * params.delta * (e_t + e_x)


@dataclass
class ResidualReport:
    """Sign certificate of a barrier residual on a grid.

    ``cases`` maps ``'left'`` (``xi <= -C``), ``'core'`` (``|xi| < C``) and
    ``'right'`` (``xi >= C``) to ``(worst value, number of points)``, where
    "worst" is the minimum for a supersolution and the maximum for a
    subsolution.
    """

    kind: str
    direction: str
    passed: bool
    worst: float
    worst_point: tuple
    cases: dict
    failing_cases: list
    n_points: int
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "direction": self.direction, "passed": self.passed,
            "worst": self.worst, "worst_point": list(self.worst_point),
            "cases": {k: {"worst": v[0], "points": v[1]} for k, v in self.cases.items()},
            "failing_cases": self.failing_cases, "n_points": self.n_points, "tolerance": self.tolerance,
        }


def check_barrier_residual(params: FifeMcLeodParams, fb: Reaction, phi: WaveProfile, t_grid, x_grid,
                           kind: str = "super", tolerance: float = 1e-10) -> ResidualReport:
    """Evaluate ``N w = w_t - w_xx - c w_x - f_b(w)`` on the tensor grid.

    The residual is assembled from the chain rule applied to the ansatz, with
    ``phi''`` replaced by ``-c_b phi' - f_b(phi)``. The case label of each
    point refers to the phase ``xi`` of the recentered profile. A supersolution passes when
    ``N >= -tolerance`` everywhere, a subsolution when ``N <= tolerance``.
    """
    if kind not in ("super", "sub"):
        raise InvalidParameter(f"kind must be 'super' or 'sub', got {kind!r}")
    t = np.asarray(t_grid, dtype=float)
    x = np.asarray(x_grid, dtype=float)
    T, X = np.meshgrid(t, x, indexing="ij")
    xi, xi_t, xi_x, e_t, e_x = _phase(params, kind, T, X)
    sign = 1.0 if kind == "super" else -1.0
    d = params.delta
    p0 = phi(xi + params.center)
    p1 = phi.derivative(xi + params.center)
    p2 = -phi.speed * p1 - phi.reaction.eval(p0)
    w = p0 + sign * d * (e_t + e_x)
    w_t = p1 * xi_t - sign * d * d * e_t
    w_x = p1 * xi_x - sign * params.mu * d * e_x
    w_xx = p2 * xi_x ** 2 + sign * params.mu ** 2 * d * e_x
    N = w_t - w_xx - params.c * w_x - fb.eval(w)
    bad = -sign * N  # positive where the sign is wrong
    labels = np.where(xi <= -params.C, 0, np.where(xi >= params.C, 2, 1))
    names = ("left", "core", "right")
    cases = {}
    failing = []
    for i, name in enumerate(names):
        m = labels == i
        if np.any(m):
            worst = float(np.max(bad[m]))
            cases[name] = (-sign * worst, int(m.sum()))
            if worst > tolerance:
                failing.append(name)
    idx = np.unravel_index(int(np.argmax(bad)), bad.shape)
    worst_bad = float(bad[idx])
    return ResidualReport(kind, params.direction, worst_bad <= tolerance, -sign * worst_bad,
                          (float(T[idx]), float(X[idx]), float(xi[idx])), cases, failing,
                          int(N.size), tolerance)


# ---------------------------------------------------------------------------
# static blocking supersolution
# ---------------------------------------------------------------------------
@dataclass
class StaticSupersolution:
    """Flat value ``phi_eps(-A)`` left of ``L``, the front ``phi_eps(x - A - L)`` right of it."""

    eps: float
    c: float
    A: float
    L: float
    modified: Reaction
    front: WaveProfile
    c_b: float
    x: np.ndarray
    values: np.ndarray
    residual: np.ndarray
    passed: bool
    flat_level: float

    @property
    def c_b_eps(self) -> float:
        return self.front.speed

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.L, self.flat_level, self.front(x - self.A - self.L))

    def datum(self) -> SampledDatum:
        return SampledDatum(self.__call__)


def static_blocking_supersolution(fb: Reaction, eps: float, c: float, A: Optional[float] = None,
                                  L: float = 5.0, field=None, x_span: float = 200.0,
                                  dx: float = 0.05, tolerance: float = 1e-10) -> StaticSupersolution:
    """Build and certify the stationary blocking supersolution.

    Parameters
    ----------
    fb : Reaction
        Plain cubic bistable reaction.
    eps : float
        Lift of the upper zero of the modified reaction.
    c : float
        Advection rate, must exceed the bistable speed.
    A : float, optional
        Shift; by default the smallest multiple of 0.1 with ``phi_eps(-A) >= 1 + eps/2``.
    field : HeterogeneousField, optional
        When given, the flat piece is checked against the full field.

    Raises
    ------
    WrongRegime
        If ``c <= c_b``, or if the modified speed is not below ``c``.
    BadModification
        If the modified reaction fails validation.
    """
    c_b = cached_bistable_front(fb).speed
    if not c > c_b:
        raise WrongRegime(f"the static supersolution needs c > c_b (c={c}, c_b={c_b})")
    g = build_modified_bistable(fb, eps)
    front = bistable_front(g)
    if not front.speed < c:
        raise WrongRegime(f"modified speed {front.speed} is not below c={c}; decrease eps")
    if A is None:
        target = 1.0 + 0.5 * eps
        A = 0.1 * math.ceil(-front.level_position(target) / 0.1)
    flat = float(front(-A))
    x = np.arange(-x_span, x_span + 0.5 * dx, dx)
    values = np.where(x < L, flat, front(x - A - L))
    s = x - A - L
    p1 = front.derivative(s)
    p0 = front(s)
    p2 = -front.speed * p1 - g.eval(p0)
    res_front = -p2 - c * p1 - fb.eval(p0)
    if field is not None:
        res_flat = -field.eval(x, flat)
    else:
        res_flat = np.full_like(x, -float(fb.eval(flat)))
    residual = np.where(x < L, res_flat, res_front)
    passed = bool(np.min(residual) >= -tolerance and flat >= 1.0)
    return StaticSupersolution(float(eps), float(c), float(A), float(L), g, front, c_b, x, values,
                               residual, passed, flat)


# ---------------------------------------------------------------------------
# named certification cases
# ---------------------------------------------------------------------------
BARRIER_CASES = ("rightward", "leftward", "bump", "static")


def _check_record(chk: InequalityCheck) -> dict:
    margin = chk.rhs - chk.lhs if chk.relation in ("<", "<=") else chk.lhs - chk.rhs
    return {"name": chk.name, "lhs": chk.lhs, "rhs": chk.rhs, "relation": chk.relation,
            "margin": margin, "passed": chk.holds}


def certify_case(name: str, theta: float = 0.3, k: float = 1.0, t_max: float = 200.0,
                 x_span: float = 400.0, spacing: float = 0.25) -> dict:
    """Run one named barrier certification on the reference family.

    Cases are ``rightward`` (``c = 0``, super and sub barriers),
    ``leftward`` (``c = -2``, supersolution), ``bump`` (compact KPP
    subsolution at ``c = 0``) and ``static`` (stationary blocking
    supersolution at ``c = 1``, ``eps = 0.05``).

    Returns
    -------
    dict
        ``{"case", "passed", "checks": [...], ...}``; every check lists its
        worst margin (positive means satisfied) and a pass flag.
    """
    if name not in BARRIER_CASES:
        raise InvalidParameter(f"unknown case {name!r}; choose from {', '.join(BARRIER_CASES)}")
    fb = build_cubic_bistable(k, theta)
    fm = build_kpp(k * (1.0 - theta))
    c_m = kpp_min_speed(fm)
    checks = []
    extra: dict = {}
    if name in ("rightward", "leftward"):
        phi = cached_bistable_front(fb)
        c = 0.0 if name == "rightward" else -2.0
        params = fm_params(phi, c, direction=name, c_m=c_m)
        checks += [_check_record(chk) for chk in check_invariants(params, phi)]
        t_grid = np.arange(0.0, t_max + 0.5 * spacing, spacing)
        x_grid = params.X0 + np.arange(0.0, x_span + 0.5 * spacing, spacing)
        kinds = ("super", "sub") if name == "rightward" else ("super",)
        for kind in kinds:
            rep = check_barrier_residual(params, fb, phi, t_grid, x_grid, kind=kind)
            margin = rep.worst if kind == "super" else -rep.worst
            checks.append({"name": f"residual_{kind}", "margin": margin + rep.tolerance,
                           "passed": rep.passed, "report": rep.to_dict()})
        extra["params"] = {f: getattr(params, f) for f in params.__dataclass_fields__}
    elif name == "bump":
        bump = bump_admissible(0.0, fm, 0.05)
        x = np.linspace(-bump.R, bump.R, 4001)[1:-1]
        worst = float(np.max(bump.residual(x)))
        checks.append({"name": "bump_residual_nonpositive", "margin": -worst, "passed": worst <= 1e-10})
        extra.update(R=bump.R, R_min=bump.R_min, eta=bump.eta)
    else:
        sup = static_blocking_supersolution(fb, 0.05, 1.0, field=None)
        worst = float(np.min(sup.residual))
        checks.append({"name": "static_residual_nonnegative", "margin": worst, "passed": sup.passed})
        gap = sup.c_b_eps - sup.c_b
        checks.append({"name": "modified_speed_gap", "lhs": gap, "rhs": 0.1, "relation": "<",
                       "margin": 0.1 - gap, "passed": 0.0 < gap < 0.1})
        checks.append({"name": "modified_speed_below_c", "lhs": sup.c_b_eps, "rhs": 1.0, "relation": "<",
                       "margin": 1.0 - sup.c_b_eps, "passed": sup.c_b_eps < 1.0})
        extra.update(A=sup.A, flat_level=sup.flat_level, c_b_eps=sup.c_b_eps)
    return {"case": name, "theta": theta, "k": k, "passed": all(ch["passed"] for ch in checks),
            "checks": checks, **extra}
