"""Traveling fronts of the homogeneous problems ``phi'' + nu phi' + f(phi) = 0``.

Bistable fronts are computed by two-sided phase-plane shooting: one branch
leaves the saddle at the upper zero along its unstable manifold, the other
arrives at the saddle ``0`` along its stable manifold (integrated backwards).
The speed is the root of the slope mismatch of the two branches at
``phi = theta``, found with Brent's method.

KPP fronts are computed at a prescribed speed from the saddle at 1, in the
logarithmic variables ``(log phi, phi'/phi)`` so that the exponential tail is
resolved far below double precision underflow of ``1 - phi``.

Profiles are stored on a uniform abscissa together with their slopes and
evaluated by cubic Hermite interpolation; outside the stored window they are
continued by their exact exponential tails.
"""

from __future__ import annotations

import logging
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import InvalidParameter, NoConnection, SubcriticalSpeed, WrongClass
from .reactions import Reaction

log = logging.getLogger(__name__)

__all__ = [
    "WaveProfile",
    "kpp_min_speed",
    "kpp_decay_rate",
    "bistable_decay_rates",
    "bistable_front",
    "kpp_front",
    "speed_ordering_check",
    "tail_log_slope",
    "cached_bistable_front",
    "pair_is_monotone",
]

_SEED = 1e-10  # initial distance from the saddle on the invariant manifolds
_STALL = 1e-8  # once off the saddle, slopes above -_STALL count as a failed branch
_COARSE_RTOL = 1e-7  # integration tolerance while bracketing the speed


@dataclass(frozen=True)
class WaveProfile:
    """A monotone traveling front ``phi`` with speed ``speed``.

    Attributes
    ----------
    speed : float
        Wave speed ``nu`` in ``phi'' + nu phi' + f(phi) = 0``.
    abscissa : ndarray
        Uniform sample points.
    values, slopes : ndarray
        ``phi`` and ``phi'`` at the sample points.
    decay_plus : float
        Exponential rate of ``phi`` at ``+inf``.
    decay_minus : float
        Exponential rate of ``upper - phi`` at ``-inf``.
    normalization : {'phi_at_zero_equals_theta', 'level_half_at_zero'}
    reaction : Reaction
    critical : bool
        True for the KPP front at the minimal speed, whose tail is
        ``(A s + B) exp(-decay_plus s)``.
    tail_plus, tail_minus : tuple of float
        Fitted tail constants. ``tail_plus`` is ``(A, B)`` with the tail model
        ``(A s + B) exp(-decay_plus s)`` (``A = 0`` except at the critical
        speed); ``tail_minus`` is ``(A,)`` for ``upper - phi ~ A exp(decay_minus s)``.
    residual : ndarray
        Second-order finite-difference ODE residual at interior nodes.
    """

    speed: float
    abscissa: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    decay_plus: float
    decay_minus: float
    normalization: str
    reaction: Reaction
    critical: bool = False
    tail_plus: tuple = (0.0, 1.0)
    tail_minus: tuple = (1.0,)
    residual: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    _spline: CubicHermiteSpline = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._spline is None:
            object.__setattr__(self, "_spline", CubicHermiteSpline(self.abscissa, self.values, self.slopes))

    @property
    def upper(self) -> float:
        return self.reaction.upper

    @property
    def step(self) -> float:
        return float(self.abscissa[1] - self.abscissa[0])

    @property
    def residual_max(self) -> float:
        return float(np.max(np.abs(self.residual))) if self.residual.size else 0.0

    def _pieces(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.abscissa[0], self.abscissa[-1]
        return s, s < lo, s > hi, lo, hi

    def __call__(self, s):
        """Evaluate ``phi(s)``."""
        s, left, right, lo, hi = self._pieces(s)
        out = self._spline(np.clip(s, lo, hi))
        if np.any(left):
            gap = self.upper - self.values[0]
            out = np.where(left, self.upper - gap * np.exp(self.decay_minus * (np.minimum(s, lo) - lo)), out)
        if np.any(right):
            out = np.where(right, self._right_tail(np.maximum(s, hi))[0], out)
        return out[()] if out.ndim == 0 else out

    def derivative(self, s):
        """Evaluate ``phi'(s)``."""
        s, left, right, lo, hi = self._pieces(s)
        out = self._spline(np.clip(s, lo, hi), 1)
        if np.any(left):
            gap = self.upper - self.values[0]
            out = np.where(left, -gap * self.decay_minus
                           * np.exp(self.decay_minus * (np.minimum(s, lo) - lo)), out)
        if np.any(right):
            out = np.where(right, self._right_tail(np.maximum(s, hi))[1], out)
        return out[()] if out.ndim == 0 else out

    def second_derivative(self, s):
        """``phi''`` taken from the profile equation, ``-nu phi' - f(phi)``."""
        return -self.speed * self.derivative(s) - self.reaction.eval(self(s))

    def _right_tail(self, s):
        lam = self.decay_plus
        hi = self.abscissa[-1]
        if self.critical:
            a, b = self.tail_plus
            # anchor the fitted shape to the last stored value for continuity
            scale = self.values[-1] / ((a * hi + b) * np.exp(-lam * hi))
            poly = scale * (a * s + b)
            e = np.exp(-lam * s)
            return poly * e, (scale * a - lam * poly) * e
        v = self.values[-1] * np.exp(-lam * (s - hi))
        return v, -lam * v

    def level_position(self, level: float) -> float:
        """Abscissa where ``phi`` equals ``level`` (inside the stored window)."""
        if not (self.values[-1] < level < self.values[0]):
            raise InvalidParameter(f"level {level} outside the stored range of the profile")
        i = int(np.searchsorted(-self.values, -level))
        return float(brentq(lambda z: float(self(z)) - level, self.abscissa[i - 1], self.abscissa[i],
                            xtol=1e-14, rtol=1e-14))


# ---------------------------------------------------------------------------
# closed-form rates
# ---------------------------------------------------------------------------
def kpp_min_speed(fm: Reaction) -> float:
    """Minimal KPP speed ``2 sqrt(f'(0))``."""
    if fm.kind != "kpp":
        raise WrongClass(f"minimal speed is defined for KPP reactions, got {fm.kind}")
    return 2.0 * float(np.sqrt(fm.deriv(0.0)))


def kpp_decay_rate(fm: Reaction, nu: float) -> float:
    """Decay rate at ``+inf`` of the KPP front of speed ``nu``.

    Returns ``(nu - sqrt(nu^2 - 4 f'(0))) / 2``, which equals half the minimal
    speed at ``nu = c_m``.
    """
    c_m = kpp_min_speed(fm)
    if nu < c_m - 1e-12:
        raise SubcriticalSpeed(f"nu={nu} is below the minimal speed {c_m}")
    disc = max(nu * nu - 4.0 * float(fm.deriv(0.0)), 0.0)
    return 0.5 * (nu - np.sqrt(disc))


def bistable_decay_rates(fb: Reaction, nu: float) -> tuple[float, float]:
    """Return ``(alpha, beta)``: tail rates at ``+inf`` and ``-inf`` for speed ``nu``."""
    d0, d1 = float(fb.deriv(0.0)), float(fb.deriv(fb.upper))
    alpha = 0.5 * (nu + np.sqrt(nu * nu - 4.0 * d0))
    beta = 0.5 * (-nu + np.sqrt(nu * nu - 4.0 * d1))
    return float(alpha), float(beta)


# ---------------------------------------------------------------------------
# shooting
# ---------------------------------------------------------------------------
def _top_branch(fb: Reaction, nu: float, rtol: float, span: float, dense: bool = False):
    """Integrate down from the upper saddle in ``w = upper - phi`` until ``phi = theta``."""
    _, beta = bistable_decay_rates(fb, nu)
    target = fb.upper - fb.theta

    def rhs(_s, y):
        w, p = y
        return (-p, -nu * p - fb.eval_below_top(w))

    def hit(_s, y):
        return y[0] - target
    hit.terminal, hit.direction = True, 1

    def turn(_s, y):  # slope vanishes, or stalls near the node at theta
        return y[1] + _STALL if y[0] > 1e-3 else -1.0
    turn.terminal, turn.direction = True, 1

    sol = solve_ivp(rhs, (0.0, span), [_SEED, -beta * _SEED], method="DOP853", rtol=rtol,
                    atol=rtol * _SEED * 1e-3, events=(hit, turn), dense_output=dense,
                    max_step=span / 200.0)
    ok = sol.status == 1 and sol.t_events[0].size > 0
    slope = float(sol.y_events[0][0][1]) if ok else 0.0
    return ok, slope, sol


def _bottom_branch(fb: Reaction, nu: float, rtol: float, span: float, dense: bool = False):
    """Integrate backwards from the lower saddle until ``phi = theta``.

    The independent variable is ``t = -s``.
    """
    alpha, _ = bistable_decay_rates(fb, nu)
    target = fb.theta

    def rhs(_t, y):
        phi, p = y
        return (-p, nu * p + fb.eval(phi))

    def hit(_t, y):
        return y[0] - target
    hit.terminal, hit.direction = True, 1

    def turn(_t, y):
        return y[1] + _STALL if y[0] > 1e-3 else -1.0
    turn.terminal, turn.direction = True, 1

    sol = solve_ivp(rhs, (0.0, span), [_SEED, -alpha * _SEED], method="DOP853", rtol=rtol,
                    atol=rtol * _SEED * 1e-3, events=(hit, turn), dense_output=dense,
                    max_step=span / 200.0)
    ok = sol.status == 1 and sol.t_events[0].size > 0
    slope = float(sol.y_events[0][0][1]) if ok else 0.0
    return ok, slope, sol


def _uniform_grid(lo: float, hi: float, ds: float) -> np.ndarray:
    i0, i1 = int(np.ceil(lo / ds)), int(np.floor(hi / ds))
    return ds * np.arange(i0, i1 + 1)


def _fd_residual(s, phi, nu, f: Reaction):
    ds = s[1] - s[0]
    d2 = (phi[2:] - 2.0 * phi[1:-1] + phi[:-2]) / ds**2
    d1 = (phi[2:] - phi[:-2]) / (2.0 * ds)
    return d2 + nu * d1 + f.eval(phi[1:-1])


def _secant(g, a: float, b: float, xtol: float, maxiter: int = 8, jump: float = np.inf,
            ga: Optional[float] = None):
    """Secant iteration for a nearly linear ``g``; ``None`` if it does not settle.

    Stops once successive iterates agree to ``xtol`` (relative above 1) and
    gives up when a step exceeds ``jump``. ``ga`` may supply a known ``g(a)``.
    """
    ga = g(a) if ga is None else ga
    gb = g(b)
    for _ in range(maxiter):
        if gb == 0.0:
            return float(b)
        if gb == ga:
            return None
        c = b - gb * (b - a) / (gb - ga)
        if not np.isfinite(c) or abs(c - b) > jump:
            return None
        a, ga, b = b, gb, c
        gb = g(b)
        if gb == 0.0 or abs(b - a) <= xtol * max(1.0, abs(b)):
            return float(b)
    return None


def _coarse_root(g, step: float, xtol: float = 1e-5) -> float:
    """Approximate root of the (nearly linear) slope mismatch ``g``.

    Secant steps from ``0`` and ``+-step``; if they fail to converge the
    function falls back to marching outward in steps of ``step`` and
    bisecting the first sign change.
    """
    g0 = g(0.0)
    if g0 == 0.0:
        return 0.0
    root = _secant(g, 0.0, step if g0 < 0 else -step, xtol, jump=50.0 * step, ga=g0)
    if root is not None:
        return root
    direction = -1.0 if g0 > 0 else 1.0
    g_prev, nu_prev = g0, 0.0
    for i in range(1, 200):
        nu_i = direction * i * step
        g_i = g(nu_i)
        if g_i * g_prev <= 0:
            lo, hi = sorted((nu_prev, nu_i))
            return float(brentq(g, lo, hi, xtol=xtol, maxiter=200))
        g_prev, nu_prev = g_i, nu_i
    raise NoConnection("no sign change of the slope mismatch was found")


def bistable_front(fb: Reaction, tol: float = 1e-10, ds: Optional[float] = None) -> WaveProfile:
    """Speed and profile of the bistable traveling front.

    Parameters
    ----------
    fb : Reaction
        A bistable (or modified bistable) reaction.
    tol : float
        Target accuracy of the speed; also sets the integration tolerance.
    ds : float, optional
        Spacing of the stored abscissa (default scales with the front width).

    Returns
    -------
    WaveProfile
        Normalized so that ``phi(0) = theta``.

    Raises
    ------
    NoConnection
        If the slope mismatch cannot be bracketed.
    """
    if not fb.is_bistable:
        raise WrongClass(f"bistable front requested for a {fb.kind} reaction")
    if not (1e-12 < tol < 1e-4):
        raise InvalidParameter("tol must lie in (1e-12, 1e-4)")
    rtol = tol
    s_grid = np.linspace(0.0, fb.upper, 401)
    rate = float(np.max(np.abs(fb.deriv(s_grid))))
    span = 400.0 / np.sqrt(rate)

    def mismatch(nu, rt=rtol):
        top = _top_branch(fb, nu, rt, span)[1]
        bot = _bottom_branch(fb, nu, rt, span)[1]
        return top - bot

    def coarse(nu):
        return mismatch(nu, _COARSE_RTOL)

    step = 0.1 * np.sqrt(rate)
    nu0 = _coarse_root(coarse, step)
    xtol = min(tol, 1e-12) * 1e-2
    # polish at full accuracy; the mismatch is close to linear near its root
    h = 1e-6 * max(1.0, step)
    nu = _secant(mismatch, nu0, nu0 + h, xtol, jump=1e3 * h)
    if nu is None:
        # re-bracket around the coarse root, widening if needed
        while True:
            a, b = nu0 - h, nu0 + h
            if mismatch(a) * mismatch(b) <= 0:
                break
            if h > 100.0 * step:
                raise NoConnection("the slope mismatch changes sign only at the coarse tolerance")
            h *= 10.0
        nu = float(brentq(mismatch, a, b, xtol=xtol, rtol=1e-15, maxiter=200))

    ok_t, slope_t, top = _top_branch(fb, nu, rtol, span, dense=True)
    ok_b, slope_b, bot = _bottom_branch(fb, nu, rtol, span, dense=True)
    if not (ok_t and ok_b):
        raise NoConnection("shooting branches do not reach theta at the computed speed")
    s_top, s_bot = float(top.t_events[0][0]), float(bot.t_events[0][0])
    alpha, beta = bistable_decay_rates(fb, nu)
    if ds is None:
        ds = 0.01 / max(alpha, beta)
    s = _uniform_grid(-s_top, s_bot, ds)
    neg, pos = s < 0, s >= 0
    values = np.empty_like(s)
    slopes = np.empty_like(s)
    wt = top.sol(s[neg] + s_top)
    values[neg], slopes[neg] = fb.upper - wt[0], wt[1]
    yb = bot.sol(s_bot - s[pos])
    values[pos], slopes[pos] = yb[0], yb[1]
    # both branches pass through theta at 0; average the tiny slope mismatch
    if s[pos][0] == 0.0:
        slopes[pos.argmax()] = 0.5 * (slope_t + slope_b)
    if np.any(np.diff(values) >= 0):
        raise NoConnection("computed profile is not strictly decreasing")
    tail_r = s > s[-1] - 5.0 / alpha
    a_plus = float(np.median(values[tail_r] * np.exp(alpha * s[tail_r])))
    tail_l = s < s[0] + 5.0 / beta
    a_minus = float(np.median((fb.upper - values[tail_l]) * np.exp(-beta * s[tail_l])))
    resid = _fd_residual(s, values, nu, fb)
    return WaveProfile(nu, s, values, slopes, alpha, beta, "phi_at_zero_equals_theta", fb,
                       critical=False, tail_plus=(0.0, a_plus), tail_minus=(a_minus,), residual=resid)


def kpp_front(fm: Reaction, nu: float, tol: float = 1e-10, ds: float = 0.01,
              depth: float = 60.0) -> WaveProfile:
    """KPP traveling front of speed ``nu >= c_m``, normalized by ``phi(0) = 1/2``.

    Parameters
    ----------
    fm : Reaction
        KPP reaction.
    nu : float
        Front speed.
    tol : float
        Relative integration tolerance.
    ds : float
        Spacing of the stored abscissa.
    depth : float
        The stored window extends until ``phi = exp(-depth)``.
    """
    lam = kpp_decay_rate(fm, nu)  # raises SubcriticalSpeed
    r = float(fm.deriv(0.0))
    beta = 0.5 * (-nu + np.sqrt(nu * nu + 4.0 * r))
    rtol = min(max(tol, 1e-13), 1e-8)

    def rhs(_s, y):
        logphi, q = y
        comp = -np.expm1(logphi)
        return (q, -nu * q - fm.per_capita(np.exp(logphi), comp) - q * q)

    def bottom(_s, y):
        return y[0] + depth
    bottom.terminal = True

    y0 = [np.log1p(-_SEED), -beta * _SEED / (1.0 - _SEED)]
    span = 50.0 * depth / max(lam, 1e-3)
    sol = solve_ivp(rhs, (0.0, span), y0, method="DOP853", rtol=rtol, atol=rtol * 1e-12,
                    events=bottom, dense_output=True)
    if sol.status != 1:
        raise NoConnection("KPP shooting did not reach the requested depth")
    s_end = float(sol.t_events[0][0])
    s_half = float(brentq(lambda z: sol.sol(z)[0] - np.log(0.5), 0.0, s_end, xtol=1e-14))
    s = _uniform_grid(-s_half, s_end - s_half, ds)
    y = sol.sol(s + s_half)
    values = np.exp(y[0])
    slopes = values * y[1]
    critical = abs(nu - kpp_min_speed(fm)) <= 1e-12
    tail = s > s[-1] - 0.3 * (s[-1] - s[0])
    if critical:
        a, b = np.polyfit(s[tail], values[tail] * np.exp(lam * s[tail]), 1)
        tail_plus = (float(a), float(b))
    else:
        tail_plus = (0.0, float(np.median(values[tail] * np.exp(lam * s[tail]))))
    head = s < s[0] + 5.0 / beta
    a_minus = float(np.median((1.0 - values[head]) * np.exp(-beta * s[head])))
    resid = _fd_residual(s, values, nu, fm)
    return WaveProfile(float(nu), s, values, slopes, float(lam), float(beta), "level_half_at_zero", fm,
                       critical=critical, tail_plus=tail_plus, tail_minus=(a_minus,), residual=resid)


def tail_log_slope(profile: WaveProfile, s_a: float, s_b: float, side: str = "plus") -> float:
    """Least-squares slope of ``log phi`` (``plus``) or ``log(upper - phi)`` (``minus``) on ``[s_a, s_b]``."""
    s = np.linspace(s_a, s_b, 201)
    phi = profile(s)
    y = np.log(phi) if side == "plus" else np.log(profile.upper - phi)
    return float(np.polyfit(s, y, 1)[0])


def speed_ordering_check(fm: Reaction, fb: Reaction) -> bool:
    """True iff the KPP minimal speed exceeds the bistable front speed.

    A warning is logged when the pair does not satisfy ``f_m >= f_b`` on
    ``[0, 1]``, i.e. when its blend would not be decreasing in space.
    """
    c_m = kpp_min_speed(fm)
    c_b = cached_bistable_front(fb).speed
    u = np.linspace(0.0, 1.0, 1001)
    if np.any(fm.eval(u) < fb.eval(u) - 1e-14):
        log.warning("pair %s / %s violates f_m >= f_b on [0,1]; its blend is not monotone in x",
                    fm.describe(), fb.describe())
    return bool(c_m > c_b)


def pair_is_monotone(fm: Reaction, fb: Reaction) -> bool:
    """Whether ``f_m >= f_b`` on ``[0, 1]`` (the blend is then decreasing in space)."""
    u = np.linspace(0.0, 1.0, 1001)
    return bool(np.all(fm.eval(u) >= fb.eval(u) - 1e-14))


@lru_cache(maxsize=64)
def cached_bistable_front(fb: Reaction) -> WaveProfile:
    """Memoized :func:`bistable_front` at default tolerance (reactions are immutable)."""
    return bistable_front(fb)
