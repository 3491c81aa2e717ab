"""Reaction terms and their spatial blend.

Three reaction classes are supported:

* ``kpp``: the logistic term ``r u (1 - u)``;
* ``bistable``: the cubic ``k u (1 - u)(u - theta)``;
* ``modified``: a cubic whose upper stable zero is lifted from 1 to ``1 + eps``
  by smoothly blending ``f(u)`` into ``f(u - eps)`` on ``[1 - eps, 1 + eps]``.

A :class:`HeterogeneousField` glues a KPP term (left) and a bistable term
(right) with a quintic smoothstep ramp of half-width ``L``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BadModification, InvalidParameter, WrongClass

__all__ = [
    "Reaction",
    "HeterogeneousField",
    "ValidationEntry",
    "ValidationReport",
    "build_kpp",
    "build_cubic_bistable",
    "build_modified_bistable",
    "build_blend",
    "smoothstep",
    "validate_hypotheses",
    "check_reaction",
]

KINDS = ("kpp", "bistable", "modified")


def smoothstep(t):
    """Quintic smoothstep ``6t^5 - 15t^4 + 10t^3`` clipped to ``[0, 1]``."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def _smoothstep_d1(t):
    inside = (t > 0.0) & (t < 1.0)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 30.0 * t * t * (t - 1.0) ** 2, 0.0)


def _smoothstep_d2(t):
    inside = (t > 0.0) & (t < 1.0)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 60.0 * t * (t - 1.0) * (2.0 * t - 1.0), 0.0)


def _cubic(u, k, theta):
    return k * u * (1.0 - u) * (u - theta)


def _cubic_d1(u, k, theta):
    return k * (-3.0 * u * u + 2.0 * (1.0 + theta) * u - theta)


def _cubic_d2(u, k, theta):
    return k * (-6.0 * u + 2.0 * (1.0 + theta))


@dataclass(frozen=True)
class Reaction:
    """A scalar reaction term ``s -> f(s)`` with derivative evaluation.

    Use the ``build_*`` constructors rather than instantiating directly; they
    validate parameters and the class invariants.

    Attributes
    ----------
    kind : {'kpp', 'bistable', 'modified'}
        Reaction class.
    r : float, optional
        Linear growth rate of the KPP term.
    k : float, optional
        Amplitude of the cubic.
    theta : float, optional
        Unstable intermediate zero of the cubic.
    eps : float, optional
        Lift of the upper zero for the modified cubic.
    """

    kind: str
    r: Optional[float] = None
    k: Optional[float] = None
    theta: Optional[float] = None
    eps: Optional[float] = None

    # -- metadata -----------------------------------------------------------
    @property
    def params(self) -> dict:
        """Named parameters of the reaction (only those that apply)."""
        names = {"kpp": ("r",), "bistable": ("k", "theta"), "modified": ("k", "theta", "eps")}
        return {n: getattr(self, n) for n in names[self.kind]}

    @property
    def upper(self) -> float:
        """The upper stable zero (1, or ``1 + eps`` for the modified cubic)."""
        return 1.0 + self.eps if self.kind == "modified" else 1.0

    @property
    def is_kpp(self) -> bool:
        return self.kind == "kpp"

    @property
    def is_bistable(self) -> bool:
        return self.kind in ("bistable", "modified")

    def describe(self) -> str:
        inner = ",".join(f"{n}={v!r}" for n, v in self.params.items())
        return f"{self.kind}:{inner}"

    # -- evaluation ---------------------------------------------------------
    def _blend_weight(self, u):
        return (np.asarray(u, dtype=float) - (1.0 - self.eps)) / (2.0 * self.eps)

    def __call__(self, s):
        return self.eval(s)

    def eval(self, s):
        """Evaluate ``f(s)`` (vectorized)."""
        s = np.asarray(s, dtype=float)
        if self.kind == "kpp":
            out = self.r * s * (1.0 - s)
        elif self.kind == "bistable":
            out = _cubic(s, self.k, self.theta)
        else:
            w = smoothstep(self._blend_weight(s))
            out = (1.0 - w) * _cubic(s, self.k, self.theta) + w * _cubic(s - self.eps, self.k, self.theta)
        return out[()] if out.ndim == 0 else out

    def deriv(self, s):
        """Evaluate ``f'(s)`` (vectorized)."""
        s = np.asarray(s, dtype=float)
        if self.kind == "kpp":
            out = self.r * (1.0 - 2.0 * s)
        elif self.kind == "bistable":
            out = _cubic_d1(s, self.k, self.theta)
        else:
            k, th, e = self.k, self.theta, self.eps
            sig = self._blend_weight(s)
            w, dw = smoothstep(sig), _smoothstep_d1(sig) / (2.0 * e)
            out = ((1.0 - w) * _cubic_d1(s, k, th) + w * _cubic_d1(s - e, k, th)
                   + dw * (_cubic(s - e, k, th) - _cubic(s, k, th)))
        return out[()] if out.ndim == 0 else out

    def deriv2(self, s):
        """Evaluate ``f''(s)`` (vectorized)."""
        s = np.asarray(s, dtype=float)
        if self.kind == "kpp":
            out = np.full_like(s, -2.0 * self.r)
        elif self.kind == "bistable":
            out = _cubic_d2(s, self.k, self.theta)
        else:
            k, th, e = self.k, self.theta, self.eps
            sig = self._blend_weight(s)
            w = smoothstep(sig)
            dw = _smoothstep_d1(sig) / (2.0 * e)
            d2w = _smoothstep_d2(sig) / (4.0 * e * e)
            out = ((1.0 - w) * _cubic_d2(s, k, th) + w * _cubic_d2(s - e, k, th)
                   + 2.0 * dw * (_cubic_d1(s - e, k, th) - _cubic_d1(s, k, th))
                   + d2w * (_cubic(s - e, k, th) - _cubic(s, k, th)))
        return out[()] if out.ndim == 0 else out

    def eval_below_top(self, w):
        """Evaluate ``f(upper - w)`` without cancellation for small ``w``.

        Needed when a profile approaches its upper zero and the distance to
        it is the quantity carried at full relative precision.
        """
        w = np.asarray(w, dtype=float)
        if self.kind == "kpp":
            out = self.r * (1.0 - w) * w
        elif self.kind == "bistable":
            out = self.k * (1.0 - w) * w * (1.0 - w - self.theta)
        else:
            # on the lifted band 1 - S(sigma) = S(w / (2 eps)) and f_b(u - eps) = f_b(1 - w)
            near = w <= 2.0 * self.eps
            lifted = self.k * (1.0 - w) * w * (1.0 - w - self.theta)
            weight = smoothstep(w / (2.0 * self.eps))
            blend = weight * _cubic(self.upper - w, self.k, self.theta) + (1.0 - weight) * lifted
            out = np.where(near, blend, self.eval(self.upper - w))
        return out[()] if out.ndim == 0 else out

    def per_capita(self, s, complement=None):
        """Evaluate ``f(s) / s`` with the removable singularity at 0 filled.

        Parameters
        ----------
        s : array_like
            Nonnegative states.
        complement : array_like, optional
            Accurately computed ``1 - s`` (used by the KPP and cubic forms).
        """
        s = np.asarray(s, dtype=float)
        one_minus = 1.0 - s if complement is None else np.asarray(complement, dtype=float)
        if self.kind == "kpp":
            return self.r * one_minus
        if self.kind == "bistable":
            return self.k * one_minus * (s - self.theta)
        safe = np.where(s > 0, s, 1.0)
        return np.where(s > 0, self.eval(s) / safe, self.deriv(0.0))


def build_kpp(r: float) -> Reaction:
    """Logistic KPP reaction ``r u (1 - u)``.

    Raises
    ------
    InvalidParameter
        If ``r`` is not a positive finite number.
    """
    if not np.isfinite(r) or r <= 0:
        raise InvalidParameter(f"KPP growth rate must be positive, got r={r!r}")
    return Reaction("kpp", r=float(r))


def build_cubic_bistable(k: float, theta: float) -> Reaction:
    """Cubic bistable reaction ``k u (1 - u)(u - theta)``."""
    if not np.isfinite(k) or k <= 0:
        raise InvalidParameter(f"bistable amplitude must be positive, got k={k!r}")
    if not (0.0 < theta < 1.0):
        raise InvalidParameter(f"theta must lie in (0, 1), got theta={theta!r}")
    return Reaction("bistable", k=float(k), theta=float(theta))


def build_modified_bistable(fb: Reaction, eps: float, n_grid: int = 4001) -> Reaction:
    """Cubic with its upper zero lifted to ``1 + eps``.

    The lifted term is ``(1 - S) f(u) + S f(u - eps)`` with ``S`` the quintic
    smoothstep of ``(u - (1 - eps)) / (2 eps)``. The result is validated on a
    grid: zeros exactly ``{0, theta, 1 + eps}``, ``f_eps >= f`` everywhere,
    equality below ``1 - eps`` and strict decrease on ``[1 - eps, 1 + eps]``.

    Raises
    ------
    BadModification
        If any of the validated properties fails (``eps`` too large).
    """
    if fb.kind != "bistable":
        raise WrongClass("the modification applies to a plain bistable reaction")
    if not (0.0 < eps < 0.5 * (1.0 - fb.theta)):
        raise BadModification(f"eps={eps!r} must lie in (0, (1 - theta)/2)")
    g = Reaction("modified", k=fb.k, theta=fb.theta, eps=float(eps))
    problems = []
    top = 1.0 + eps
    s = np.linspace(-0.5, top + 0.5, n_grid)
    diff = g.eval(s) - fb.eval(s)
    if diff.min() < -1e-14:
        problems.append(f"f_eps < f_b somewhere (min diff {diff.min():.3e})")
    low = s <= 1.0 - eps
    if np.max(np.abs(diff[low])) > 0.0:
        problems.append("f_eps differs from f_b below 1 - eps")
    band = np.linspace(1.0 - eps, top, 2001)
    if np.any(np.diff(g.eval(band)) >= 0.0):
        problems.append("f_eps is not decreasing on [1 - eps, 1 + eps]")
    for z in (0.0, fb.theta, top):
        if abs(g.eval(z)) > 1e-14:
            problems.append(f"f_eps({z}) != 0")
    if not (g.deriv(0.0) < 0 and g.deriv(fb.theta) > 0 and g.deriv(top) < 0):
        problems.append("derivative signs at the zeros are not bistable")
    inner = np.linspace(0.0, top, 4001)[1:-1]
    vals = g.eval(inner)
    expected = np.where(inner < fb.theta, -1.0, 1.0)
    mask = np.abs(inner - fb.theta) > 1e-9
    if np.any(np.sign(vals[mask]) != expected[mask]):
        problems.append("sign pattern on (0, 1 + eps) is not bistable")
    if problems:
        raise BadModification("; ".join(problems))
    return g


def check_reaction(f: Reaction, n: int = 2001, s_max: float = 2.0) -> list[str]:
    """Return the list of violated class invariants (empty when valid)."""
    out: list[str] = []
    s = np.linspace(0.0, s_max, n)
    inner = s[(s > 0) & (s < 1)]
    above = s[s > f.upper]
    if f.kind == "kpp":
        if abs(f.eval(0.0)) > 0 or abs(f.eval(1.0)) > 0:
            out.append("zeros at 0 and 1")
        if np.any(f.eval(inner) <= 0) or np.any(f.eval(inner) > f.deriv(0.0) * inner * (1 + 1e-14)):
            out.append("0 < f(s) <= f'(0) s on (0,1)")
        if not f.deriv(1.0) < 0:
            out.append("f'(1) < 0")
        if np.any(f.eval(above) >= 0):
            out.append("f < 0 above 1")
    else:
        th, top = f.theta, f.upper
        if any(abs(f.eval(z)) > 1e-14 for z in (0.0, th, top)):
            out.append("zeros at 0, theta and the upper zero")
        if not (f.deriv(0.0) < 0 < f.deriv(th) and f.deriv(top) < 0):
            out.append("derivative signs at the zeros")
        low = s[(s > 0) & (s < th)]
        mid = s[(s > th) & (s < top)]
        if np.any(f.eval(low) >= 0) or np.any(f.eval(mid) <= 0) or np.any(f.eval(above) >= 0):
            out.append("sign pattern")
    return out


@dataclass(frozen=True)
class HeterogeneousField:
    """Spatial blend ``(1 - chi(x)) f_m(s) + chi(x) f_b(s)``.

    ``chi`` is the quintic smoothstep of ``(x + L) / (2L)``, so the field is
    exactly ``f_m`` for ``x <= -L`` and exactly ``f_b`` for ``x >= L``.
    """

    left: Reaction
    right: Reaction
    L: float = 5.0

    def chi(self, x):
        """Ramp weight of the right reaction at position ``x``."""
        return smoothstep((np.asarray(x, dtype=float) + self.L) / (2.0 * self.L))

    def chi_prime(self, x):
        return _smoothstep_d1((np.asarray(x, dtype=float) + self.L) / (2.0 * self.L)) / (2.0 * self.L)

    def eval(self, x, s):
        """Evaluate ``f(x, s)`` with broadcasting over ``x`` and ``s``."""
        w = self.chi(x)
        return (1.0 - w) * self.left.eval(s) + w * self.right.eval(s)

    __call__ = eval

    def deriv_s(self, x, s):
        """Partial derivative of the field in the state variable."""
        w = self.chi(x)
        return (1.0 - w) * self.left.deriv(s) + w * self.right.deriv(s)

    def deriv_x(self, x, s):
        """Partial derivative of the field in space."""
        return self.chi_prime(x) * (self.right.eval(s) - self.left.eval(s))

    def eval_below_one(self, x, w):
        """Evaluate ``f(x, 1 - w)`` accurately for small ``w``."""
        chi = self.chi(x)
        return (1.0 - chi) * self.left.eval_below_top(w) + chi * self.right.eval_below_top(w)

    def max_rate(self, s_max: float = 1.0, n: int = 2001) -> float:
        """Largest ``sup_x d_s f(x, s)`` over ``s in [0, s_max]`` (for step-size checks)."""
        s = np.linspace(0.0, s_max, n)
        return float(max(self.left.deriv(s).max(), self.right.deriv(s).max()))

    def min_rate(self, s_max: float = 1.0, n: int = 2001) -> float:
        """Smallest ``d_s f`` over ``s in [0, s_max]`` on either side."""
        s = np.linspace(0.0, s_max, n)
        return float(min(self.left.deriv(s).min(), self.right.deriv(s).min()))


def build_blend(fm: Reaction, fb: Reaction, L: float = 5.0) -> HeterogeneousField:
    """Blend a KPP reaction on the left with a bistable one on the right."""
    if fm.kind != "kpp":
        raise WrongClass(f"left reaction must be KPP, got {fm.kind}")
    if not fb.is_bistable:
        raise WrongClass(f"right reaction must be bistable, got {fb.kind}")
    if not np.isfinite(L) or L <= 0:
        raise InvalidParameter(f"transition half-width must be positive, got L={L!r}")
    return HeterogeneousField(fm, fb, float(L))


@dataclass
class ValidationEntry:
    """Largest violation of one hypothesis and where it occurs."""

    name: str
    max_violation: float
    location: tuple[float, float]
    passed: bool


@dataclass
class ValidationReport:
    """Outcome of :func:`validate_hypotheses`."""

    entries: list[ValidationEntry] = field(default_factory=list)
    tolerance: float = 1e-12

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def __getitem__(self, name: str) -> ValidationEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)


def _worst(values, xs, ss, name, tol):
    idx = np.unravel_index(int(np.argmax(values)), values.shape)
    v = float(values[idx])
    return ValidationEntry(name, max(v, 0.0), (float(xs[idx]), float(ss[idx])), v <= tol)


def validate_hypotheses(field: HeterogeneousField, s_max: float = 1.5, n_x: int = 256,
                        n_s: int = 256, tolerance: float = 1e-12) -> ValidationReport:
    """Scan the blended field on a grid and report hypothesis violations.

    Checked hypotheses: zeros at ``s = 0`` and ``s = 1`` for every ``x``,
    ``d_s f(x, 1) < 0``, ``f(x, s) <= 0`` for ``s >= 1`` and ``d_x f <= 0`` on
    ``[-L, L] x [0, s_max]``. Violations are reported, never raised.
    """
    if s_max < 1.5:
        raise InvalidParameter("s_max must be at least 1.5")
    if n_x < 64 or n_s < 64:
        raise InvalidParameter("grid sizes must be at least 64")
    L = field.L
    x = np.linspace(-L - 2.0, L + 2.0, n_x)
    s = np.linspace(0.0, s_max, n_s)
    X, S = np.meshgrid(x, s, indexing="ij")
    rep = ValidationReport(tolerance=tolerance)

    z = np.maximum(np.abs(field.eval(x, 0.0)), np.abs(field.eval(x, 1.0)))[:, None]
    rep.entries.append(_worst(z, X[:, :1], np.zeros_like(X[:, :1]), "zeros_at_0_and_1", tolerance))

    d1 = field.deriv_s(x, 1.0)[:, None]
    # strict inequality: report the value itself, pass iff strictly negative
    e = _worst(d1, X[:, :1], np.ones_like(X[:, :1]), "ds_negative_at_1", tolerance)
    e.passed = bool(np.all(d1 < 0))
    rep.entries.append(e)

    hi = S >= 1.0
    vals = np.where(hi, field.eval(X, S), -np.inf)
    rep.entries.append(_worst(vals, X, S, "nonpositive_above_1", tolerance))

    xm = np.linspace(-L, L, n_x)
    Xm, Sm = np.meshgrid(xm, s, indexing="ij")
    rep.entries.append(_worst(field.deriv_x(Xm, Sm), Xm, Sm, "decreasing_in_x", tolerance))
    return rep
