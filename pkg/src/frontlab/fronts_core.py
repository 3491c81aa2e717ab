"""Level-crossing primitives shared by the time stepper and the fronts module."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["FrontTrace", "leftmost_crossing", "rightmost_crossing", "crossing"]


def leftmost_crossing(x0: float, dx: float, u: np.ndarray, rho: float) -> float:
    """Leftmost position where ``u`` equals ``rho`` (linear interpolation).

    The first grid cell whose end values lie on opposite sides of ``rho`` is
    used, so the position is ``inf {x : u(x) = rho}`` of the piecewise-linear
    interpolant. Returns ``nan`` when no cell brackets ``rho``.
    """
    above = u >= rho
    flips = above[1:] != above[:-1]
    i = int(np.argmax(flips))
    if not flips[i]:
        return float("nan")
    ua, ub = u[i], u[i + 1]
    return x0 + dx * (i + (rho - ua) / (ub - ua))


def rightmost_crossing(x0: float, dx: float, u: np.ndarray, rho: float) -> float:
    """Rightmost position where ``u`` equals ``rho`` (linear interpolation)."""
    above = u >= rho
    flips = above[1:] != above[:-1]
    k = int(np.argmax(flips[::-1]))
    if not flips[flips.size - 1 - k]:
        return float("nan")
    j = flips.size - 1 - k
    ua, ub = u[j], u[j + 1]
    return x0 + dx * (j + (rho - ua) / (ub - ua))


def crossing(x0: float, dx: float, u: np.ndarray, rho: float, side: str) -> float:
    if side == "left":
        return leftmost_crossing(x0, dx, u, rho)
    if side == "right":
        return rightmost_crossing(x0, dx, u, rho)
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


@dataclass
class FrontTrace:
    """Positions of the leftmost or rightmost ``rho`` crossing over time.

    Gaps (no crossing inside the domain) are stored as ``nan``.
    """

    level: float
    side: str
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    positions: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def window(self, t1: float, t2: float) -> tuple[np.ndarray, np.ndarray]:
        """Gap-free samples with ``t1 <= t <= t2``."""
        sel = (self.times >= t1) & (self.times <= t2) & np.isfinite(self.positions)
        return self.times[sel], self.positions[sel]

    def shifted(self, speed: float) -> "FrontTrace":
        """Trace seen in the frame ``y = x + speed * t``."""
        return FrontTrace(self.level, self.side, self.times.copy(), self.positions + speed * self.times)

    def position_at(self, t: float) -> float:
        """Position at the sample nearest to ``t``."""
        i = int(np.argmin(np.abs(self.times - t)))
        return float(self.positions[i])
