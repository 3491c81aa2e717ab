"""Shared fixtures and the acceptance summary printer."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import pytest

from frontlab import PlateauBump, Problem, build_blend, build_cubic_bistable, build_kpp, integrate
from frontlab.waves import cached_bistable_front

# One line per acceptance criterion, filled by tests/test_acceptance.py.
ACCEPTANCE_LINES: dict = {}


def record_acceptance(key: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[key] = (passed, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (len(k.split(".")[0]), k)):
        passed, detail = ACCEPTANCE_LINES[key]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  criterion {key}: {detail}")


@dataclass(frozen=True)
class PureKpp:
    """KPP reaction on the whole line (both sides of the blend equal)."""

    fm: object
    L: float = 5.0

    @property
    def left(self):
        return self.fm

    def eval(self, x, s):
        return self.fm.eval(np.broadcast_to(s, np.broadcast(np.asarray(x), np.asarray(s)).shape))

    def deriv_s(self, x, s):
        return self.fm.deriv(np.broadcast_to(s, np.broadcast(np.asarray(x), np.asarray(s)).shape))


@functools.lru_cache(maxsize=None)
def reference_field(theta: float = 0.3, k: float = 1.0, L: float = 5.0):
    """Blend of ``r = k (1 - theta)`` logistic and the cubic with the same ``k, theta``."""
    return build_blend(build_kpp(k * (1.0 - theta)), build_cubic_bistable(k, theta), L)


@pytest.fixture(scope="session")
def field_03():
    return reference_field(0.3)


@pytest.fixture(scope="session")
def front_03():
    return cached_bistable_front(build_cubic_bistable(1.0, 0.3))


@pytest.fixture(scope="session")
def run_c0(field_03):
    """Reference run: theta = 0.3, c = 0, KPP-side plateau, T = 150."""
    problem = Problem(field_03, 0.0, -60.0, 60.0, dx=0.1, dt=0.02)
    return integrate(problem, PlateauBump(0.9, 20.0, center=-20.0), 150.0, snapshot_every=1.0,
                     track=[(0.5, "left"), (0.5, "right"), (0.01, "right"), (0.1, "right"), (0.9, "right")])
