"""Property suites: comparison, grid refinement, frame equivariance, reproducible runs.

The helpers here are shared with the acceptance suite.
"""

from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import reference_field
from frontlab.fronts import trace_level
from frontlab.harness import ExperimentConfig, InitialConfig, ProblemConfig, RunConfig, run
from frontlab.solver import PlateauBump, Problem, SampledDatum, frame_shift, integrate

COMPARISON_SLACK = 1e-10


def ordered_pair(bumps_a, bumps_b):
    """Data ``A = min(B, P)`` and ``B = max(Q_i)`` built from plateau bumps, so that ``A <= B``."""
    qs = [PlateauBump(*b) for b in bumps_b]
    p = [PlateauBump(*b) for b in bumps_a]

    def upper(x):
        return np.max([q(x) for q in qs], axis=0)

    def lower(x):
        return np.minimum(upper(x), np.max([q(x) for q in p], axis=0))

    return SampledDatum(lower), SampledDatum(upper)


def comparison_excess(c: float, theta: float, u0a, u0b, T: float = 10.0, dx: float = 0.2,
                      dt: float = 0.04) -> float:
    """Largest ``u^A - u^B`` over all snapshots of two runs on the same fixed grid."""
    problem = Problem(reference_field(theta), c, -60.0, 60.0, dx=dx, dt=dt, grow="fixed")
    ta = integrate(problem, u0a, T, snapshot_every=0.5, track=())
    tb = integrate(problem, u0b, T, snapshot_every=0.5, track=())
    return max(float(np.max(a - b)) for a, b in zip(ta.snapshots, tb.snapshots))


def refinement_changes(c: float, theta: float = 0.3, T: float = 20.0, levels: int = 3):
    """Changes of the two 0.5-level positions at ``T`` over successive halvings of ``dx`` and ``dt``."""
    fld = reference_field(theta)
    positions = []
    dx, dt = 0.2, 0.04
    for _ in range(levels):
        traj = integrate(Problem(fld, c, -60.0, 60.0, dx=dx, dt=dt), PlateauBump(0.9, 20.0, center=-20.0),
                         T, snapshot_every=T)
        positions.append([traj.traces[(0.5, "left")].positions[-1], traj.traces[(0.5, "right")].positions[-1]])
        dx, dt = dx / 2, dt / 2
    return np.abs(np.diff(np.asarray(positions), axis=0))


def equivariance_gap(c: float, T: float = 20.0) -> float:
    """Largest deviation of traced positions after ``frame_shift`` from ``position + c t``."""
    traj = integrate(Problem(reference_field(0.3), c, -60.0, 60.0), PlateauBump(0.9, 20.0, center=-20.0), T,
                     snapshot_every=1.0)
    moved = frame_shift(traj)
    gap = 0.0
    for side in ("left", "right"):
        a = trace_level(traj, 0.5, side, source="snapshots")
        b = trace_level(moved, 0.5, side, source="snapshots")
        gap = max(gap, float(np.nanmax(np.abs(b.positions - (a.positions + c * a.times)))))
    return gap / traj.dx


SMALL_RUN = ExperimentConfig(problem=ProblemConfig(x_lo=-30.0, x_hi=30.0, dx=0.2, dt=0.04),
                             initial=InitialConfig(width=10.0, center=-10.0), run=RunConfig(T=10.0))


def manifests_identical(base, config: ExperimentConfig = SMALL_RUN) -> bool:
    """Run a configuration twice and compare the manifests without the wall clock."""
    records = []
    for name in ("first", "second"):
        run(config, base / name)
        rec = json.loads((base / name / "manifest.json").read_text())
        rec.pop("wall_clock")
        records.append(rec)
    return records[0] == records[1]


# ---------------------------------------------------------------------------
# hypothesis-driven versions
# ---------------------------------------------------------------------------
bump = st.tuples(st.floats(0.05, 1.2), st.floats(0.0, 20.0), st.floats(-25.0, 25.0), st.floats(0.5, 3.0))


@settings(max_examples=10, deadline=None)
@given(c=st.floats(-2.5, 2.5), theta=st.sampled_from([0.3, 0.6]), a=st.lists(bump, min_size=1, max_size=2),
       b=st.lists(bump, min_size=1, max_size=2))
def test_comparison_principle(c, theta, a, b):
    u0a, u0b = ordered_pair(a, b)
    assert comparison_excess(c, theta, u0a, u0b) <= COMPARISON_SLACK


@pytest.mark.parametrize("c", [0.0, 1.0, -2.0])
def test_refinement_changes_shrink_at_most_fourfold(c):
    d = refinement_changes(c)
    ratio = d[0] / d[1]
    assert np.all(ratio > 1.0), ratio
    assert np.all(ratio <= 4.0), ratio


@settings(max_examples=6, deadline=None)
@given(c=st.floats(-2.0, 2.0))
def test_frame_shift_equivariance(c):
    assert equivariance_gap(c, T=10.0) <= 1.0


def test_rerun_manifests_identical(tmp_path):
    assert manifests_identical(tmp_path)
