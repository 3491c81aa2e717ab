"""Level sets, speed and log-delay fits, profile matching."""

import numpy as np
import pytest

from frontlab.errors import InsufficientSamples, InvalidParameter, WindowOutsideDomain
from frontlab.fronts import fit_log_delay, fit_speed, match_profile, trace_level
from frontlab.fronts_core import FrontTrace
from frontlab.reactions import build_kpp
from frontlab.solver import Problem, Trajectory, frame_shift
from frontlab.waves import kpp_front


def synthetic(problem, times, func, x_lo=-60.0, n=1201):
    x = x_lo + problem.dx * np.arange(n)
    snaps = [func(t, x) for t in times]
    return Trajectory(problem, np.asarray(times, float), snaps, np.full(len(times), x_lo))


@pytest.fixture(scope="module")
def problem(field_03):
    return Problem(field_03, 0.0, -60.0, 60.0)


class TestTrace:
    def test_monotone_profile_single_crossing(self, problem, front_03):
        traj = synthetic(problem, [0.0], lambda t, x: front_03(x - 3.0))
        left = trace_level(traj, 0.5, "left", source="snapshots").positions[0]
        right = trace_level(traj, 0.5, "right", source="snapshots").positions[0]
        assert left == pytest.approx(right, abs=1e-12)
        assert left == pytest.approx(3.0 + front_03.level_position(0.5), abs=1e-3)

    def test_gap_below_level(self, problem):
        traj = synthetic(problem, [0.0, 1.0], lambda t, x: 0.2 * np.exp(-x * x))
        tr = trace_level(traj, 0.5, "left", source="snapshots")
        assert np.all(np.isnan(tr.positions))

    def test_translation(self, problem, front_03):
        base = synthetic(problem, [0.0], lambda t, x: front_03(x))
        moved = synthetic(problem, [0.0], lambda t, x: front_03(x - 2.5))
        a = trace_level(base, 0.3, "right", source="snapshots").positions[0]
        b = trace_level(moved, 0.3, "right", source="snapshots").positions[0]
        assert b - a == pytest.approx(2.5, abs=1e-12)

    def test_left_side_invariant(self, run_c0):
        tr = trace_level(run_c0, 0.5, "left", source="snapshots")
        for j in range(0, len(run_c0.snapshots), 10):
            x, u = run_c0.grid(j), run_c0.snapshots[j]
            assert np.all(u[x < tr.positions[j] - run_c0.dx] < 0.5)

    def test_streamed_matches_snapshots(self, run_c0):
        a = trace_level(run_c0, 0.5, "right", source="snapshots")
        b = trace_level(run_c0, 0.5, "right")
        idx = np.searchsorted(b.times, a.times[-1])
        assert b.positions[idx] == pytest.approx(a.positions[-1], abs=1e-12)

    def test_bad_level(self, run_c0):
        with pytest.raises(InvalidParameter):
            trace_level(run_c0, 1.2, "left")


class TestSpeed:
    def test_exact_line(self):
        t = np.linspace(0, 100, 501)
        fit = fit_speed(FrontTrace(0.5, "right", t, 3 * t + 1), (0, 100))
        assert fit.speed == pytest.approx(3.0, abs=1e-12)
        assert fit.intercept == pytest.approx(1.0, abs=1e-9)
        assert fit.stderr < 1e-12

    def test_insufficient(self):
        t = np.linspace(0, 100, 30)
        with pytest.raises(InsufficientSamples):
            fit_speed(FrontTrace(0.5, "right", t, t), (0, 100))
        t = np.linspace(0, 100, 1001)
        with pytest.raises(InsufficientSamples):
            fit_speed(FrontTrace(0.5, "right", t, t), (0, 5))

    def test_reference_run_speeds(self, run_c0, front_03):
        left = fit_speed(trace_level(run_c0, 0.5, "left"), (75, 150)).speed
        right = fit_speed(trace_level(run_c0, 0.5, "right"), (75, 150)).speed
        assert left == pytest.approx(-2 * np.sqrt(0.7), rel=0.03)
        assert right == pytest.approx(front_03.speed, abs=2e-3)

    def test_two_levels_one_front(self, run_c0):
        a = fit_speed(trace_level(run_c0, 0.1, "right"), (75, 150))
        b = fit_speed(trace_level(run_c0, 0.9, "right"), (75, 150))
        assert abs(a.speed - b.speed) <= 2 * (a.stderr + b.stderr) + 1e-4


class TestLogDelay:
    def test_exact_recovery(self):
        t = np.linspace(100, 800, 2001)
        fit = fit_log_delay(FrontTrace(0.5, "left", t, -2 * t + 1.5 * np.log(t) + 7), (100, 800), frozen_a=-2.0)
        assert (fit.a, fit.b, fit.c0) == pytest.approx((-2.0, 1.5, 7.0), abs=1e-6)
        assert fit.frozen_b == pytest.approx(1.5, abs=1e-9)

    def test_no_delay_on_long_window(self):
        t = np.linspace(100, 700, 3001)
        wiggle = 0.01 * np.sin(t / 7.0)
        fit = fit_log_delay(FrontTrace(0.5, "left", t, -1.3 * t + 4 + wiggle), (100, 700))
        assert abs(fit.b) <= 0.1

    def test_preconditions(self):
        t = np.linspace(10, 800, 2001)
        tr = FrontTrace(0.5, "left", t, -t)
        with pytest.raises(InsufficientSamples):
            fit_log_delay(tr, (20, 800))
        with pytest.raises(InsufficientSamples):
            fit_log_delay(FrontTrace(0.5, "left", t[:100], -t[:100]), (50, 800))


class TestMatch:
    def test_self_match(self, problem, front_03):
        sigma, t = 0.25, 10.0
        traj = synthetic(problem, [t], lambda t, x: front_03(x - sigma * t + 5.0))
        m = match_profile(traj, t, front_03, sigma, (-30.0, 40.0))
        assert m.shift == pytest.approx(5.0, abs=1e-6)
        assert m.sup_error <= 1e-10

    def test_mirrored_self_match(self, problem, front_03):
        traj = synthetic(problem, [4.0], lambda t, x: front_03(-x - 0.5 * t + 2.0))
        m = match_profile(traj, 4.0, front_03, 0.5, (-30.0, 30.0), mirrored=True)
        assert m.shift == pytest.approx(2.0, abs=1e-6) and m.sup_error <= 1e-10

    def test_reference_run_converges(self, run_c0, front_03):
        end = trace_level(run_c0, 0.01, "right").position_at(150.0)
        m = match_profile(run_c0, 150.0, front_03, front_03.speed, (10.0, end))
        assert m.sup_error <= 0.02

    def test_kpp_profile_mismatch(self, run_c0):
        kpp = kpp_front(build_kpp(0.7), 2 * np.sqrt(0.7))
        end = trace_level(run_c0, 0.01, "right").position_at(150.0)
        m = match_profile(run_c0, 150.0, kpp, 0.28284271247, (10.0, end))
        assert m.sup_error > 0.1

    def test_window_outside(self, run_c0, front_03):
        with pytest.raises(WindowOutsideDomain):
            match_profile(run_c0, 150.0, front_03, 0.28, (0.0, 1e4))


def test_frame_equivariance(field_03):
    from frontlab.solver import PlateauBump, integrate

    p = Problem(field_03, 1.0, -60.0, 60.0)
    traj = integrate(p, PlateauBump(0.9, 20.0, center=-20.0), 30.0, snapshot_every=1.0)
    moved = frame_shift(traj)
    a = trace_level(traj, 0.5, "left", source="snapshots")
    b = trace_level(moved, 0.5, "left", source="snapshots")
    assert np.max(np.abs(b.positions - (a.positions + 1.0 * a.times))) <= traj.dx
