"""Time stepper, initial data, frame changes and the Gaussian envelope."""

import math
from dataclasses import dataclass

import numpy as np
import pytest

from frontlab.errors import InvalidParameter, WindowOutsideDomain
from frontlab.fronts import fit_speed, trace_level
from frontlab.reactions import build_kpp
from frontlab.solver import (
    PlateauBump,
    Problem,
    SampledDatum,
    frame_shift,
    gaussian_bound_check,
    integrate,
    logistic_envelope,
)
from conftest import PureKpp as _PureKpp
from frontlab.waves import kpp_min_speed


@dataclass(frozen=True)
class ZeroField:
    L: float = 5.0

    def eval(self, x, s):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(s)).shape)

    def deriv_s(self, x, s):
        return self.eval(x, s)


class TestPlateau:
    def test_shape(self):
        bump = PlateauBump(0.9, 20.0, center=-20.0, shoulder=2.0)
        x = np.linspace(-50, 10, 6001)
        u = bump(x)
        assert u.min() >= 0.0 and u.max() <= 0.9
        assert np.all(u[(x >= -30) & (x <= -10)] == 0.9)
        lo, hi = bump.support
        assert lo == pytest.approx(-32.0) and hi == pytest.approx(-8.0)
        assert np.all(u[(x < lo) | (x > hi)] == 0.0)
        assert np.max(np.abs(np.diff(u))) < 0.9 * 0.02

    def test_invalid(self):
        with pytest.raises(InvalidParameter):
            PlateauBump(-0.1, 10.0)
        with pytest.raises(InvalidParameter):
            PlateauBump(0.5, -1.0)


class TestProblem:
    def test_domain_must_contain_transition(self, field_03):
        with pytest.raises(InvalidParameter):
            Problem(field_03, 0.0, -10.0, 60.0)

    @pytest.mark.parametrize("kw", [{"dx": 0.0}, {"dt": -1.0}, {"bc": "periodic"}, {"grow": "sometimes"}])
    def test_invalid_options(self, field_03, kw):
        with pytest.raises(InvalidParameter):
            Problem(field_03, 0.0, -60.0, 60.0, **kw)

    def test_support_outside_domain(self, field_03):
        p = Problem(field_03, 0.0, -60.0, 60.0)
        with pytest.raises(WindowOutsideDomain):
            integrate(p, PlateauBump(0.9, 20.0, center=55.0), 1.0)


class TestIntegrate:
    def test_zero_reaction_conserves_mass(self):
        p = Problem(ZeroField(), 0.0, -40.0, 40.0, dx=0.1, dt=0.02, grow="fixed")
        gauss = SampledDatum(lambda x: np.exp(-x * x / 4.0))
        traj = integrate(p, gauss, 10.0)
        steps = np.abs(np.diff(traj.mass))
        assert np.max(steps) <= 1e-10

    def test_zero_datum_stays_zero(self, field_03):
        p = Problem(field_03, 0.7, -60.0, 60.0)
        traj = integrate(p, SampledDatum(lambda x: np.zeros_like(x)), 20.0)
        assert all(np.all(s == 0.0) for s in traj.snapshots)

    def test_limsup_bound(self, run_c0):
        env = logistic_envelope(run_c0.initial_sup, 0.7, run_c0.times)
        tops = np.array([s.max() for s in run_c0.snapshots])
        assert np.all(tops <= np.maximum(1.0, run_c0.initial_sup) * (1 + 1e-9))
        assert np.all(tops <= env + 1e-9)
        assert all(s.min() >= 0.0 for s in run_c0.snapshots)

    def test_logistic_envelope_above_one(self, field_03):
        p = Problem(field_03, 0.0, -60.0, 60.0)
        traj = integrate(p, PlateauBump(1.8, 20.0, center=-20.0), 10.0)
        env = logistic_envelope(1.8, 0.7, traj.times)
        tops = np.array([s.max() for s in traj.snapshots])
        assert np.all(tops <= env * (1 + 1e-9))
        assert tops[-1] < 1.8

    def test_pure_kpp_speed(self):
        fld = _PureKpp(build_kpp(0.7))
        p = Problem(fld, 0.0, -60.0, 60.0)
        traj = integrate(p, PlateauBump(0.9, 10.0, center=0.0), 200.0)
        c_m = kpp_min_speed(fld.left)
        left = fit_speed(trace_level(traj, 0.5, "left"), (100.0, 200.0)).speed
        right = fit_speed(trace_level(traj, 0.5, "right"), (100.0, 200.0)).speed
        assert left == pytest.approx(-c_m, rel=0.02)
        assert right == pytest.approx(c_m, rel=0.02)

    def test_growth_preserves_nodes(self, run_c0):
        assert any("grown" in e for e in run_c0.events)
        for j in range(len(run_c0.snapshots)):
            k = (run_c0.origins[j] - run_c0.problem.x_lo) / run_c0.dx
            assert abs(k - round(k)) < 1e-9

    def test_fixed_grid_records_escape(self, field_03):
        p = Problem(field_03, 0.0, -40.0, 40.0, grow="fixed")
        traj = integrate(p, PlateauBump(0.9, 20.0, center=-20.0), 30.0)
        assert traj.warnings and "boundary" in traj.warnings[0]

    def test_far_field_small_with_margin(self, run_c0):
        assert np.max(run_c0.boundary_max) < 1e-8

    def test_stability_precondition(self, field_03):
        p = Problem(field_03, 0.0, -60.0, 60.0, dt=5.0)
        with pytest.raises(InvalidParameter):
            integrate(p, PlateauBump(0.9, 20.0, center=-20.0), 10.0)

    def test_snapshot_cap(self, field_03):
        p = Problem(field_03, 0.0, -60.0, 60.0)
        traj = integrate(p, PlateauBump(0.9, 20.0, center=-20.0), 50.0, snapshot_every=0.02)
        assert traj.times.size <= 2000
        assert np.all(np.diff(traj.times) > 0)

    def test_deterministic(self, field_03):
        p = Problem(field_03, 1.0, -60.0, 60.0)
        a = integrate(p, PlateauBump(0.9, 20.0, center=-20.0), 20.0)
        b = integrate(p, PlateauBump(0.9, 20.0, center=-20.0), 20.0)
        assert all(np.array_equal(x, y) for x, y in zip(a.snapshots, b.snapshots))


class TestFrameShift:
    def test_zero_speed_is_identity(self, run_c0):
        same = frame_shift(run_c0, 0.0)
        j = len(run_c0.snapshots) - 1
        x, u = run_c0.grid(j), run_c0.snapshots[j]
        y, v = same.grid(j), same.snapshots[j]
        assert np.array_equal(np.interp(x, y, v), u)

    def test_constant_snapshot(self):
        p = Problem(ZeroField(), 0.7, -40.0, 40.0, grow="fixed", bc="neumann")
        traj = integrate(p, SampledDatum(lambda x: np.full_like(x, 0.4)), 5.0)
        moved = frame_shift(traj)
        assert all(np.allclose(s, 0.4, atol=1e-12) for s in moved.snapshots)

    def test_round_trip(self, field_03):
        p = Problem(field_03, 1.0, -60.0, 60.0)
        traj = integrate(p, PlateauBump(0.9, 20.0, center=-20.0), 20.0, snapshot_every=2.0)
        back = frame_shift(frame_shift(traj), -1.0)
        for j in range(len(traj.snapshots)):
            x = traj.grid(j)
            assert np.max(np.abs(np.interp(x, back.grid(j), back.snapshots[j]) - traj.snapshots[j])) < 1e-12

    def test_bistable_front_speed_in_frame(self, field_03, front_03):
        c = -0.5
        p = Problem(field_03, c, -60.0, 120.0)
        traj = integrate(p, PlateauBump(0.9, 60.0, center=40.0), 60.0)
        lab = fit_speed(trace_level(traj, 0.5, "right"), (30.0, 60.0)).speed
        moved = fit_speed(trace_level(frame_shift(traj), 0.5, "right"), (30.0, 60.0)).speed
        assert lab == pytest.approx(front_03.speed - c, abs=2e-3)
        assert moved == pytest.approx(front_03.speed, abs=2e-3)


class TestGaussianBound:
    def setup_method(self):
        self.fld = _PureKpp(build_kpp(0.7))
        self.bump = PlateauBump(0.9, 10.0, center=0.0, shoulder=2.0)
        p = Problem(self.fld, 0.0, -60.0, 60.0)
        self.traj = integrate(p, self.bump, 20.0, snapshot_every=0.5)

    def test_valid_envelope_passes(self):
        lo, hi = self.bump.support
        rep = gaussian_bound_check(self.traj, 0.7, -lo, hi, 1.0)
        assert rep.passed
        assert not rep.evaluated[0] and rep.evaluated[-1]

    def test_small_rate_fails(self):
        lo, hi = self.bump.support
        assert not gaussian_bound_check(self.traj, 0.2, -lo, hi, 1.0).passed


def test_kpp_wrapper_consistency():
    fld = _PureKpp(build_kpp(0.7))
    s = np.linspace(0, 1, 11)
    assert np.array_equal(fld.eval(3.0, s), build_kpp(0.7).eval(s))
    assert math.isclose(kpp_min_speed(fld.left), 2 * math.sqrt(0.7))
