"""Blocking profile, uniqueness probe and semi-persistence."""

from dataclasses import replace

import numpy as np
import pytest

from frontlab.errors import InvalidParameter, WrongRegime
from frontlab.solver import PlateauBump, Problem, SampledDatum, integrate
from frontlab.stationary import (
    decay_rates,
    semi_persistence_check,
    solve_blocking_profile,
    uniqueness_probe,
)

X_BLOCK = 90.0  # smallest round value above 40 / min(eta, zeta) = 84.3 at c = 1


@pytest.fixture(scope="module")
def blocking_problem(field_03):
    return Problem(field_03, 1.0, -120.0, 120.0, dx=0.1, dt=0.02)


@pytest.fixture(scope="module")
def profile(blocking_problem):
    return solve_blocking_profile(blocking_problem, X_BLOCK)


def test_decay_rates(field_03):
    eta, zeta = decay_rates(field_03, 1.0)
    assert eta == pytest.approx((-1 + np.sqrt(1 + 2.8)) / 2, abs=1e-12)
    assert zeta == pytest.approx((1 + np.sqrt(1 + 1.2)) / 2, abs=1e-12)
    assert (eta, zeta) == pytest.approx((0.4747, 1.2416), abs=1e-4)


class TestProfile:
    def test_residual_and_shape(self, profile):
        assert profile.residual_max <= 1e-10
        assert 0.0 < profile(0.0) < 1.0
        inner = profile.values[1:-1]
        assert np.all((inner > 0) & (inner <= 1))
        assert np.all(profile.split > 0) and np.all(profile.split < 1)
        assert profile.is_strictly_decreasing()

    def test_tail_rates(self, profile):
        X, x = X_BLOCK, profile.x
        left = (x >= -X) & (x <= -X / 2)
        right = (x >= X / 2) & (x <= X)
        s_left = np.polyfit(x[left], np.log(profile.one_minus()[left]), 1)[0]
        s_right = np.polyfit(x[right], np.log(profile.values[right]), 1)[0]
        assert s_left == pytest.approx(profile.eta, rel=0.05)
        assert s_right == pytest.approx(-profile.zeta, rel=0.05)

    def test_sliding(self, profile):
        x = profile.x[np.abs(profile.x) <= X_BLOCK / 2]
        for a in (profile.dx, 0.5, 3.0, 20.0):
            shifted = profile(x + a)
            assert np.all(shifted <= profile(x) + 1e-15)
            assert profile(np.array([a])) < profile(np.array([0.0]))
        assert np.all(profile(x + 0.0) <= profile(x))

    def test_steady_under_time_stepping(self, blocking_problem, profile):
        fixed = replace(blocking_problem, grow="fixed")
        traj = integrate(fixed, profile.datum(), 50.0, snapshot_every=5.0, track=())
        inner = np.abs(fixed.grid()) <= X_BLOCK
        worst = max(float(np.max(np.abs(s - profile(fixed.grid()))[inner])) for s in traj.snapshots)
        assert worst <= 1e-6

    def test_wrong_regime(self, field_03):
        with pytest.raises(WrongRegime):
            solve_blocking_profile(Problem(field_03, 0.2, -120.0, 120.0), X_BLOCK)
        with pytest.raises(WrongRegime):
            solve_blocking_profile(Problem(field_03, 1.8, -120.0, 120.0), X_BLOCK)

    def test_short_domain(self, blocking_problem):
        with pytest.raises(InvalidParameter):
            solve_blocking_profile(blocking_problem, 80.0)


class TestProbe:
    def test_blocking_single_cluster(self, blocking_problem, profile):
        zero = ("zero", SampledDatum(lambda x: np.zeros_like(x)))
        rep = uniqueness_probe(blocking_problem, n_inits=3, profile=profile, extra_data=[zero])
        assert not rep.inconclusive
        assert rep.trivial == [3]
        assert rep.n_clusters == 1
        assert max(rep.reference_distance[:3]) <= 1e-3

    def test_invasion_limits_are_one(self, field_03):
        rep = uniqueness_probe(Problem(field_03, 0.0, -120.0, 120.0), n_inits=3)
        assert rep.regime == "invasion" and not rep.inconclusive
        assert rep.n_clusters == 1
        assert max(rep.reference_distance) <= 1e-3

    def test_preconditions(self, blocking_problem, field_03):
        with pytest.raises(InvalidParameter):
            uniqueness_probe(blocking_problem, n_inits=2)
        with pytest.raises(WrongRegime):
            uniqueness_probe(Problem(field_03, -2.0, -120.0, 120.0))


class TestSemiPersistence:
    def test_blocking_run_persists(self, blocking_problem):
        traj = integrate(blocking_problem, PlateauBump(0.9, 20.0, center=-20.0), 150.0, snapshot_every=2.0)
        assert semi_persistence_check(traj, -10.0)

    def test_extinction_run_does_not(self, field_03):
        p = Problem(field_03, -2.0, -60.0, 200.0, bc="dirichlet_farfield")
        traj = integrate(p, PlateauBump(0.9, 20.0, center=-20.0), 150.0, snapshot_every=2.0)
        assert not semi_persistence_check(traj, -10.0)

    def test_zero_datum(self, blocking_problem):
        traj = integrate(blocking_problem, SampledDatum(lambda x: np.zeros_like(x)), 20.0)
        assert not semi_persistence_check(traj, -10.0)
