"""Reaction terms, the blended field and hypothesis validation."""

import numpy as np
from scipy import integrate
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frontlab.errors import BadModification, InvalidParameter, WrongClass
from frontlab.reactions import (
    build_blend,
    build_cubic_bistable,
    build_kpp,
    build_modified_bistable,
    check_reaction,
    smoothstep,
    validate_hypotheses,
)


class TestKpp:
    def test_logistic_values(self):
        f = build_kpp(1.0)
        assert f.eval(0.5) == pytest.approx(0.25, abs=1e-15)
        assert f.deriv(0.0) == pytest.approx(1.0, abs=1e-15)

    def test_growth_rate(self):
        assert build_kpp(0.7).deriv(0.0) == pytest.approx(0.7, abs=1e-15)

    @pytest.mark.parametrize("r", [0.0, -1.0, np.nan, np.inf])
    def test_rejects_nonpositive(self, r):
        with pytest.raises(InvalidParameter):
            build_kpp(r)

    def test_class_invariants(self):
        assert check_reaction(build_kpp(0.7)) == []


class TestCubic:
    def test_end_slopes(self):
        f = build_cubic_bistable(1.0, 0.3)
        assert f.deriv(0.0) == pytest.approx(-0.3, abs=1e-15)
        assert f.deriv(1.0) == pytest.approx(-0.7, abs=1e-15)

    def test_balanced_integral(self):
        f = build_cubic_bistable(1.0, 0.5)
        s = np.linspace(0.0, 1.0, 20001)
        assert abs(integrate.trapezoid(f.eval(s), s)) < 1e-12

    def test_steep_cubic(self):
        assert build_cubic_bistable(20.0, 0.9).deriv(0.0) == pytest.approx(-18.0, abs=1e-12)

    @pytest.mark.parametrize("k,theta", [(1.0, 0.0), (1.0, 1.0), (0.0, 0.3), (-1.0, 0.3), (1.0, 1.5)])
    def test_rejects_bad_parameters(self, k, theta):
        with pytest.raises(InvalidParameter):
            build_cubic_bistable(k, theta)

    @pytest.mark.parametrize("theta", [0.1, 0.3, 0.5, 0.9])
    def test_class_invariants(self, theta):
        assert check_reaction(build_cubic_bistable(1.0, theta)) == []


class TestModified:
    def test_properties(self):
        fb = build_cubic_bistable(1.0, 0.3)
        g = build_modified_bistable(fb, 0.05)
        s = np.linspace(-0.2, 1.3, 3001)
        assert np.all(g.eval(s) >= fb.eval(s) - 1e-15)
        low = s <= 0.95
        assert np.array_equal(g.eval(s[low]), fb.eval(s[low]))
        for z in (0.0, 0.3, 1.05):
            assert abs(g.eval(z)) <= 1e-14
        assert g.upper == pytest.approx(1.05)
        assert check_reaction(g) == []

    def test_derivative_matches_differences(self):
        g = build_modified_bistable(build_cubic_bistable(1.0, 0.3), 0.05)
        s = np.linspace(0.9, 1.1, 101)
        h = 1e-6
        fd = (g.eval(s + h) - g.eval(s - h)) / (2 * h)
        assert np.max(np.abs(fd - g.deriv(s))) < 1e-7

    def test_too_wide_rejected(self):
        with pytest.raises(BadModification):
            build_modified_bistable(build_cubic_bistable(1.0, 0.3), 0.4)

    def test_needs_plain_cubic(self):
        with pytest.raises(WrongClass):
            build_modified_bistable(build_kpp(0.7), 0.05)


class TestBlend:
    def setup_method(self):
        self.fm = build_kpp(0.7)
        self.fb = build_cubic_bistable(1.0, 0.3)
        self.field = build_blend(self.fm, self.fb, 5.0)
        self.s = np.linspace(0.0, 1.5, 301)

    def test_pure_sides(self):
        assert np.array_equal(self.field.eval(-6.0, self.s), self.fm.eval(self.s))
        assert np.array_equal(self.field.eval(6.0, self.s), self.fb.eval(self.s))

    def test_midpoint_average(self):
        mid = 0.5 * (self.fm.eval(self.s) + self.fb.eval(self.s))
        assert np.max(np.abs(self.field.eval(0.0, self.s) - mid)) < 1e-15

    def test_zeros_everywhere(self):
        x = np.linspace(-20, 20, 401)
        assert np.all(self.field.eval(x, 0.0) == 0.0)
        assert np.max(np.abs(self.field.eval(x, 1.0))) < 1e-15

    def test_ramp_is_monotone_and_smooth(self):
        t = np.linspace(-0.2, 1.2, 14001)
        chi = smoothstep(t)
        d1 = np.diff(chi)
        assert np.all(d1 >= 0.0)
        d2 = np.diff(chi, 2) / (t[1] - t[0]) ** 2
        assert np.max(np.abs(d2)) < 6.0  # |chi''| <= 10/sqrt(3) for the quintic
        assert chi[0] == 0.0 and chi[-1] == 1.0

    def test_constrained_family_ordering(self):
        # r = k(1 - theta) makes f_m - f_b = k u (1 - u)^2 >= 0 for every u >= 0
        s = np.linspace(0.0, 3.0, 3001)
        diff = self.fm.eval(s) - self.fb.eval(s)
        assert np.min(diff) >= -1e-12
        assert np.max(np.abs(diff - s * (1 - s) ** 2)) < 1e-12
        x, S = np.meshgrid(np.linspace(-5, 5, 101), s, indexing="ij")
        assert np.max(self.field.deriv_x(x, S)) <= 1e-12

    def test_derivatives_match_differences(self):
        s = np.linspace(0.0, 1.5, 100)
        h = 1e-4
        for f in (self.fm, self.fb):
            fd = (f.eval(s + h) - f.eval(s - h)) / (2 * h)
            bound = 10 * h * h * np.max(np.abs(f.deriv2(np.linspace(0, 1.5, 1001))))
            assert np.max(np.abs(f.deriv(s) - fd)) <= bound
        x = np.linspace(-6, 6, 50)
        fd = (self.field.eval(x + h, 0.4) - self.field.eval(x - h, 0.4)) / (2 * h)
        assert np.max(np.abs(self.field.deriv_x(x, 0.4) - fd)) < 1e-7


class TestValidation:
    def test_constrained_family_passes(self):
        rep = validate_hypotheses(build_blend(build_kpp(0.7), build_cubic_bistable(1.0, 0.3), 5.0))
        assert rep.passed

    def test_unconstrained_violates_monotonicity_above_one(self):
        rep = validate_hypotheses(build_blend(build_kpp(1.0), build_cubic_bistable(1.0, 0.3), 5.0))
        entry = rep["decreasing_in_x"]
        assert not entry.passed
        assert 1.0 < entry.location[1] < 1.0 + 1.0 + 0.3
        assert rep["zeros_at_0_and_1"].passed

    def test_preconditions(self):
        fld = build_blend(build_kpp(0.7), build_cubic_bistable(1.0, 0.3), 5.0)
        with pytest.raises(InvalidParameter):
            validate_hypotheses(fld, s_max=1.0)
        with pytest.raises(InvalidParameter):
            validate_hypotheses(fld, n_x=10)

    def test_blend_needs_classes(self):
        with pytest.raises((WrongClass, InvalidParameter)):
            build_blend(build_cubic_bistable(1.0, 0.3), build_kpp(0.7), 5.0)


@settings(max_examples=40, deadline=None)
@given(k=st.floats(0.2, 20.0), theta=st.floats(0.05, 0.95))
def test_constrained_family_is_decreasing_in_x(k, theta):
    field = build_blend(build_kpp(k * (1 - theta)), build_cubic_bistable(k, theta), 5.0)
    x, s = np.meshgrid(np.linspace(-5, 5, 41), np.linspace(0, 1.5, 61), indexing="ij")
    assert np.max(field.deriv_x(x, s)) <= 1e-12 * k
