import math

import numpy as np
import pytest

from minigraph.errors import DomainError, NoSolutionError, UsageError
from minigraph.surfaces import (
    ProfileParams, catenoid_height, catenoid_height_deficit, catenoid_profile, height_limit, invert_catenoid_height,
    invert_translation_height, lambda_profile, lambda_profile_many, m1_height, m1_height_many,
    mu_plus, translation_height, translation_height_excess,
)

import oracles

HALF = ProfileParams.md(2, 0.5)


class TestLambda:
    def test_zero_at_origin(self):
        assert lambda_profile(HALF, 0.0).value == 0.0

    def test_odd(self):
        for rho in (0.3, 1.0, 2.7):
            assert lambda_profile(HALF, -rho).value == -lambda_profile(HALF, rho).value

    def test_against_oracle(self):
        assert lambda_profile(HALF, 1.0).value == pytest.approx(oracles.lam(0.5, 2, 1.0), rel=1e-8)

    def test_singular_start_against_oracle(self):
        p = ProfileParams.md(3, 3.0)
        assert lambda_profile(p, 2.5).value == pytest.approx(oracles.lam(3.0, 3, 2.5), rel=1e-8)

    def test_below_start_rejected(self):
        p = ProfileParams.md(2, 2.0)
        with pytest.raises(DomainError):
            lambda_profile(p, 0.5 * p.a)

    def test_nonpositive_d_rejected(self):
        with pytest.raises(UsageError):
            ProfileParams(2, "Md", d=0.0)

    def test_increasing_in_rho_and_d(self):
        rhos = np.linspace(-3, 3, 61)
        vals = [lambda_profile(HALF, r).value for r in rhos]
        assert np.all(np.diff(vals) > 0)
        ds = [0.1, 0.3, 0.5, 0.7, 0.9, 0.99]
        at1 = [lambda_profile(ProfileParams.md(2, d), 1.0).value for d in ds]
        assert np.all(np.diff(at1) > 0)

    def test_blows_up_as_d_tends_to_one(self):
        near = lambda_profile(ProfileParams.md(2, 1 - 1e-6), 1.0).value
        assert near > 10 * lambda_profile(HALF, 1.0).value

    def test_vectorized_matches_scalar(self):
        rho = np.array([-2.0, -0.3, 0.0, 0.7, 2.5])
        got = lambda_profile_many(HALF, rho)
        want = [lambda_profile(HALF, r).value for r in rho]
        assert np.allclose(got, want, rtol=1e-12, atol=1e-14)


class TestM1:
    def test_closed_form_in_dimension_two(self):
        for rho in (0.01, 0.5, 1.0, 4.0):
            assert m1_height(2, rho).value == pytest.approx(-math.log(math.tanh(rho / 2)), rel=1e-12)

    def test_decreasing(self):
        vals = [m1_height(3, r).value for r in np.linspace(0.05, 6, 30)]
        assert np.all(np.diff(vals) < 0)

    def test_limits(self):
        assert m1_height(2, 10.0).value < 1e-3
        assert m1_height(2, 0.01).value > 4.0
        assert m1_height(2, 10.0).value == pytest.approx(oracles.m1(2, 10.0), rel=1e-7)
        assert m1_height(2, 0.01).value == pytest.approx(oracles.m1(2, 0.01), rel=1e-7)

    def test_domain(self):
        with pytest.raises(DomainError):
            m1_height(2, 0.0)

    def test_vectorized(self):
        rho = np.array([0.02, 0.3, 1.0, 3.0])
        for n in (2, 3):
            want = [m1_height(n, r).value for r in rho]
            assert np.allclose(m1_height_many(n, rho), want, rtol=1e-11)


class TestCatenoid:
    def test_zero_neck(self):
        assert catenoid_height(0.0, 2).value == 0.0

    def test_limit(self):
        for n in (2, 3):
            assert abs(catenoid_height(20.0, n).value - height_limit(n)) < 1e-3

    def test_oracle(self):
        assert catenoid_height(1.0, 3).value == pytest.approx(oracles.catenoid_R(1.0, 3), rel=1e-8)

    def test_bounds_and_monotonicity(self):
        a = np.arange(1, 201) * 0.1
        for n in (2, 3, 4):
            r = np.array([catenoid_height(x, n).value for x in a])
            gap = np.array([catenoid_height_deficit(x, n).value for x in a])
            # near a = 20 the float64 values of R saturate at the limit, so
            # strictness is read off the directly computed gap to the limit
            assert np.all(np.diff(r) >= 0)
            assert np.all(np.diff(gap) < 0) and np.all(gap > 0)
            assert np.allclose(r + gap, height_limit(n), rtol=0, atol=1e-15)
            assert np.all((r > 0) & (r <= height_limit(n)))

    def test_profile_reaches_height(self):
        a = 0.7
        assert catenoid_profile(a, a, 2).value == 0.0
        assert catenoid_profile(a, 40.0, 2).value == pytest.approx(catenoid_height(a, 2).value, abs=1e-12)

    def test_negative(self):
        with pytest.raises(DomainError):
            catenoid_height(-0.1, 2)

    def test_inverse(self):
        assert invert_catenoid_height(0.0, 2) == 0.0
        for n in (2, 3):
            for t in np.linspace(0.05, 0.95, 7) * height_limit(n):
                a = invert_catenoid_height(t, n)
                assert catenoid_height(a, n).value == pytest.approx(t, abs=1e-9)

    def test_inverse_no_solution(self):
        with pytest.raises(NoSolutionError):
            invert_catenoid_height(math.pi / 2, 2)
        with pytest.raises(DomainError):
            invert_catenoid_height(-0.1, 2)


class TestTranslation:
    def test_mu_plus_empty(self):
        assert mu_plus(1.0, 1.0, 2).value == 0.0

    def test_mu_plus_limit(self):
        assert mu_plus(1.0, 30.0, 2).value == pytest.approx(translation_height(1.0, 2).value, abs=1e-6)

    def test_mu_plus_oracle(self):
        assert mu_plus(1.0, 2.0, 2).value == pytest.approx(oracles.mu_plus(1.0, 2.0, 2), rel=1e-8)

    def test_mu_plus_increasing(self):
        vals = [mu_plus(0.5, r, 3).value for r in np.linspace(0.5, 8, 20)]
        assert np.all(np.diff(vals) > 0)

    def test_errors(self):
        with pytest.raises(DomainError):
            mu_plus(1.0, 0.5, 2)
        with pytest.raises(UsageError):
            mu_plus(0.0, 1.0, 2)
        with pytest.raises(DomainError):
            translation_height(0.0, 2)

    def test_limits(self):
        assert abs(translation_height(20.0, 2).value - math.pi / 2) < 1e-3
        assert translation_height(0.01, 2).value > 4
        assert translation_height(0.01, 2).value == pytest.approx(oracles.translation_T(0.01, 2), rel=1e-7)

    def test_decreasing_above_limit(self):
        a = np.arange(1, 201) * 0.1
        for n in (2, 3, 4):
            t = np.array([translation_height(x, n).value for x in a])
            gap = np.array([translation_height_excess(x, n).value for x in a])
            assert np.all(np.diff(t) <= 0)
            assert np.all(np.diff(gap) < 0) and np.all(gap > 0)
            assert np.allclose(t - gap, height_limit(n), rtol=0, atol=1e-15)

    def test_inverse(self):
        a = invert_translation_height(2.0, 2)
        assert translation_height(a, 2).value == pytest.approx(2.0, abs=1e-9)
        with pytest.raises(NoSolutionError):
            invert_translation_height(1.0, 2)
