import math

import numpy as np
import pytest

from horocount.latcount import CountingError, EllipsoidSpec, count_primitive_moebius
from horocount.orbits import (
    chimney_count,
    fit_error_exponent,
    horoball_count,
    radius_of_t,
    stabilizer_order,
    sweep,
    t_of_radius,
    theory_slope,
)
from horocount.quadform import GroupElement, QuadForm, act, constants


class TestRadiusMaps:
    def test_example(self):
        assert t_of_radius(2, 2.0) == pytest.approx(2.0 * math.sqrt(2.0) * math.log(2.0), rel=1e-14)
        assert t_of_radius(3, 1.0) == 0.0

    def test_roundtrip(self):
        rng = np.random.default_rng(31)
        for d in (2, 3, 5):
            for r in rng.uniform(0.1, 50.0, size=10):
                assert radius_of_t(d, t_of_radius(d, float(r))) == pytest.approx(float(r), rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(CountingError):
            t_of_radius(2, 0.0)


class TestStabilizer:
    def test_identity_forms(self):
        assert stabilizer_order(QuadForm.identity(2)) == 2
        assert stabilizer_order(QuadForm.identity(3)) == 24
        assert stabilizer_order(QuadForm.identity(4)) == 96

    def test_generic_form(self):
        g = GroupElement.from_matrix([[1.0, 0.0], [0.37, 1.0]])
        assert stabilizer_order(act(QuadForm.identity(2), g)) == 1

    def test_invariant_under_integer_conjugation(self):
        gamma = GroupElement.from_matrix([[2, 1], [1, 1]])
        assert stabilizer_order(act(QuadForm.identity(2), gamma)) == 2

    def test_rejects_large_dim(self):
        with pytest.raises(CountingError):
            stabilizer_order(QuadForm.identity(5))


class TestDictionary:
    def test_chimney_example(self):
        t = 2.0 * math.sqrt(2.0) * math.log(2.0)
        res = chimney_count(QuadForm.identity(2), t)
        assert res.count == 2
        assert res.sigma_q == 2
        assert res.predicted == pytest.approx((3.0 / math.pi) * 4.0, rel=1e-12)
        assert res.R == pytest.approx(2.0, rel=1e-12)

    def test_horoball_example(self):
        t = 2.0 * math.sqrt(2.0) * math.log(2.0)
        res = horoball_count(QuadForm.identity(2), t)
        assert res.count == 4
        assert res.predicted == pytest.approx(12.0 / math.pi, rel=1e-12)

    def test_chimney_equals_horoball_prediction_d2(self):
        for t in (1.0, 4.0, 9.0):
            a = chimney_count(QuadForm.identity(2), t)
            b = horoball_count(QuadForm.identity(2), t)
            assert a.predicted == pytest.approx(b.predicted, rel=1e-14)
            assert a.rel_error == pytest.approx(b.rel_error, rel=1e-12)

    def test_strip_asymptotic_form(self):
        # the d=2 prediction equals 3/(pi y) with y = e^{-T/sqrt 2}
        for t in (2.0, 5.0):
            res = horoball_count(QuadForm.identity(2), t)
            y = math.exp(-t / math.sqrt(2.0))
            assert res.predicted == pytest.approx(3.0 / (math.pi * y), rel=1e-12)

    def test_dictionary_exactness(self):
        cst2 = constants(2)
        for t in (2.0, 4.5, 7.0):
            res = chimney_count(QuadForm.identity(2), t)
            n1 = count_primitive_moebius(
                EllipsoidSpec(QuadForm.identity(2), radius_of_t(2, t))).n1
            assert cst2.alpha * res.sigma_q * res.count == n1
            assert 2 * horoball_count(QuadForm.identity(2), t).count == n1

    def test_empty_chimney(self):
        res = chimney_count(QuadForm.identity(2), -1e9, sigma=2)
        assert res.count == 0

    def test_divisibility_error(self):
        with pytest.raises(CountingError):
            chimney_count(QuadForm.identity(2), 2.0 * math.sqrt(2.0) * math.log(2.0), sigma=3)

    def test_unimodular_invariance(self):
        gamma = GroupElement.from_matrix([[1, 1], [1, 2]])
        moved = act(QuadForm.identity(2), gamma)
        for t in (2.0, 5.0):
            a = chimney_count(QuadForm.identity(2), t, sigma=2)
            b = chimney_count(moved, t, sigma=2)
            assert a.count == b.count

    def test_symmetric_d3_form_flags_boundary(self):
        # the exact chimney division only holds off the symmetric locus;
        # the standard form in d = 3 sits on it (n1 = 26 at R = 2 is not a
        # multiple of sigma = 24) and must be reported, while the
        # horosphere dictionary stays exact for every form
        t = t_of_radius(3, 2.0)
        with pytest.raises(CountingError):
            chimney_count(QuadForm.identity(3), t)
        n1 = count_primitive_moebius(EllipsoidSpec(QuadForm.identity(3), 2.0)).n1
        assert n1 == 26
        assert 2 * horoball_count(QuadForm.identity(3), t).count == n1

    def test_dictionary_exactness_d3_generic(self):
        import numpy as np
        g = GroupElement.from_matrix(np.array([[1, 0, 0], [0.31, 1, 0], [0.11, 0.27, 1.0]]))
        q = act(QuadForm.identity(3), g)
        for t in (3.0, 6.0):
            res = chimney_count(q, t)
            n1 = count_primitive_moebius(EllipsoidSpec(q, radius_of_t(3, t))).n1
            assert res.sigma_q == 1
            assert res.count == n1


class TestFit:
    def test_exact_exponential(self):
        ts = np.linspace(0.0, 10.0, 30)
        series = [(t, math.exp(-0.5 * t)) for t in ts]
        fit = fit_error_exponent(series, envelope=False)
        assert fit.slope == pytest.approx(-0.5, abs=1e-9)
        assert fit.r2 > 0.999999

    def test_oscillating_envelope(self):
        ts = np.linspace(0.0, 20.0, 201)
        series = [(t, math.exp(-0.5 * t) * math.cos(t)) for t in ts]
        fit = fit_error_exponent(series, envelope=True)
        assert -0.55 <= fit.slope <= -0.45
        assert fit.n_points >= 4

    def test_degenerate_series(self):
        with pytest.raises(CountingError):
            fit_error_exponent([(0.0, 1.0), (1.0, 0.5), (2.0, 0.2)], envelope=False)
        ts = np.linspace(0.0, 5.0, 12)
        with pytest.raises(CountingError):
            # monotone series has no interior envelope maxima
            fit_error_exponent([(t, math.exp(-t)) for t in ts], envelope=True)

    def test_theory_slopes(self):
        assert theory_slope(2) == pytest.approx(-0.4844361, abs=1e-6)
        assert theory_slope(3) == pytest.approx(-0.6278755, abs=1e-6)
        assert theory_slope(4) == pytest.approx(-43.0 * math.sqrt(3.0) / 104.0, rel=1e-12)
        assert theory_slope(8) == pytest.approx(-math.sqrt(7.0 / 8.0), rel=1e-12)


class TestSweep:
    def test_sorted_and_threaded(self):
        ts = [4.0, 2.0, 6.0]
        out1 = sweep(QuadForm.identity(2), ts, kind="horoball")
        out2 = sweep(QuadForm.identity(2), ts, kind="horoball", threads=3)
        assert [r.T for r in out1] == sorted(ts)
        assert [(r.T, r.count) for r in out1] == [(r.T, r.count) for r in out2]

    def test_ratio_trend_negative_slope(self):
        radii = np.exp(np.linspace(math.log(8.0), math.log(256.0), 17))
        series = []
        for r in radii:
            t = t_of_radius(2, float(r))
            series.append((t, horoball_count(QuadForm.identity(2), t, mode="exact").rel_error))
        fit = fit_error_exponent(series, envelope=True)
        assert fit.slope < 0.0
