import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import sym1
from levylab import (BernsteinSpec, ExplicitSymbol, GridSpec, InsufficientSpan, InvalidModel, InverseBernstein,
                     LogCorrectedPower, PowerLaw, RateSeries, ShiftTooLarge, Stable,
                     Truncated, baseline_compare, density, factorization_gap, grad_norm, h_of_t,
                     hypothesis_report, phi_profile, rate_fit, tv_distance)
from levylab.rates import ProfileLaw, grad_series, shift_grid, theory_law, tv_series


def gauss_tv(delta, t):
    # N(0, 2t) against its shift by delta
    return math.erf(delta / (4 * math.sqrt(t)))


class TestTV:
    def test_cauchy(self, unit_cauchy):
        assert tv_distance(density(unit_cauchy, 1.0), 2.0) == pytest.approx(0.5, abs=1e-5)

    def test_zero_shift(self, layered):
        assert tv_distance(density(layered, 1.0), 0.0) == 0.0

    @pytest.mark.parametrize("delta", [0.5, 1.0, 1.3, 2.0])
    def test_gaussian(self, heat, delta):
        # sub-lattice shifts go through the spectral translation
        assert tv_distance(density(heat, 1.0), delta) == pytest.approx(gauss_tv(delta, 1.0), abs=1e-5)

    def test_gaussian_two_dimensional(self):
        dg = density(ExplicitSymbol("power", alpha=2.0, dim=2), 1.0, GridSpec(2, 256, 16.0))
        assert tv_distance(dg, [0.6, -0.8]) == pytest.approx(gauss_tv(1.0, 1.0), abs=1e-5)

    def test_symmetric_and_norms(self, tempered):
        dg = density(tempered, 1.0)
        a, b = tv_distance(dg, 0.7), tv_distance(dg, -0.7)
        assert a == pytest.approx(b, abs=1e-12)
        assert tv_distance(dg, 0.7, norm="var") == pytest.approx(2 * a, rel=1e-14)
        assert 0 < a <= 1

    def test_shift_too_large(self, heat):
        dg = density(heat, 1.0, GridSpec(1, 1024, 8.0))
        with pytest.raises(ShiftTooLarge):
            tv_distance(dg, 2.0)

    def test_bad_arguments(self, heat):
        dg = density(heat, 1.0)
        with pytest.raises(InvalidModel):
            tv_distance(dg, 1.0, norm="l2")
        with pytest.raises(InvalidModel):
            tv_distance(density(heat, 1.0, beta=1), 1.0)
        with pytest.raises(InvalidModel):
            tv_distance(dg, [1.0, 1.0])

    def test_monotone_in_time(self, layered):
        ts = np.logspace(-1, 3, 5)
        vals = [tv_distance(density(layered, t, shift_grid(layered, t, 1.0)), 1.0) for t in ts]
        assert np.all(np.diff(vals) <= 1e-3)

    @pytest.mark.parametrize("alpha", [0.5, 1.5])
    def test_stable_scale_covariance(self, alpha):
        m = sym1(Stable(alpha))
        for t in [0.1, 10.0]:
            lhs = tv_distance(density(m, t), 1.0)
            s = t ** (-1 / alpha)
            rhs = tv_distance(density(m, 1.0, shift_grid(m, 1.0, s)), s)
            assert lhs == pytest.approx(rhs, abs=1e-4)

    def test_shift_grid(self, tempered):
        assert shift_grid(tempered, 1.0, 1.0) is None
        g = GridSpec(1, 512, 3.0)
        assert shift_grid(tempered, 1.0, 5.0, g) is g
        wide = shift_grid(tempered, 0.1, 2.0)
        assert wide.L > 16
        # a width-1e-8 law cannot be widened to L > 8 at its own spacing
        with pytest.raises(ShiftTooLarge):
            shift_grid(sym1(Stable(0.5)), 1e-4, 1.0)


class TestGradNorm:
    def test_cauchy(self, unit_cauchy):
        assert grad_norm(unit_cauchy, 1.0) == pytest.approx(2 / math.pi, abs=1e-8)

    def test_gaussian(self, heat):
        # |p'| has a kink at the origin, so the lattice sum is second order in dy
        assert grad_norm(heat, 1.0) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-8)

    def test_unimodal_identity(self, layered):
        # int |p'| = 2 max p for a symmetric unimodal law
        dg = density(layered, 2.0)
        assert grad_norm(layered, 2.0) == pytest.approx(2 * dg.values.max(), rel=1e-6)

    def test_two_dimensional_gaussian(self):
        # int |grad p| for N(0, 2t I_2) is sqrt(pi / (4t)); the cone of |grad p| at 0 limits the lattice sum
        m = ExplicitSymbol("power", alpha=2.0, dim=2)
        exact = math.sqrt(math.pi / 4)
        coarse = abs(grad_norm(m, 1.0, GridSpec(2, 256, 16.0)) / exact - 1)
        fine = abs(grad_norm(m, 1.0, GridSpec(2, 512, 16.0)) / exact - 1)
        assert fine < 1e-5 and fine < coarse / 4

    def test_monotone(self, tempered):
        vals = [grad_norm(tempered, t) for t in np.logspace(-2, 2, 9)]
        assert np.all(np.diff(vals) <= 1e-3)

    @settings(max_examples=8, deadline=None)
    @given(x=st.floats(-3.0, 3.0))
    def test_stable_scaling(self, x):
        a = 1.5
        m = sym1(Stable(a))
        t = 10.0 ** x
        np.testing.assert_allclose(grad_norm(m, t), t ** (-1 / a) * grad_norm(m, 1.0), rtol=1e-4)


class TestFactorization:
    def test_no_residual(self, truncated):
        # jumps never exceed r0 = 1, so truncating at r >= 1 changes nothing
        gap = factorization_gap(truncated, 1.5, 1.0)
        assert gap.tv_full == pytest.approx(gap.tv_truncated, abs=1e-6)

    def test_layered_gap(self, layered):
        t = 100.0
        r = float(h_of_t(phi_profile(layered), t))
        gap = factorization_gap(layered, r, t, shift=1.0)
        assert gap.holds and gap.tv_truncated > gap.tv_full

    def test_zero_shift(self, layered):
        gap = factorization_gap(layered, 1.0, 1.0, shift=0.0)
        assert gap.tv_full == gap.tv_truncated == 0.0

    @pytest.mark.parametrize("r", [0.2, 1.0, 5.0])
    def test_holds(self, tempered, r):
        assert factorization_gap(tempered, r, 1.0, shift=1.0).holds


class TestLaws:
    def test_power(self):
        law = PowerLaw(-0.5)
        np.testing.assert_allclose(law(np.array([4.0, 100.0])), [0.5, 0.1])
        assert law.forward(law.inverse(3.0)) == pytest.approx(3.0)
        with pytest.raises(InvalidModel):
            PowerLaw(0.5)
        with pytest.raises(InvalidModel):
            law(-1.0)

    def test_log_corrected(self):
        law = LogCorrectedPower(1.0, 0.5)
        t = 0.01
        assert law(t) == pytest.approx(100 * math.log(101) ** -0.25)
        assert law.forward(law.inverse(7.0)) == pytest.approx(7.0, rel=1e-10)
        assert law.exponent == "non-power"
        assert LogCorrectedPower(0.5, 0.0).exponent == -2.0

    def test_inverse_bernstein(self):
        spec = BernsteinSpec(1.0, 0.5)
        law = InverseBernstein(spec, "large")
        assert law.exponent == pytest.approx(-1 / 1.5)
        r = law.inverse(0.3)
        assert float(spec.f(r * r)) == pytest.approx(0.3, rel=1e-12)
        assert InverseBernstein(spec, "small").exponent == "non-power"
        with pytest.raises(InvalidModel):
            InverseBernstein(spec, "medium")

    def test_theory_laws(self, layered, sbm, tempered):
        assert theory_law(layered, "small") == PowerLaw(-2.0)
        assert theory_law(layered, "large") == PowerLaw(-0.5)
        assert theory_law(sbm, "small") == LogCorrectedPower(1.0, 0.5)
        assert isinstance(theory_law(sbm, "large"), InverseBernstein)
        assert isinstance(theory_law(tempered, "large"), ProfileLaw)
        assert theory_law(sym1(Stable(1.2))) == PowerLaw(-1 / 1.2)
        with pytest.raises(InvalidModel):
            theory_law(layered, "medium")


class TestSeries:
    def test_validation(self):
        with pytest.raises(InvalidModel):
            RateSeries("tv", [1.0, 2.0], [0.5, 0.6])
        with pytest.raises(InvalidModel):
            RateSeries("tv", [2.0, 1.0], [0.5, 0.4])
        with pytest.raises(InvalidModel):
            RateSeries("energy", [1.0], [1.0])
        with pytest.raises(InvalidModel):
            RateSeries("grad", [1.0, 2.0], [1.0, 0.0])
        # 1% lattice slack is tolerated
        RateSeries("tv", [1.0, 2.0], [0.5, 0.504])

    def test_exact_power(self):
        t = np.logspace(0, 3, 12)
        fit = rate_fit(RateSeries("tv", t, 3 * t ** -2.0), PowerLaw(-2.0))
        assert fit.slope == pytest.approx(-2.0, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
        assert fit.ratio_stats["min"] == pytest.approx(3.0)
        assert fit.ratio_stats["drift"] < 1e-12
        assert fit.to_dict()["theory_exponent"] == -2.0

    def test_insufficient_span(self):
        t = np.logspace(0, 1.5, 12)
        with pytest.raises(InsufficientSpan):
            rate_fit(RateSeries("tv", t, t ** -1.0), PowerLaw(-1.0))
        t = np.logspace(0, 3, 5)
        with pytest.raises(InsufficientSpan):
            rate_fit(RateSeries("tv", t, t ** -1.0), PowerLaw(-1.0))

    @settings(max_examples=25, deadline=None)
    @given(kind=st.sampled_from(["power", "log", "bernstein"]), c=st.floats(0.1, 10.0),
           a=st.floats(0.3, 1.9), b=st.floats(0.0, 0.05))
    def test_law_data_has_no_drift(self, kind, c, a, b):
        if kind == "power":
            law = PowerLaw(-1 / a)
        elif kind == "log":
            law = LogCorrectedPower(a, b * 10)
        else:
            law = InverseBernstein(BernsteinSpec(a, b), "large")
        t = np.logspace(1, 4, 10)
        fit = rate_fit(RateSeries("tv", t, c * law(t)), law)
        assert fit.ratio_stats["drift"] < 1e-6

    def test_decade_drift(self):
        t = np.logspace(0, 2, 21)
        v = t ** -1.0 * np.where(t > 10, 1.05, 1.0)
        fit = rate_fit(RateSeries("tv", t, v), PowerLaw(-1.0))
        assert fit.ratio_stats["drift_per_decade"] == pytest.approx(0.05)


class TestHypotheses:
    def test_power_doubling(self):
        rep = hypothesis_report(PowerLaw(-2.0), "large")
        assert rep["doubling_max"] == pytest.approx(4.0, rel=1e-12)
        # f(r) |log r| = r^0.5 |log r| -> 0; the grid minimum sits at r = 1e-7
        assert rep["logtest_min"] == pytest.approx(math.sqrt(1e-7) * math.log(1e7), rel=1e-12)

    def test_example_bernstein(self):
        rep = hypothesis_report(BernsteinSpec(1.0, 1.0), "small")
        assert rep["doubling_max"] < 4.1
        assert rep["logtest_min"] is None

    def test_bad_input(self):
        with pytest.raises(InvalidModel):
            hypothesis_report(3.0)
        with pytest.raises(InvalidModel):
            hypothesis_report(PowerLaw(-1.0), "never")


class TestBaseline:
    def test_stable_beats_baseline(self):
        m = sym1(Stable(0.5))
        s = tv_series(m, np.logspace(1, 4, 10), 1.0)
        rows = baseline_compare(s, 1.0)
        assert rows[0][2] == pytest.approx(rows[0][1])
        assert not rows[0][3] and rows[-1][3]
        fit = rate_fit(s, PowerLaw(-2.0))
        assert fit.slope == pytest.approx(-2.0, abs=0.05)

    def test_gaussian_matches_baseline(self, heat):
        s = tv_series(heat, np.logspace(1, 4, 10), 1.0)
        rows = baseline_compare(s, 1.0)
        assert not any(r[3] for r in rows)
        assert rate_fit(s, PowerLaw(-0.5)).slope == pytest.approx(-0.5, abs=1e-3)

    @pytest.mark.parametrize("norm,cap", [("tv", 1.0), ("var", 2.0)])
    def test_cap(self, norm, cap):
        # the calibration point sits on the cap, so every baseline is capped there
        t = np.array([1e-4, 1e-2, 1.0])
        rows = baseline_compare(RateSeries("tv", t, np.array([cap, 0.6, 0.1])), 0.0, norm=norm)
        np.testing.assert_allclose([r[2] for r in rows[:2]], [cap, cap * 0.1], rtol=1e-14)
        assert all(r[2] <= cap for r in rows)


def test_grad_series_sorted(tempered):
    s = grad_series(tempered, [4.0, 1.0, 2.0])
    assert list(s.t) == [1.0, 2.0, 4.0]
    assert s.quantity == "grad"


def test_truncated_family_series():
    # compactly supported jumps: TV decays like a Gaussian at large t
    m = sym1(Truncated(1.0, 1.0))
    fit = rate_fit(tv_series(m, np.logspace(1, 4, 10), 1.0), PowerLaw(-0.5))
    assert fit.slope == pytest.approx(-0.5, abs=0.02)
