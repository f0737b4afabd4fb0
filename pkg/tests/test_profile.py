import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import sym1
from levylab import (BernsteinSpec, DegenerateProfile, ExplicitSymbol, InvalidModel, OutOfRange,
                     PhiProfile, Polar, SpectralMeasure, Stable, Tempered, h_of_t,
                     phi_inverse, phi_profile, symbol_values)
from levylab.rates import hypothesis_report


class TestProfile:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.0])
    def test_power_exact_at_nodes(self, alpha):
        p = phi_profile(ExplicitSymbol("power", alpha=alpha))
        np.testing.assert_allclose(p.phi_values, p.rho_grid ** alpha, rtol=1e-12)

    def test_cauchy_linear(self, cauchy):
        p = phi_profile(cauchy, 1e-6, 1e6, 200)
        np.testing.assert_allclose(p.phi_values, math.pi * p.rho_grid, rtol=1e-8)

    @pytest.mark.parametrize("alpha", [0.6, 1.5])
    def test_two_dimensional_brute_force(self, alpha):
        # atoms on e1 (weight 1) and e2 (weight 3); |cos|^a + 3|sin|^a peaks off the axes
        sp = SpectralMeasure(2, (((1.0, 0.0), 1.0), ((0.0, 1.0), 3.0)))
        m = Polar(sp, Stable(alpha))
        p = phi_profile(m, 1e-2, 1e2, 32)
        ang = 2 * np.pi * np.arange(360) / 360
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        brute = np.array([symbol_values(m, r * dirs).real.max() for r in p.rho_grid])
        brute = np.maximum.accumulate(brute)
        assert np.all(p.phi_values <= brute * (1 + 1e-9))
        assert np.all(p.phi_values >= 0.98 * brute)
        axis = symbol_values(m, np.stack([0 * p.rho_grid, p.rho_grid], axis=1)).real
        assert np.all(p.phi_values > axis)

    def test_nondecreasing(self, layered, tempered, sbm):
        for m in (layered, tempered, sbm):
            assert np.all(np.diff(phi_profile(m).phi_values) >= 0)

    @pytest.mark.parametrize("lam", [1, 2, 5, 10])
    def test_subquadratic_growth(self, lam, layered, truncated, sbm):
        for m in (layered, truncated, sbm):
            p = phi_profile(m, 1e-6, 1e6, 300)
            rho = p.rho_grid[p.rho_grid * lam <= 1e6]
            assert np.all(p.phi(lam * rho) <= 2 * (1 + lam ** 2) * p.phi(rho) * (1 + 1e-9))

    def test_degenerate(self):
        # rho^2 underflows on the whole grid
        with pytest.raises(DegenerateProfile):
            phi_profile(ExplicitSymbol("power", alpha=2.0), 1e-200, 1e-170, 32)

    def test_bad_grid(self, cauchy):
        with pytest.raises(InvalidModel):
            phi_profile(cauchy, 1.0, 0.5)
        with pytest.raises(InvalidModel):
            phi_profile(cauchy, 1e-3, 1e3, 8)
        with pytest.raises(InvalidModel):
            PhiProfile(np.array([1.0, 2.0]), np.array([2.0, 1.0]), np.zeros((1, 1)))


class TestInverse:
    @pytest.mark.parametrize("alpha", [0.5, 1.3, 2.0])
    def test_power(self, alpha):
        p = phi_profile(ExplicitSymbol("power", alpha=alpha))
        for s in [1e-3, 0.7, 1.0, 42.0]:
            np.testing.assert_allclose(phi_inverse(p, s), s ** (1 / alpha), rtol=1e-10)
        t = np.array([1e-2, 1.0, 30.0])
        np.testing.assert_allclose(h_of_t(p, t), t ** (1 / alpha), rtol=1e-10)

    def test_cauchy_h(self, cauchy):
        p = phi_profile(cauchy)
        t = np.array([1e-3, 0.5, 2.0, 1e3])
        np.testing.assert_allclose(h_of_t(p, t), math.pi * t, rtol=1e-8)

    def test_out_of_range(self, cauchy):
        p = phi_profile(cauchy, 1e-3, 1e3, 64)
        with pytest.raises(OutOfRange) as err:
            phi_inverse(p, 1e5)
        lo, hi = err.value.details["admissible"]
        assert lo == pytest.approx(math.pi * 1e-3) and hi == pytest.approx(math.pi * 1e3)
        with pytest.raises(OutOfRange):
            h_of_t(p, -1.0)

    def test_h_increasing(self, layered):
        t = np.logspace(-3, 4, 40)
        assert np.all(np.diff(h_of_t(phi_profile(layered), t)) > 0)

    @settings(max_examples=40, deadline=None)
    @given(x=st.floats(-7.0, 9.0))
    def test_round_trip(self, x):
        p = phi_profile(sym1(Tempered(1.2, 0.5)))
        rho = 10.0 ** x
        s = float(symbol_values(p.source, np.array([rho])).real[0])
        np.testing.assert_allclose(phi_inverse(p, s), rho, rtol=1e-6)

    def test_unrefined_table_inverse(self, tempered):
        # log-log interpolation alone is already close for a smooth profile
        p = phi_profile(tempered)
        s = 3.7
        assert phi_inverse(p, s, refine=False) == pytest.approx(phi_inverse(p, s), rel=1e-3)

    def test_subordinate_asymptote(self, sbm):
        # symbol f(|xi|^2) with log(1 + r^2) ~ 2 log r: phi^-1(s) ~ 2^(-b/(2a)) g(s) for large s
        a, b = 1.0, 0.5
        p = phi_profile(sbm)
        s = 1e3
        g = (s * math.log(1 + s) ** (-b / 2)) ** (1 / a)
        np.testing.assert_allclose(phi_inverse(p, s) / g, 2 ** (-b / (2 * a)), rtol=0.15)
        ss = np.logspace(2, 5, 7)
        ratios = [phi_inverse(p, x) / (x * math.log(1 + x) ** (-b / 2)) for x in ss]
        assert max(ratios) / min(ratios) < 1.5


class TestDoubling:
    @pytest.mark.parametrize("alpha,beta", [(1.0, 0.5), (1.0, 1.0), (0.5, 0.0), (1.8, 0.1)])
    @pytest.mark.parametrize("regime", ["small", "large"])
    def test_bounded(self, alpha, beta, regime):
        rep = hypothesis_report(BernsteinSpec(alpha, beta), regime)
        assert rep["doubling_max"] < 2 ** (2 / alpha + 1)

    def test_power_ratio(self):
        # f(r) = r^a on the symbol side: f^-1(2s)/f^-1(s) = 2^(1/a)
        rep = hypothesis_report(BernsteinSpec(0.5, 0.0), "large")
        np.testing.assert_allclose(rep["doubling_max"], 4.0, rtol=1e-6)
