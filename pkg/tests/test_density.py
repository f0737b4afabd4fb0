import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import sym1
from levylab import (DensityGrid, ExplicitSymbol, GridSpec, GridUnderresolved, HWViolated, InvalidModel,
                     Polar, SpectralMeasure, Stable, Tempered, Truncation, density, phi_profile,
                     rescaled_density, symbol_values)
from levylab.density import auto_grid


def centre(dg):
    return dg.grid.N // 2


class TestGridSpec:
    def test_derived_quantities(self):
        g = GridSpec(1, 1024, 8.0)
        assert g.dy == 16 / 1024
        assert g.xi_max == pytest.approx(math.pi * 1024 / 16)
        assert g.axis()[g.N // 2] == 0.0

    @pytest.mark.parametrize("kw", [dict(N=1000), dict(N=8), dict(L=0.0), dict(L=math.inf), dict(dim=3)])
    def test_invalid(self, kw):
        with pytest.raises(InvalidModel):
            GridSpec(**{"dim": 1, "N": 1024, "L": 1.0, **kw})


class TestClosedForms:
    def test_cauchy(self, unit_cauchy):
        dg = density(unit_cauchy, 1.0)
        y = dg.y
        near = np.abs(y) <= 20
        exact = 1 / (math.pi * (1 + y[near] ** 2))
        assert np.abs(dg.values[near] - exact).max() <= 1e-6
        assert abs(dg.diagnostics["mass"] - 1) <= 1e-4

    def test_gaussian(self, heat):
        dg = density(heat, 1.0)
        np.testing.assert_allclose(dg.values[centre(dg)], 1 / math.sqrt(4 * math.pi), rtol=1e-10)
        exact = np.exp(-dg.y ** 2 / 4) / math.sqrt(4 * math.pi)
        assert np.abs(dg.values - exact).max() <= 1e-10
        var = float((dg.y ** 2 * dg.values).sum() * dg.grid.dy)
        np.testing.assert_allclose(var, 2.0, rtol=1e-8)

    @pytest.mark.parametrize("t", [0.3, 2.0])
    def test_heat_two_dimensional(self, t):
        m = ExplicitSymbol("power", alpha=2.0, dim=2)
        dg = density(m, t, GridSpec(2, 256, 12.0 * math.sqrt(t)))
        np.testing.assert_allclose(dg.values[128, 128], 1 / (4 * math.pi * t), rtol=1e-9)
        np.testing.assert_allclose(dg.diagnostics["mass"], 1.0, atol=1e-9)

    def test_cauchy_derivative(self, unit_cauchy):
        dg = density(unit_cauchy, 1.0, beta=1)
        y = dg.y
        near = np.abs(y) <= 20
        exact = -2 * y[near] / (math.pi * (1 + y[near] ** 2) ** 2)
        assert np.abs(dg.values[near] - exact).max() <= 1e-6


class TestInvariants:
    def test_symmetry(self, layered):
        v = density(layered, 1.0).values
        # y_j and y_{N-j} are mirror images
        assert np.abs(v[1:] - v[1:][::-1]).max() <= 1e-10 * v.max()

    @pytest.mark.parametrize("fixture", ["cauchy", "layered", "tempered", "truncated"])
    def test_mass_and_sign(self, fixture, request):
        m = request.getfixturevalue(fixture)
        dg = density(m, 1.0)
        assert abs(dg.diagnostics["mass"] - 1) <= 1e-4
        # symmetric decreasing jump densities give unimodal laws
        assert dg.values.min() >= -1e-10
        assert dg.diagnostics["imag_residual"] < 1e-8 * dg.values.max()

    def test_plancherel(self, tempered):
        t = 0.7
        dg = density(tempered, t, dealias=False)
        g = dg.grid
        k = g.freqs()
        # transform of the lattice density back to frequencies
        fhat = np.fft.fft(dg.values) * g.dy * np.exp(1j * k * g.L)
        target = np.exp(-t * symbol_values(tempered, k).real)
        assert np.abs(fhat - target).max() <= 1e-6

    def test_derivative_consistency(self, tempered, rng):
        p = density(tempered, 1.0)
        dp = density(tempered, 1.0, beta=1)
        dy = p.grid.dy
        idx = rng.integers(10, p.grid.N - 10, size=10)
        fd = (p.values[idx + 1] - p.values[idx - 1]) / (2 * dy)
        assert np.abs(fd - dp.values[idx]).max() <= 1e-4 * np.abs(dp.values).max()

    def test_second_derivative_consistency(self, tempered, rng):
        p = density(tempered, 1.0)
        d2 = density(tempered, 1.0, beta=2)
        dy = p.grid.dy
        idx = rng.integers(10, p.grid.N - 10, size=10)
        fd = (p.values[idx + 1] - 2 * p.values[idx] + p.values[idx - 1]) / dy ** 2
        assert np.abs(fd - d2.values[idx]).max() <= 1e-4 * np.abs(d2.values).max()

    @pytest.mark.parametrize("r", [0.3, 1.0, 3.0])
    def test_truncation_lifts_transform(self, layered, r):
        g = auto_grid(layered, 1.0)
        k = g.freqs()
        full = symbol_values(layered, k).real
        trunc = symbol_values(Truncation(layered, r), k).real
        assert np.all(np.exp(-trunc) >= np.exp(-full))

    def test_deterministic(self, layered):
        a = density(layered, 2.0).values
        b = density(layered, 2.0).values
        assert np.array_equal(a, b)

    def test_dealiasing_removes_images(self, cauchy):
        # periodic images of the |y|^-2 tail, without and with the tail correction
        t = 1 / math.pi  # Re Phi = pi |xi|, so this is the standard Cauchy law
        g = GridSpec(1, 2 ** 14, 50.0)
        exact = 1 / (math.pi * (1 + g.axis() ** 2))
        raw = density(cauchy, t, g, dealias=False)
        fixed = density(cauchy, t, g)
        assert np.abs(raw.values - exact).max() > 1e-4
        assert np.abs(fixed.values - exact).max() < 1e-8
        # periodisation conserves mass, so only the corrected lattice accounts for the tail
        assert raw.diagnostics["mass"] == pytest.approx(1.0, abs=1e-12)
        assert fixed.diagnostics["tail_mass"] == pytest.approx(2 / math.pi * math.atan(1 / 50.0), rel=1e-3)


@settings(max_examples=10, deadline=None)
@given(t=st.floats(0.05, 20.0))
def test_stable_scaling(t):
    # p_t(y) = t^-1/a p_1(t^-1/a y) for a = 1.5
    a = 1.5
    m = ExplicitSymbol("power", alpha=a)
    g1 = GridSpec(1, 2 ** 14, 60.0)
    h = t ** (1 / a)
    pt = density(m, t, GridSpec(1, 2 ** 14, 60.0 * h))
    p1 = density(m, 1.0, g1)
    np.testing.assert_allclose(h * pt.values, p1.values, atol=1e-12)


class TestRescaled:
    def test_power_collapse(self):
        m = ExplicitSymbol("power", alpha=1.5)
        prof = phi_profile(m)
        g = GridSpec(1, 2 ** 14, 60.0)
        base = rescaled_density(m, 1.0, prof, g).values
        for t in [0.01, 3.0, 400.0]:
            gt = rescaled_density(m, t, prof, g)
            assert gt.meta["h"] == pytest.approx(t ** (1 / 1.5), rel=1e-10)
            assert np.abs(gt.values - base).max() <= 1e-6

    def test_identity_scale(self, cauchy):
        # phi = pi rho so h(1/pi) = 1 and no rescaling happens
        t = 1 / math.pi
        prof = phi_profile(cauchy)
        g = GridSpec(1, 2 ** 14, 50.0)
        gt = rescaled_density(cauchy, t, prof, g)
        assert gt.meta["h"] == pytest.approx(1.0, rel=1e-10)
        ref = density(Truncation(cauchy, gt.meta["h"]), t, g)
        np.testing.assert_allclose(gt.values, ref.values, rtol=1e-10, atol=1e-14)

    def test_layered_sweep_bounded(self, layered):
        prof = phi_profile(layered)
        sups = [rescaled_density(layered, t, prof).values.max() for t in [10, 1e2, 1e3, 1e4]]
        assert max(sups) / min(sups) < 2


class TestErrors:
    def test_underresolved(self, cauchy):
        with pytest.raises(GridUnderresolved):
            density(cauchy, 1.0, GridSpec(1, 64, 1000.0))

    def test_compound_poisson(self):
        with pytest.raises(HWViolated):
            density(ExplicitSymbol("compound_poisson", rate=2.0), 1.0)

    def test_bad_beta(self, cauchy):
        with pytest.raises(InvalidModel):
            density(cauchy, 1.0, GridSpec(1, 1024, 10.0), beta=5)
        with pytest.raises(InvalidModel):
            density(cauchy, 1.0, GridSpec(2, 64, 10.0))
        with pytest.raises(InvalidModel):
            density(cauchy, -1.0)


class TestExport:
    def test_round_trip(self, tmp_path, tempered):
        dg = density(tempered, 1.0, GridSpec(1, 4096, 30.0))
        path = dg.save(tmp_path / "p.bin")
        side = json.loads((tmp_path / "p.bin.json").read_text())
        assert side["N"] == 4096 and side["L"] == 30.0 and side["beta"] == [0]
        back = DensityGrid.load(path)
        assert np.array_equal(back.values, dg.values)
        assert back.grid == dg.grid

    def test_two_dimensional_round_trip(self, tmp_path):
        m = Polar(SpectralMeasure(2, uniform=1.0), Tempered(1.0, 1.0))
        dg = density(m, 1.0, GridSpec(2, 128, 15.0))
        back = DensityGrid.load(dg.save(tmp_path / "q.bin"))
        assert back.values.shape == (128, 128)
        assert np.array_equal(back.values, dg.values)

    def test_csv(self, tmp_path, tempered):
        dg = density(tempered, 1.0, GridSpec(1, 256, 30.0))
        rows = np.loadtxt(dg.to_csv(tmp_path / "p.csv"), delimiter=",", skiprows=1)
        np.testing.assert_array_equal(rows[:, 0], dg.y)
        np.testing.assert_array_equal(rows[:, 1], dg.values)
