"""Gibbs densities of gradient drifts and their small-noise concentration."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import zeronoise as zn

N = 512
CONC_EPS = (0.4, 0.2, 0.1, 0.05)

# frozen concentration table for H = 1 - cos(2 pi x), delta = 0.25
OUTSIDE_MASS = (2.458798e-3, 1.143210e-5, 3.663194e-10, 5.346002e-19)
EPS_LOG_MASS = (-2.403233, -2.275817, -2.172752, -2.103638)


def _potential(rule_name="one_minus_cos", n=N, **params):
    grid = zn.Grid1D(n)
    field = zn.field_from_rule(zn.make_rule(rule_name, **params), grid)
    return zn.PotentialField(field)


@pytest.fixture
def cos_well():
    return _potential(harmonic=1)


@pytest.fixture
def double_well():
    return _potential(harmonic=2)


class TestPotentialField:
    def test_minimum_refinement(self, cos_well):
        assert len(cos_well.minima) == 1
        m = cos_well.minima[0]
        assert m.location == pytest.approx(0.0, abs=1e-9)
        assert m.value == pytest.approx(0.0, abs=1e-9)
        # fitted curvature approximates H''(0) = 4 pi^2
        assert m.curvature == pytest.approx(4 * np.pi**2, rel=1e-3)

    def test_symmetric_double_well(self, double_well):
        locs = sorted(m.location for m in double_well.minima)
        assert locs == pytest.approx([0.0, 0.5], abs=1e-9)
        assert len(double_well.global_minima()) == 2

    def test_constant_potential_has_no_minima(self):
        pot = _potential("constant", value=2.0)
        assert pot.minima == []
        assert pot.global_minima() == []

    def test_gradient_drift_closed_form(self, cos_well):
        drift = zn.gradient_drift(cos_well)
        x = cos_well.grid.points
        assert np.allclose(drift.samples, -2 * np.pi * np.sin(2 * np.pi * x), atol=1e-10)

    def test_gradient_drift_flat(self):
        drift = zn.gradient_drift(_potential("constant", value=1.0))
        assert np.max(np.abs(drift.samples)) <= 1e-12


class TestGibbsDensity:
    def test_matches_quadrature_solver(self, cos_well):
        # closed form vs the ODE solver fed the signed drift -H'; the
        # gradient flow is detailed-balance, so the flux constant is 0
        gd = zn.gibbs_density(cos_well, 0.1)
        gamma = zn.DiffusionCoeff1D(
            zn.field_from_rule(zn.make_rule("constant", value=1.0), cos_well.grid)
        )
        sol = zn.solve_stationary_quadrature(zn.gradient_drift(cos_well), gamma, 0.1)
        assert np.max(np.abs(gd.density.samples - sol.density.samples)) <= 1e-8
        assert abs(sol.flux_constant) <= 1e-10

    def test_matches_fd_solver(self, cos_well):
        gd = zn.gibbs_density(cos_well, 0.1)
        gamma = zn.DiffusionCoeff1D(
            zn.field_from_rule(zn.make_rule("constant", value=1.0), cos_well.grid)
        )
        sol = zn.solve_stationary_fd(zn.gradient_drift(cos_well), gamma, 0.1)
        peak = np.max(gd.density.samples)
        assert np.max(np.abs(gd.density.samples - sol.density.samples)) / peak <= 1e-3

    def test_laplace_mass_near_minimum(self, cos_well):
        # sigma^2 = eps/(8 pi^2) at eps = 0.1 puts ~0.994 of the mass in
        # (-0.1, 0.1); frozen from the cell quadrature
        gd = zn.gibbs_density(cos_well, 0.1)
        x = cos_well.grid.points
        near = (x <= 0.1) | (x >= 0.9)
        mass = float(np.mean(np.where(near, gd.density.samples, 0.0)))
        assert mass == pytest.approx(0.99424, abs=2e-4)
        # Gaussian Laplace approximation predicts erf(0.1 / (sigma sqrt 2)) = 0.995
        assert abs(mass - 0.995) < 1e-3 and mass >= 0.99

    def test_even_potential_gives_even_density(self, cos_well):
        s = zn.gibbs_density(cos_well, 0.07).density.samples
        assert np.max(np.abs(s[1:] - s[1:][::-1])) <= 1e-12

    def test_flat_potential_uniform(self):
        gd = zn.gibbs_density(_potential("constant", value=3.0), 0.5)
        assert np.allclose(gd.density.samples, 1.0, atol=1e-12)

    def test_shift_covariance_is_exact(self):
        # quantize H to dyadic values so the +7.5 shift is exact in floats;
        # the normalizer must absorb the constant bit-for-bit
        grid = zn.Grid1D(256)
        base = zn.field_from_rule(zn.make_rule("one_minus_cos", harmonic=1), grid)
        quant = np.round(base.samples * 2.0**20) / 2.0**20
        eps = 0.08
        lo = zn.PotentialField(zn.PeriodicField1D(grid, quant))
        hi = zn.PotentialField(zn.PeriodicField1D(grid, quant + 7.5))
        gd_lo = zn.gibbs_density(lo, eps)
        gd_hi = zn.gibbs_density(hi, eps)
        assert np.array_equal(gd_lo.density.samples, gd_hi.density.samples)
        assert gd_hi.log_normalizer - gd_lo.log_normalizer == pytest.approx(
            2 * 7.5 / eps, rel=1e-12
        )

    def test_grid_resolution_guard(self):
        with pytest.raises(zn.RefineGridError, match="grid cell"):
            zn.gibbs_density(_potential(n=64, harmonic=1), 1e-4)

    def test_eps_validation(self, cos_well):
        with pytest.raises(zn.ValidationError):
            zn.gibbs_density(cos_well, 0.0)


class TestConcentrationStudy:
    def test_frozen_table(self, cos_well):
        table = zn.concentration_study(cos_well, CONC_EPS, delta=0.25)
        assert table.barrier == pytest.approx(1.0, abs=1e-10)
        assert table.center == pytest.approx(0.0, abs=1e-9)
        assert table.monotone and table.rate_ok
        for row, mass, diag in zip(table.rows, OUTSIDE_MASS, EPS_LOG_MASS):
            assert row.outside_mass == pytest.approx(mass, rel=1e-5)
            assert row.eps_times_log_mass == pytest.approx(diag, abs=1e-5)
        # the diagnostic closes in on -2 DeltaH from above
        diags = [r.eps_times_log_mass for r in table.rows]
        assert np.all(np.diff(diags) > 0) and diags[-1] > -2.0 * 1.2

    def test_single_large_eps_fails_rate(self, cos_well):
        table = zn.concentration_study(cos_well, (0.4,), delta=0.25, strict=False)
        assert table.rate_ok is False
        with pytest.raises(zn.ValidationError, match="20%"):
            zn.concentration_study(cos_well, (0.4,), delta=0.25)

    def test_flat_potential_no_rate(self):
        table = zn.concentration_study(
            _potential("constant", value=1.0), (0.4, 0.2), delta=0.25
        )
        assert table.rate_ok is None
        assert not table.monotone
        for row in table.rows:
            assert row.outside_mass == pytest.approx(0.5, abs=1e-12)

    def test_two_global_minima_rejected(self, double_well):
        with pytest.raises(zn.ModeError, match="2 global minima"):
            zn.concentration_study(double_well, CONC_EPS, delta=0.1)

    def test_parameter_validation(self, cos_well):
        with pytest.raises(zn.ValidationError):
            zn.concentration_study(cos_well, (0.1, 0.2), delta=0.25)
        with pytest.raises(zn.ValidationError):
            zn.concentration_study(cos_well, CONC_EPS, delta=0.6)
        with pytest.raises(zn.ValidationError):
            zn.concentration_study(cos_well, (), delta=0.25)


class TestWellMasses:
    def test_symmetric_wells_split_evenly(self, double_well):
        wells = zn.well_masses(double_well, 0.1)
        assert len(wells) == 2
        assert sorted(w.minimum.location for w in wells) == pytest.approx([0.0, 0.5], abs=1e-9)
        for w in wells:
            assert w.mass == pytest.approx(0.5, abs=1e-10)
        edges = {(round(w.left_edge, 6), round(w.right_edge, 6)) for w in wells}
        assert edges == {(0.25, 0.75), (0.75, 0.25)}

    def test_single_well_carries_all_mass(self, cos_well):
        wells = zn.well_masses(cos_well, 0.2)
        assert sum(w.mass for w in wells) == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=10, deadline=None)
@given(
    amp=st.floats(min_value=0.5, max_value=2.0, allow_nan=False),
    eps_hi=st.floats(min_value=0.2, max_value=0.5, allow_nan=False),
)
def test_concentration_monotone_property(amp, eps_hi):
    """Outside-mass never grows as eps shrinks, for any single-well depth."""
    grid = zn.Grid1D(256)
    samples = amp * zn.field_from_rule(zn.make_rule("one_minus_cos", harmonic=1), grid).samples
    pot = zn.PotentialField(zn.PeriodicField1D(grid, samples))
    table = zn.concentration_study(pot, (eps_hi, eps_hi / 2, eps_hi / 4), delta=0.25,
                                   strict=False)
    masses = [r.outside_mass for r in table.rows]
    assert masses[0] > masses[1] > masses[2]
