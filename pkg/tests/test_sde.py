"""Ensemble simulation, occupation measures, and weak-convergence probes."""

import numpy as np
import pytest
from scipy.integrate import quad

import zeronoise as zn
from zeronoise.sde import merge_measures

SQRT3 = np.sqrt(3.0)


def _const_field(grid, value):
    return zn.field_from_rule(zn.make_rule("constant", value=value), grid)


def _zero_drift(n=64):
    grid = zn.Grid1D(n)
    return zn.PeriodicField1D(grid, np.zeros(n))


def _standard_drift(n=64):
    grid = zn.Grid1D(n)
    rule = zn.make_rule("offset_sin", offset=2.0, amplitude=1.0, harmonic=1)
    return zn.FlowField1D(zn.field_from_rule(rule, grid))


def _gamma(n=64, rule_name="constant", **params):
    if rule_name == "constant" and not params:
        params = {"value": 1.0}
    grid = zn.Grid1D(n)
    return zn.DiffusionCoeff1D(zn.field_from_rule(zn.make_rule(rule_name, **params), grid))


class TestConfig:
    def test_burn_in_defaults_to_tenth(self):
        config = zn.SdeConfig(dt=0.01, n_steps=1000)
        assert config.burn_in == 100
        assert config.kept_steps == 900

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(dt=0.0, n_steps=10),
            dict(dt=0.01, n_steps=0),
            dict(dt=0.01, n_steps=10, burn_in=10),
            dict(dt=0.01, n_steps=10, n_trajectories=0),
            dict(dt=0.01, n_steps=10, seed=-1),
            dict(dt=0.01, n_steps=10, bins=8),
        ],
    )
    def test_rejects_bad_parameters(self, kwargs):
        with pytest.raises(zn.ValidationError):
            zn.SdeConfig(**kwargs)

    def test_measure_shape_checks(self):
        edges = np.linspace(0.0, 1.0, 17)
        with pytest.raises(zn.ValidationError, match="sum"):
            zn.OccupationMeasure(edges, np.full(16, 0.9 / 16), 1.0, np.ones(16))
        with pytest.raises(zn.ValidationError, match="shape"):
            zn.OccupationMeasure(edges, np.full(8, 1 / 8), 1.0, np.ones(8))


class TestStepFunction:
    def test_deterministic_rotation(self):
        h = zn.FlowField1D(_const_field(zn.Grid1D(64), 1.0))
        x = np.array([0.0, 0.25, 0.995])
        out = zn.step_stratonovich_heun(x, h, None, 0.0, 0.01, np.zeros(3))
        assert out == pytest.approx([0.01, 0.26, 0.005], abs=1e-15)

    def test_brownian_increment_moments(self):
        h = _zero_drift()
        gamma = _gamma()
        rng = np.random.default_rng(7)
        eps, dt = 0.3, 1e-3
        x = np.full(200_000, 0.5)
        out = zn.step_stratonovich_heun(x, h, gamma, eps, dt, rng.standard_normal(x.size))
        inc = out - x
        assert abs(np.mean(inc)) <= 4 * np.sqrt(eps * dt / x.size)
        assert np.var(inc) == pytest.approx(eps * dt, rel=0.02)

    def test_heun_equals_euler_for_constant_coefficients(self):
        # constant h and gamma make the predictor exact, so the correction
        # cancels and all schemes produce the same ensemble
        h = zn.FlowField1D(_const_field(zn.Grid1D(64), 1.0))
        gamma = _gamma()
        config = zn.SdeConfig(dt=1e-3, n_steps=5000, burn_in=0, n_trajectories=2, seed=3, bins=16)
        heun = zn.occupation_measure(h, gamma, 0.1, config, scheme="heun")
        euler = zn.occupation_measure(h, gamma, 0.1, config, scheme="euler_ito")
        assert np.array_equal(heun.counts, euler.counts)

    def test_stability_guard(self):
        with pytest.raises(zn.ValidationError, match="dt"):
            zn.step_stratonovich_heun(
                np.zeros(2), _standard_drift(), None, 0.0, 0.05, np.zeros(2)
            )


class TestOccupationMeasure:
    def test_bit_identical_reruns(self):
        config = zn.SdeConfig(dt=1e-3, n_steps=20_000, n_trajectories=4, seed=42, bins=32)
        a = zn.occupation_measure(_standard_drift(), _gamma(), 0.1, config)
        b = zn.occupation_measure(_standard_drift(), _gamma(), 0.1, config)
        assert np.array_equal(a.counts, b.counts)
        assert np.array_equal(a.masses, b.masses)

    def test_count_bookkeeping(self):
        config = zn.SdeConfig(dt=1e-3, n_steps=1000, burn_in=100, n_trajectories=3, seed=0, bins=16)
        m = zn.occupation_measure(_standard_drift(), _gamma(), 0.1, config)
        assert int(m.counts.sum()) == 900 * 3
        assert m.masses.sum() == pytest.approx(1.0, abs=1e-12)
        assert m.total_time == pytest.approx(900 * 3 * 1e-3)

    def test_trajectory_ranges_merge_exactly(self):
        config = zn.SdeConfig(dt=1e-3, n_steps=10_000, n_trajectories=6, seed=9, bins=16)
        full = zn.occupation_measure(_standard_drift(), _gamma(), 0.1, config)
        parts = [
            zn.occupation_measure(_standard_drift(), _gamma(), 0.1, config, trajectory_range=r)
            for r in ((0, 2), (2, 5), (5, 6))
        ]
        merged = merge_measures(parts)
        assert np.array_equal(full.counts, merged.counts)
        assert np.array_equal(full.masses, merged.masses)

    def test_merge_and_range_validation(self):
        config = zn.SdeConfig(dt=1e-3, n_steps=100, n_trajectories=2, seed=0, bins=16)
        with pytest.raises(zn.ValidationError):
            merge_measures([])
        with pytest.raises(zn.ValidationError):
            zn.occupation_measure(_standard_drift(), _gamma(), 0.1, config, trajectory_range=(1, 3))

    def test_noise_requires_gamma(self):
        config = zn.SdeConfig(dt=1e-3, n_steps=100, bins=16)
        with pytest.raises(zn.ValidationError):
            zn.occupation_measure(_standard_drift(), None, 0.1, config)
        with pytest.raises(zn.ValidationError):
            zn.occupation_measure(_standard_drift(), _gamma(), 0.1, config, scheme="milstein")

    def test_rotation_equidistributes(self, warm_kernels):
        # speed dt*1 irrational w.r.t. the period, so the orbit fills the
        # circle; measured sup deviation ~4e-5 at this budget
        h = zn.FlowField1D(_const_field(zn.Grid1D(64), 1.0))
        config = zn.SdeConfig(dt=0.01 * np.sqrt(2) / 2, n_steps=200_000, burn_in=0,
                              n_trajectories=1, seed=0, bins=16)
        m = zn.occupation_measure(h, None, 0.0, config)
        assert np.max(np.abs(m.masses - 1 / 16)) <= 2e-3

    def test_noiseless_occupation_matches_rho0(self, warm_kernels):
        h = _standard_drift(512)
        config = zn.SdeConfig(dt=1e-3, n_steps=1_000_000, n_trajectories=1, seed=1, bins=64)
        m = zn.occupation_measure(h, None, 0.0, config)
        rho0 = zn.unperturbed_density(h)
        assert zn.l1_distance(m, rho0) <= 0.02

    def test_pure_diffusion_is_uniform(self, warm_kernels):
        # per-bin tolerance from the binomial model with one effective
        # sample per relaxation time 1/(2 pi^2 eps)
        eps, bins = 0.2, 16
        config = zn.SdeConfig(dt=1e-3, n_steps=100_000, n_trajectories=8, seed=5, bins=bins)
        m = zn.occupation_measure(_zero_drift(), _gamma(), eps, config)
        tau = 1.0 / (2 * np.pi**2 * eps)
        n_eff = m.total_time / tau
        p = 1.0 / bins
        bound = 4.0 * np.sqrt(p * (1 - p) / n_eff)
        assert np.max(np.abs(m.masses - p)) <= bound

    def test_sde_matches_quadrature_density(self, warm_kernels):
        h = _standard_drift(512)
        gamma = _gamma(512)
        config = zn.SdeConfig(dt=1e-3, n_steps=200_000, n_trajectories=4, seed=11, bins=64)
        m = zn.occupation_measure(h, gamma, 0.1, config)
        sol = zn.solve_stationary_quadrature(h, gamma, 0.1)
        assert zn.l1_distance(m, sol.density) <= 0.05

    def test_self_convergence_under_dt_halving(self, warm_kernels):
        # compare seed-averaged L1 distances at equal total time; a single
        # run's gap is dominated by correlated-sample noise, not dt error.
        # Floor = 3x the measured stderr of the per-seed differences at this
        # budget (std 0.005 over 10 seeds)
        h = _standard_drift(512)
        gamma = _gamma(512)
        sol = zn.solve_stationary_quadrature(h, gamma, 0.1)
        diffs = []
        for seed in range(30, 40):
            c1 = zn.SdeConfig(dt=1e-3, n_steps=200_000, n_trajectories=4, seed=seed, bins=64)
            c2 = zn.SdeConfig(dt=5e-4, n_steps=400_000, n_trajectories=4, seed=seed, bins=64)
            coarse = zn.l1_distance(zn.occupation_measure(h, gamma, 0.1, c1), sol.density)
            fine = zn.l1_distance(zn.occupation_measure(h, gamma, 0.1, c2), sol.density)
            diffs.append(fine - coarse)
        assert abs(np.mean(diffs)) <= 0.005


class TestSchemeConventions:
    def test_zero_drift_closed_forms(self):
        gamma = _gamma(rule_name="offset_cos", offset=1.0, amplitude=0.5, harmonic=1)
        strat = zn.zero_drift_density(gamma, "stratonovich")
        ito = zn.zero_drift_density(gamma, "ito")
        g = np.sqrt(1.0 + 0.5 * np.cos(2 * np.pi * gamma.grid.points))
        assert np.allclose(strat.samples, (1 / g) / np.mean(1 / g), atol=1e-12)
        assert np.allclose(ito.samples, (1 / g**2) / np.mean(1 / g**2), atol=1e-12)
        with pytest.raises(zn.ValidationError):
            zn.zero_drift_density(gamma, "heun")

    def test_reference_density_matches_convention(self):
        # the Stratonovich law equals the Ito law for the corrected drift
        # (eps/4) Gamma', so the quadrature solver must land on 1/gamma
        gamma = _gamma(256, "offset_cos", offset=1.0, amplitude=0.5, harmonic=1)
        zero = _zero_drift(256)
        for scheme, convention in (("heun", "stratonovich"), ("euler_ito", "ito")):
            sol = zn.scheme_reference_density(zero, gamma, 0.2, scheme=scheme)
            closed = zn.zero_drift_density(gamma, convention)
            assert np.max(np.abs(sol.density.samples - closed.samples)) <= 1e-8

    def test_heun_samples_the_stratonovich_law(self, warm_kernels):
        gamma = _gamma(256, "offset_cos", offset=1.0, amplitude=0.5, harmonic=1)
        zero = _zero_drift(256)
        config = zn.SdeConfig(dt=1e-3, n_steps=200_000, n_trajectories=8, seed=17, bins=32)
        m = zn.occupation_measure(zero, gamma, 0.2, config, scheme="heun")
        d_strat = zn.l1_distance(m, zn.zero_drift_density(gamma, "stratonovich"))
        d_ito = zn.l1_distance(m, zn.zero_drift_density(gamma, "ito"))
        assert d_ito >= 3.0 * d_strat

    def test_euler_samples_the_ito_law(self, warm_kernels):
        gamma = _gamma(256, "offset_cos", offset=1.0, amplitude=0.5, harmonic=1)
        zero = _zero_drift(256)
        config = zn.SdeConfig(dt=1e-3, n_steps=200_000, n_trajectories=8, seed=17, bins=32)
        m = zn.occupation_measure(zero, gamma, 0.2, config, scheme="euler_ito")
        d_strat = zn.l1_distance(m, zn.zero_drift_density(gamma, "stratonovich"))
        d_ito = zn.l1_distance(m, zn.zero_drift_density(gamma, "ito"))
        assert d_strat >= 3.0 * d_ito


class TestWeakProbes:
    def test_bin_masses_are_spectral(self):
        h = _standard_drift(256)
        rho0 = zn.unperturbed_density(h)
        edges = np.linspace(0.0, 1.0, 33)
        masses = zn.bin_masses(rho0, edges)
        assert masses.sum() == pytest.approx(1.0, abs=1e-12)
        exact = [quad(lambda s: SQRT3 / (2 + np.sin(2 * np.pi * s)), a, b,
                      epsabs=1e-13, epsrel=1e-13)[0]
                 for a, b in zip(edges[:-1], edges[1:])]
        assert masses == pytest.approx(exact, abs=1e-10)

    def test_identity_gap_is_zero(self):
        h = _standard_drift(128)
        rho0 = zn.unperturbed_density(h)
        gaps = zn.weak_gaps(rho0, rho0)
        assert max(gaps) <= 1e-15

    def test_quadrature_family_gaps_decay(self):
        h = _standard_drift(256)
        gamma = _gamma(256)
        rho0 = zn.unperturbed_density(h)
        measures = [zn.solve_stationary_quadrature(h, gamma, e).density
                    for e in (0.2, 0.1, 0.05, 0.02)]
        probe = zn.weak_convergence_probe(measures, rho0)
        assert probe == pytest.approx([0.0834, 0.0485, 0.0256, 0.0104], abs=2e-4)
        assert np.all(np.diff(probe) < 0.05 * probe[0])
        assert probe[-1] <= probe[0] / 5

    def test_uniform_vs_rho0_is_distinguished(self):
        h = _standard_drift(128)
        grid = zn.Grid1D(128)
        rho0 = zn.unperturbed_density(h)
        uniform = zn.Density(zn.PeriodicField1D(grid, np.ones(128)))
        gaps = zn.weak_gaps(uniform, rho0)
        # the sin(2 pi x) moment of rho0 is sqrt(3) - 2
        assert max(gaps) == pytest.approx(2.0 - SQRT3, rel=1e-9)
        assert max(gaps) >= 0.1

    def test_default_test_functions_span_degree_8(self):
        fns = zn.default_test_functions()
        assert len(fns) == 16
        assert all(np.max(np.abs(f.samples)) <= 1.0 + 1e-12 for f in fns)
