import math

import numpy as np
import pytest

from basicvar.functionals import (GeneralEnergySpec, GrowthBoundError,
                                  GrowthWitness, KirchhoffSpec, Potential,
                                  SpecValidationError, StretchWeight,
                                  affine_weight, constant_weight,
                                  denergy_general, denergy_kirchhoff,
                                  dirichlet_lagrangian, energy_general,
                                  energy_kirchhoff,
                                  extract_symmetric_coefficients,
                                  first_variation, gradient_power_lagrangian,
                                  odd_power, potential_mass,
                                  potential_mass_variation, power_mass,
                                  power_mass_variation, power_potential,
                                  power_weight, table_weight)
from basicvar.grids import BasicFunction, QuotientGrid, differentiate_values

from conftest import fd_directional, random_basic, spec_presets

TWO_PI = 2.0 * math.pi


class TestWeights:
    def test_power_weight_identity(self):
        w = power_weight(0.0)
        assert float(w.M(3.7)) == pytest.approx(3.7)
        assert float(w.m(3.7)) == pytest.approx(1.0)

    def test_affine_antiderivative(self):
        w = affine_weight(1.0, 2.0)
        assert float(w.M(2.0)) == pytest.approx(1.0 * 2.0 + 1.0 * 4.0)
        w.validate()

    def test_table_weight_consistency(self):
        s = np.linspace(0.0, 10.0, 21)
        w = table_weight(np.column_stack([s, 1.0 + s ** 2]), convex=True)
        probe = np.linspace(0.0, 10.0, 100)
        gap = np.max(np.abs(np.asarray(w.M(probe + 1e-6))
                            - np.asarray(w.M(probe))) / 1e-6
                     - np.asarray(w.m(probe + 0.5e-6)))
        assert gap <= 1e-4  # coarse forward check; exact pair checked at build

    def test_negative_weight_rejected(self):
        s = np.linspace(0.0, 5.0, 11)
        with pytest.raises(SpecValidationError):
            table_weight(np.column_stack([s, -np.ones_like(s)]))

    def test_declared_convexity_checked(self):
        s = np.linspace(0.0, 5.0, 21)
        concave_m = 5.0 - s  # decreasing m: M not convex
        with pytest.raises(SpecValidationError):
            table_weight(np.column_stack([s, np.maximum(concave_m, 0.0)]),
                         convex=True)

    def test_kirchhoff_requires_zero_at_origin(self):
        shifted = StretchWeight(m=lambda s: np.ones_like(np.asarray(s, float)),
                                M=lambda t: 1.0 + np.asarray(t, float),
                                label="shifted")
        with pytest.raises(SpecValidationError):
            KirchhoffSpec(p=2.0, r=2.0, lam=1.0, weight=shifted, n=3)


class TestSpecValidation:
    def test_parameter_ranges(self):
        with pytest.raises(SpecValidationError):
            KirchhoffSpec(p=1.5, r=2.0, lam=1.0, weight=power_weight(0.0), n=3)
        with pytest.raises(SpecValidationError):
            KirchhoffSpec(p=3.0, r=2.0, lam=1.0, weight=power_weight(0.0), n=3)
        with pytest.raises(SpecValidationError):
            KirchhoffSpec(p=2.0, r=1.0, lam=1.0, weight=power_weight(0.0), n=3)

    def test_growth_witness_validates_at_build(self):
        witness = GrowthWitness(
            a_fn=lambda t: np.full_like(np.asarray(t, float), 10.0),
            b=2.0, p_star=6.0)
        GeneralEnergySpec(p=2.0, r=2.0, lam=1.0, a=3.0,
                          weight=power_weight(0.0),
                          lagrangian=dirichlet_lagrangian(),
                          potential=power_potential(6.0), n=3, growth=witness)

    def test_growth_witness_violation_raises(self):
        tight = GrowthWitness(
            a_fn=lambda t: np.zeros_like(np.asarray(t, float)),
            b=1e-6, p_star=6.0)
        with pytest.raises(GrowthBoundError):
            GeneralEnergySpec(p=2.0, r=2.0, lam=1.0, a=3.0,
                              weight=power_weight(0.0),
                              lagrangian=dirichlet_lagrangian(),
                              potential=power_potential(6.0), n=3, growth=tight)

    def test_growth_guard_on_evaluation(self, flat_torus):
        witness = GrowthWitness(
            a_fn=lambda t: np.full_like(np.asarray(t, float), 0.5),
            b=1.0, p_star=6.0)
        # bound holds on the build-time sample box but not at large values
        bad = Potential(F=lambda s, t: np.asarray(s, float) ** 2,
                        f=lambda s, t: 20.0 * np.asarray(s, float),
                        homogeneity=2.0, label="steep")
        grid = QuotientGrid.build(flat_torus.quotient, 33)
        with pytest.raises(GrowthBoundError):
            spec = GeneralEnergySpec(p=2.0, r=2.0, lam=1.0, a=3.0,
                                     weight=power_weight(0.0),
                                     lagrangian=dirichlet_lagrangian(),
                                     potential=bad, n=3, growth=witness)
            energy_general(spec, grid, BasicFunction.constant(grid, 50.0))


class TestKirchhoffEnergy:
    def test_zero_function(self, kirchhoff_spec, flat_torus):
        grid = QuotientGrid.build(flat_torus.quotient, 65)
        assert energy_kirchhoff(kirchhoff_spec, grid,
                                BasicFunction.constant(grid, 0.0)) == 0.0

    def test_constant_closed_form(self, kirchhoff_spec, flat_torus):
        grid = QuotientGrid.build(flat_torus.quotient, 257)
        c, vol = 0.7, TWO_PI ** 3
        expected = -(1.0 / 3.0) * (vol * c ** 6 / 6.0) ** 3
        assert energy_kirchhoff(kirchhoff_spec, grid,
                                BasicFunction.constant(grid, c)) \
            == pytest.approx(expected, rel=1e-13)

    def test_sine_gradient_energy(self, flat_torus):
        spec = KirchhoffSpec(p=2.0, r=2.0, lam=0.0, weight=power_weight(0.0),
                             n=3)
        grid = QuotientGrid.build(flat_torus.quotient, 2001)
        val = energy_kirchhoff(spec, grid,
                               BasicFunction.from_callable(grid, np.sin))
        assert val == pytest.approx(0.5 * TWO_PI ** 2 * math.pi, rel=1e-5)


class TestDirectionalDerivatives:
    def test_zero_point(self, kirchhoff_spec, flat_torus):
        grid = QuotientGrid.build(flat_torus.quotient, 65)
        rng = np.random.default_rng(3)
        dd = denergy_kirchhoff(kirchhoff_spec, grid,
                               BasicFunction.constant(grid, 0.0),
                               random_basic(rng, grid))
        assert dd.value == 0.0

    def test_constant_direction_one(self, kirchhoff_spec, flat_torus):
        grid = QuotientGrid.build(flat_torus.quotient, 257)
        c, vol, ps, r = 0.8, TWO_PI ** 3, 6.0, 2.0
        dd = denergy_kirchhoff(kirchhoff_spec, grid,
                               BasicFunction.constant(grid, c),
                               BasicFunction.constant(grid, 1.0))
        expected = -(vol * c ** ps / ps) ** r * vol * c ** (ps - 1.0)
        assert dd.value == pytest.approx(expected, rel=1e-12)
        assert dd.kirchhoff_term == 0.0

    @pytest.mark.parametrize("name", sorted(spec_presets()))
    def test_matches_finite_differences(self, name, flat_torus):
        spec = spec_presets()[name]
        grid = QuotientGrid.build(flat_torus.quotient, 201)
        rng = np.random.default_rng(hash(name) % 2 ** 32)
        energy_fn = energy_kirchhoff if isinstance(spec, KirchhoffSpec) \
            else energy_general
        deriv_fn = denergy_kirchhoff if isinstance(spec, KirchhoffSpec) \
            else denergy_general
        for _ in range(6):
            u = random_basic(rng, grid, 0.6)
            v = random_basic(rng, grid, 0.6)
            dd = deriv_fn(spec, grid, u, v)
            fd = fd_directional(lambda g, w: energy_fn(spec, g, w), grid, u, v)
            assert dd.value == pytest.approx(fd, rel=1e-5)

    def test_decomposition_sums_to_value(self, flat_torus):
        spec = spec_presets()["general-gradpower-weighted"]
        grid = QuotientGrid.build(flat_torus.quotient, 129)
        rng = np.random.default_rng(8)
        for _ in range(5):
            dd = denergy_general(spec, grid, random_basic(rng, grid),
                                 random_basic(rng, grid))
            assert dd.value == pytest.approx(sum(dd.terms), rel=1e-14, abs=1e-300)

    def test_second_variation_symmetry_probe(self, kirchhoff_spec, flat_torus):
        grid = QuotientGrid.build(flat_torus.quotient, 129)
        rng = np.random.default_rng(21)
        u = random_basic(rng, grid, 0.5)
        v = random_basic(rng, grid, 0.5)
        w = random_basic(rng, grid, 0.5)
        eps = 1e-6

        def d_along(direction, probe):
            up = BasicFunction(grid, u.values + eps * direction.values)
            um = BasicFunction(grid, u.values - eps * direction.values)
            return (denergy_kirchhoff(kirchhoff_spec, grid, up, probe).value
                    - denergy_kirchhoff(kirchhoff_spec, grid, um,
                                        probe).value) / (2 * eps)

        h_vw = d_along(w, v)
        h_wv = d_along(v, w)
        assert h_vw == pytest.approx(h_wv, rel=1e-4)


class TestGeneralReductions:
    def test_constant_stretch_matches_identity_kirchhoff(self, flat_torus):
        # constant stretch 1/p with the plain squared-gradient integrand
        # equals the identity-stretch critical-power energy (p = 2)
        gen = GeneralEnergySpec(p=2.0, r=2.0, lam=1.3, a=3.0,
                                weight=constant_weight(0.5),
                                lagrangian=dirichlet_lagrangian(),
                                potential=power_potential(6.0), n=3)
        kir = KirchhoffSpec(p=2.0, r=2.0, lam=1.3, weight=power_weight(0.0),
                            n=3)
        grid = QuotientGrid.build(flat_torus.quotient, 161)
        rng = np.random.default_rng(13)
        for _ in range(5):
            u = random_basic(rng, grid)
            v = random_basic(rng, grid)
            e_gap = abs(energy_general(gen, grid, u)
                        - energy_kirchhoff(kir, grid, u))
            d_gen = denergy_general(gen, grid, u, v).value
            d_kir = denergy_kirchhoff(kir, grid, u, v).value
            assert e_gap <= 1e-12 * (1.0 + abs(energy_kirchhoff(kir, grid, u)))
            assert abs(d_gen - d_kir) <= 1e-12 * (1.0 + abs(d_kir))

    def test_identity_stretch_matches_quadratic_kirchhoff(self, flat_torus):
        # identity stretch times the squared-gradient integrand equals the
        # critical-power energy with the quadratic stretch 4 t^2 (p = 2)
        gen = GeneralEnergySpec(p=2.0, r=2.0, lam=1.3, a=3.0,
                                weight=power_weight(0.0),
                                lagrangian=dirichlet_lagrangian(),
                                potential=power_potential(6.0), n=3)
        quad = StretchWeight(m=lambda s: 8.0 * np.asarray(s, float),
                             M=lambda t: 4.0 * np.asarray(t, float) ** 2,
                             convex=True, label="4t^2")
        kir = KirchhoffSpec(p=2.0, r=2.0, lam=1.3, weight=quad, n=3)
        grid = QuotientGrid.build(flat_torus.quotient, 161)
        rng = np.random.default_rng(14)
        for _ in range(5):
            u = random_basic(rng, grid)
            v = random_basic(rng, grid)
            assert energy_general(gen, grid, u) \
                == pytest.approx(energy_kirchhoff(kir, grid, u), rel=1e-12)
            assert denergy_general(gen, grid, u, v).value \
                == pytest.approx(denergy_kirchhoff(kir, grid, u, v).value,
                                 rel=1e-12)

    def test_zero_function_with_vanishing_potential(self, flat_torus):
        gen = spec_presets()["general-dirichlet-power"]
        grid = QuotientGrid.build(flat_torus.quotient, 65)
        assert energy_general(gen, grid, BasicFunction.constant(grid, 0.0)) == 0.0

    def test_quadratic_lagrangian_gradient_term(self, flat_torus):
        # with the integrand s1^2 the gradient term carries dL/ds1 = 2 s1
        gen = GeneralEnergySpec(p=2.0, r=2.0, lam=0.0, a=3.0,
                                weight=power_weight(0.0),
                                lagrangian=gradient_power_lagrangian(2.0),
                                potential=power_potential(6.0), n=3)
        grid = QuotientGrid.build(flat_torus.quotient, 161)
        rng = np.random.default_rng(15)
        u, v = random_basic(rng, grid), random_basic(rng, grid)
        du = differentiate_values(grid, u.values)
        dv = differentiate_values(grid, v.values)
        gradient_mass = float(np.dot(grid.weights, np.abs(du) ** 2))
        M_at = float(gen.weight.M(gradient_mass))
        oracle = M_at * float(np.dot(grid.weights, 2.0 * du ** 2 * 2.0 * du * dv))
        dd = denergy_general(gen, grid, u, v)
        assert dd.lagrangian_grad_term == pytest.approx(oracle, rel=1e-12)


class TestConstraintFunctionals:
    def test_euler_homogeneity(self, flat_torus):
        grid = QuotientGrid.build(flat_torus.quotient, 161)
        rng = np.random.default_rng(17)
        u = random_basic(rng, grid)
        ps = 6.0
        assert power_mass_variation(grid, u, u, ps) \
            == pytest.approx(ps * power_mass(grid, u, ps), rel=1e-13)

    def test_unit_mass_flat_torus(self, flat_torus):
        grid = QuotientGrid.build(flat_torus.quotient, 161)
        assert power_mass(grid, BasicFunction.constant(grid, 1.0), 6.0) \
            == pytest.approx(TWO_PI ** 3, rel=5e-15)

    def test_variation_matches_finite_difference(self, flat_torus):
        grid = QuotientGrid.build(flat_torus.quotient, 161)
        rng = np.random.default_rng(18)
        ps = 6.0
        for _ in range(5):
            u, v = random_basic(rng, grid), random_basic(rng, grid)
            fd = fd_directional(
                lambda g, w: power_mass(g, w, ps), grid, u, v)
            assert power_mass_variation(grid, u, v, ps) \
                == pytest.approx(fd, rel=1e-6)

    def test_potential_mass_linear_case(self, flat_torus):
        linear = Potential(F=lambda s, t: np.asarray(s, float),
                           f=lambda s, t: np.ones_like(np.asarray(s, float)),
                           homogeneity=1.0, label="linear")
        gen = GeneralEnergySpec(p=2.0, r=2.0, lam=1.0, a=3.0,
                                weight=power_weight(0.0),
                                lagrangian=dirichlet_lagrangian(),
                                potential=linear, n=3)
        grid = QuotientGrid.build(flat_torus.quotient, 161)
        c = 1.7
        assert potential_mass(gen, grid, BasicFunction.constant(grid, c)) \
            == pytest.approx(c * TWO_PI ** 3, rel=5e-15)

    def test_potential_mass_reduces_to_power_mass(self, flat_torus):
        gen = spec_presets()["general-dirichlet-power"]
        grid = QuotientGrid.build(flat_torus.quotient, 161)
        rng = np.random.default_rng(19)
        u = random_basic(rng, grid)
        assert potential_mass(gen, grid, u) \
            == pytest.approx(power_mass(grid, u, 6.0) / 6.0, rel=1e-14)

    def test_potential_mass_zero(self, flat_torus):
        gen = spec_presets()["general-dirichlet-power"]
        grid = QuotientGrid.build(flat_torus.quotient, 65)
        assert potential_mass(gen, grid, BasicFunction.constant(grid, 0.0)) == 0.0


class TestCoefficientExtraction:
    @pytest.mark.parametrize("name", ["kirchhoff-identity",
                                      "general-gradpower-weighted"])
    def test_reproduces_first_variation(self, name, flat_torus):
        spec = spec_presets()[name]
        grid = QuotientGrid.build(flat_torus.quotient, 161)
        rng = np.random.default_rng(23)
        u = random_basic(rng, grid)
        c1, c2 = extract_symmetric_coefficients(spec, grid, u)
        du = differentiate_values(grid, u.values)
        state = first_variation(spec, grid, u)
        for _ in range(20):
            w = random_basic(rng, grid)
            dw = differentiate_values(grid, w.values)
            via_coeffs = float(np.dot(grid.weights,
                                      c1.values * du * dw + c2.values * w.values))
            direct = state.apply(w).value
            assert via_coeffs == pytest.approx(direct, rel=1e-10)


def test_sampled_coercivity_bound_is_positive(flat_torus):
    # finite random probe of the coercivity ratio; a witness, not a proof
    gen = spec_presets()["general-dirichlet-power"]
    grid = QuotientGrid.build(flat_torus.quotient, 101)
    bound = gen.sampled_coercivity_bound(grid, trials=20, seed=1)
    assert math.isfinite(bound) and bound > 0.0


def test_odd_power_vanishes_at_zero():
    x = np.array([-2.0, 0.0, 3.0])
    out = odd_power(x, 6.0)
    assert out[1] == 0.0
    assert out[0] == pytest.approx(-32.0)
    assert out[2] == pytest.approx(243.0)
