import math

import numpy as np
from django.test import SimpleTestCase

from sparseness.exceptions import FieldError
from sparseness.field import (
    GridSpec,
    ScalarField3,
    VectorField3,
    curl,
    divergence,
    gradient,
    kinetic_energy,
    magnitude,
    max_norm,
    transform_roundtrip,
)
from sparseness.solver import kida_initial_condition


class GridSpecTests(SimpleTestCase):
    def test_odd_grid_size_is_rejected(self):
        with self.assertRaises(FieldError):
            GridSpec(15)

    def test_spacing_times_size_is_domain_length(self):
        grid = GridSpec(24, 3.0)
        self.assertEqual(grid.spacing * grid.n, 3.0)

    def test_linear_index_is_x_fastest(self):
        grid = GridSpec(8)
        self.assertEqual(grid.linear_index(1, 0, 0), 1)
        self.assertEqual(grid.linear_index(0, 1, 0), 8)
        self.assertEqual(grid.linear_index(0, 0, 1), 64)
        self.assertEqual(tuple(int(i) for i in grid.unravel(8 * 64 - 1)), (7, 7, 7))

    def test_non_finite_samples_are_rejected(self):
        grid = GridSpec(4)
        values = np.zeros(grid.shape)
        values[1, 2, 3] = np.nan
        with self.assertRaises(FieldError):
            ScalarField3(grid, values)


class SpectralTransformTests(SimpleTestCase):
    def setUp(self):
        self.grid = GridSpec(16)
        self.x, self.y, self.z = self.grid.mesh()

    def test_constant_field_survives_round_trip(self):
        field = ScalarField3.constant(self.grid, 2.5)
        np.testing.assert_allclose(transform_roundtrip(field).values, 2.5, rtol=1e-14)

    def test_band_limited_sine_survives_round_trip(self):
        field = ScalarField3(self.grid, np.sin(self.x) * np.ones(self.grid.shape))
        result = transform_roundtrip(field)
        self.assertLess(np.abs(result.values - field.values).max(), 1e-12)

    def test_random_field_survives_round_trip(self):
        rng = np.random.default_rng(7)
        field = ScalarField3(self.grid, rng.normal(size=self.grid.shape))
        error = np.abs(transform_roundtrip(field).values - field.values).max()
        self.assertLess(error, 1e-10 * field.max_abs())


class DifferentialOperatorTests(SimpleTestCase):
    def setUp(self):
        self.grid = GridSpec(16)
        self.x, self.y, self.z = self.grid.mesh()
        self.zero = np.zeros(self.grid.shape)

    def test_curl_of_shear_wave(self):
        u = VectorField3.from_arrays(self.grid, self.zero, self.zero, np.sin(self.x))
        omega = curl(u)
        np.testing.assert_allclose(omega.x.values, 0.0, atol=1e-12)
        np.testing.assert_allclose(omega.y.values, -np.cos(self.x) * np.ones(self.grid.shape), atol=1e-12)
        np.testing.assert_allclose(omega.z.values, 0.0, atol=1e-12)

    def test_curl_of_constant_field_vanishes(self):
        u = VectorField3.from_arrays(self.grid, 1.0, -2.0, 0.5)
        self.assertLess(max_norm(curl(u)), 1e-12)

    def test_divergence_of_compressive_wave(self):
        u = VectorField3.from_arrays(self.grid, np.sin(self.x), self.zero, self.zero)
        np.testing.assert_allclose(divergence(u).values, np.cos(self.x) * np.ones(self.grid.shape), atol=1e-12)

    def test_kida_initial_condition_is_divergence_free(self):
        u = kida_initial_condition(GridSpec(32), 0.01)
        self.assertLess(divergence(u).max_abs(), 1e-12 * max_norm(u))

    def test_curl_of_kida_matches_hand_differentiation(self):
        grid = GridSpec(32)
        x, y, z = grid.mesh()
        omega = curl(kida_initial_condition(grid, 0.01))
        # ω_x = ∂y u_z − ∂z u_y for the cyclic Kida formulas
        d_uz_dy = np.sin(z) * (-np.cos(3 * x) * np.sin(y) + 3 * np.cos(x) * np.sin(3 * y))
        d_uy_dz = np.sin(y) * (-3 * np.sin(3 * z) * np.cos(x) + np.sin(z) * np.cos(3 * x))
        expected = 0.01 * (d_uz_dy - d_uy_dz)
        self.assertLess(np.abs(omega.x.values - expected).max(), 1e-10)

    def test_gradient_of_sine(self):
        s = ScalarField3(self.grid, np.sin(self.y) * np.ones(self.grid.shape))
        grad = gradient(s)
        np.testing.assert_allclose(grad.y.values, np.cos(self.y) * np.ones(self.grid.shape), atol=1e-12)
        np.testing.assert_allclose(grad.x.values, 0.0, atol=1e-12)


class ReductionTests(SimpleTestCase):
    def setUp(self):
        self.grid = GridSpec(4)

    def test_max_norm_of_constant_field(self):
        u = VectorField3.from_arrays(self.grid, 1.0, -3.0, 2.0)
        self.assertEqual(max_norm(u), 3.0)

    def test_max_norm_of_zero_field(self):
        self.assertEqual(max_norm(VectorField3.zeros(self.grid)), 0.0)

    def test_max_norm_of_single_voxel(self):
        values = np.zeros(self.grid.shape)
        values[1, 2, 3] = 5.0
        u = VectorField3.from_arrays(self.grid, 0.0, 0.0, values)
        self.assertEqual(max_norm(u), 5.0)

    def test_magnitude_is_pointwise_component_maximum(self):
        u = VectorField3.from_arrays(self.grid, 1.0, -3.0, 2.0)
        np.testing.assert_array_equal(magnitude(u).values, 3.0)

    def test_kinetic_energy_of_unit_field(self):
        u = VectorField3.from_arrays(self.grid, 1.0, 0.0, 0.0)
        self.assertAlmostEqual(kinetic_energy(u), 0.5 * (2 * math.pi) ** 3, places=10)
