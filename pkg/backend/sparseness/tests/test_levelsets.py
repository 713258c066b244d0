import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from sparseness.exceptions import LevelSetError
from sparseness.field import GridSpec, ScalarField3, VectorField3
from sparseness.levelsets import (
    COMPONENT_ORDER,
    BinaryMask,
    ComponentPart,
    ZAlphaParams,
    component_parts,
    connected_components,
    magnitude_mask,
    read_mask,
    sparseness_field,
    sparseness_ratio,
    superlevel_mask,
    write_mask,
    z_alpha_check,
)


def _box_mask(grid, xs, ys, zs):
    bits = np.zeros(grid.shape, dtype=bool)
    bits[np.ix_(xs, ys, zs)] = True
    return BinaryMask(grid, bits)


class ComponentPartTests(SimpleTestCase):
    def setUp(self):
        self.grid = GridSpec(4)

    def test_pointwise_split(self):
        parts = component_parts(VectorField3.from_arrays(self.grid, -2.0, 1.0, 0.0))
        expected = {
            ComponentPart.X_PLUS: 0.0, ComponentPart.X_MINUS: 2.0,
            ComponentPart.Y_PLUS: 1.0, ComponentPart.Y_MINUS: 0.0,
            ComponentPart.Z_PLUS: 0.0, ComponentPart.Z_MINUS: 0.0,
        }
        self.assertEqual(tuple(parts), COMPONENT_ORDER)
        for part, value in expected.items():
            np.testing.assert_array_equal(parts[part].values, value)

    def test_zero_field_gives_six_zero_parts(self):
        parts = component_parts(VectorField3.zeros(self.grid))
        self.assertEqual(len(parts), 6)
        self.assertTrue(all(part.max_abs() == 0.0 for part in parts.values()))

    def test_union_of_part_masks_is_the_magnitude_mask(self):
        grid = GridSpec(16)
        rng = np.random.default_rng(11)
        f = VectorField3.from_arrays(grid, *rng.normal(size=(3,) + grid.shape))
        cut = 0.5 * max(c.max_abs() for c in f.components)
        union = None
        for part in component_parts(f).values():
            mask = superlevel_mask(part, cut)
            union = mask if union is None else union.union(mask)
        np.testing.assert_array_equal(union.bits, magnitude_mask(f, 0.5).bits)


class SuperlevelMaskTests(SimpleTestCase):
    def setUp(self):
        self.grid = GridSpec(8)

    def test_cut_above_constant_field_is_empty(self):
        self.assertEqual(superlevel_mask(ScalarField3.constant(self.grid, 1.0), 2.0).count, 0)

    def test_cut_below_constant_field_is_full(self):
        self.assertEqual(superlevel_mask(ScalarField3.constant(self.grid, 1.0), 0.5).count, 8 ** 3)

    def test_sine_at_zero_cut_is_half_full(self):
        x = self.grid.mesh()[0] * np.ones(self.grid.shape)
        count = superlevel_mask(ScalarField3(self.grid, np.sin(x)), 0.0).count
        self.assertLessEqual(abs(count - 8 ** 3 / 2), 8 ** 2)

    def test_negative_cut_is_rejected(self):
        with self.assertRaises(LevelSetError):
            superlevel_mask(ScalarField3.constant(self.grid, 1.0), -0.1)


class ConnectedComponentTests(SimpleTestCase):
    def setUp(self):
        self.grid = GridSpec(16)

    def test_two_disjoint_boxes(self):
        first = _box_mask(self.grid, range(2, 5), range(2, 5), range(2, 5))
        second = _box_mask(self.grid, range(9, 11), range(9, 11), range(9, 13))
        rivs = connected_components(first.union(second))
        self.assertEqual([riv.voxel_count for riv in rivs], [27, 16])
        self.assertEqual([riv.component_id for riv in rivs], [0, 1])

    def test_box_straddling_the_periodic_face_is_one_component(self):
        rivs = connected_components(_box_mask(self.grid, [14, 15, 0, 1], range(3, 6), range(3, 6)))
        self.assertEqual(len(rivs), 1)
        self.assertEqual(rivs[0].voxel_count, 36)
        self.assertEqual(rivs[0].bbox.anchor, (14, 3, 3))
        self.assertEqual(rivs[0].bbox.extent, (4, 3, 3))

    def test_empty_mask_has_no_components(self):
        self.assertEqual(connected_components(BinaryMask(self.grid, np.zeros(self.grid.shape))), [])

    def test_connectivity_decides_diagonal_contact(self):
        bits = np.zeros(self.grid.shape, dtype=bool)
        bits[4, 4, 4] = bits[5, 5, 5] = True
        mask = BinaryMask(self.grid, bits)
        self.assertEqual(len(connected_components(mask, connectivity=26)), 1)
        self.assertEqual(len(connected_components(mask, connectivity=6)), 2)

    def test_equal_sizes_order_by_smallest_linear_index(self):
        bits = np.zeros(self.grid.shape, dtype=bool)
        bits[10, 0, 0] = bits[3, 8, 0] = True
        rivs = connected_components(BinaryMask(self.grid, bits))
        self.assertEqual([int(riv.voxels[0]) for riv in rivs], [10, 3 + 16 * 8])

    def test_unknown_connectivity_is_rejected(self):
        with self.assertRaises(LevelSetError):
            connected_components(BinaryMask(self.grid, np.ones(self.grid.shape)), connectivity=18)

    def test_local_coordinates_unwrap_inside_the_box(self):
        riv = connected_components(_box_mask(self.grid, [15, 0], [7], [7]))[0]
        local_x = sorted(int(i) for i in riv.local_coordinates()[0])
        self.assertEqual(local_x, [0, 1])


class SparsenessRatioTests(SimpleTestCase):
    def setUp(self):
        self.grid = GridSpec(32)
        self.L = self.grid.domain_length

    def test_full_mask_has_ratio_one(self):
        mask = BinaryMask(self.grid, np.ones(self.grid.shape))
        self.assertAlmostEqual(sparseness_ratio(mask, (1.0, 2.0, 3.0), 0.9), 1.0, places=12)

    def test_empty_mask_has_ratio_zero(self):
        mask = BinaryMask(self.grid, np.zeros(self.grid.shape))
        self.assertEqual(sparseness_ratio(mask, (1.0, 2.0, 3.0), 0.9), 0.0)

    def test_half_space_through_the_center_has_ratio_one_half(self):
        x = self.grid.mesh()[0] * np.ones(self.grid.shape)
        mask = BinaryMask(self.grid, x < self.L / 2)
        # Voxel cells end half a spacing below the sampled plane.
        plane = self.L / 2 - self.grid.spacing / 2
        for radius in (0.5, 1.0, 2.0):
            self.assertAlmostEqual(sparseness_ratio(mask, (plane, 1.0, 2.0), radius), 0.5, delta=0.01)

    def test_radius_of_half_the_box_is_rejected(self):
        mask = BinaryMask(self.grid, np.ones(self.grid.shape))
        with self.assertRaises(LevelSetError):
            sparseness_ratio(mask, (0.0, 0.0, 0.0), self.L / 2)

    def test_field_matches_pointwise_ratio_at_grid_points(self):
        rng = np.random.default_rng(5)
        mask = BinaryMask(self.grid, rng.uniform(size=self.grid.shape) < 0.3)
        field = sparseness_field(mask, 0.7)
        h = self.grid.spacing
        for index in [(0, 0, 0), (3, 5, 7), (31, 16, 2)]:
            point = tuple(i * h for i in index)
            self.assertAlmostEqual(field[index], sparseness_ratio(mask, point, 0.7), places=10)


class ZAlphaCheckTests(SimpleTestCase):
    def setUp(self):
        self.grid = GridSpec(16)

    def test_zero_field_passes_as_degenerate(self):
        verdict = z_alpha_check(VectorField3.zeros(self.grid), ZAlphaParams())
        self.assertTrue(verdict.passed)
        self.assertTrue(verdict.degenerate)

    def test_field_filling_the_box_fails_with_ratio_one(self):
        verdict = z_alpha_check(VectorField3.from_arrays(self.grid, 1.0, 0.0, 0.0), ZAlphaParams())
        self.assertFalse(verdict.passed)
        self.assertAlmostEqual(verdict.worst_ratio, 1.0, places=9)
        self.assertEqual(verdict.worst_point, (0, 0, 0))
        self.assertEqual(verdict.worst_component, ComponentPart.X_PLUS)

    def test_small_ball_is_sparse_at_the_largest_scale(self):
        L = self.grid.domain_length
        x, y, z = self.grid.mesh()
        distance = np.sqrt((x - L / 2) ** 2 + (y - L / 2) ** 2 + (z - L / 2) ** 2)
        bump = np.maximum(0.8 - distance, 0.0) / 0.8
        f = VectorField3.from_arrays(self.grid, bump, 0.0, 0.0)
        center = (self.grid.n // 2,) * 3
        verdict = z_alpha_check(f, ZAlphaParams(), points=[center])
        self.assertTrue(verdict.passed)
        self.assertEqual(verdict.points_checked, 1)
        self.assertEqual(len(verdict.scales), 16)

    def test_scales_beyond_half_the_box_are_rejected(self):
        f = VectorField3.from_arrays(self.grid, 0.01, 0.0, 0.0)
        with self.assertRaises(LevelSetError):
            z_alpha_check(f, ZAlphaParams())

    def _unit_ball(self):
        # Peak 1 at the center; the half-peak super-level set is the ball of radius 1.
        grid = GridSpec(32)
        L = grid.domain_length
        x, y, z = grid.mesh()
        distance = np.sqrt((x - L / 2) ** 2 + (y - L / 2) ** 2 + (z - L / 2) ** 2)
        f = VectorField3.from_arrays(grid, np.maximum(1.0 - distance / 2, 0.0), 0.0, 0.0)
        return f, [(grid.n // 2,) * 3]

    def test_ball_fails_when_the_largest_scale_is_below_its_sparse_radius(self):
        # Sparse iff some scale reaches 1 / 0.5^(1/3) ≈ 1.26; c0 = 1.2 caps the scales at 1.2.
        f, points = self._unit_ball()
        verdict = z_alpha_check(f, ZAlphaParams(c0=1.2), points=points)
        self.assertFalse(verdict.passed)
        self.assertAlmostEqual(verdict.worst_ratio, (1 / 1.2) ** 3, delta=0.03)

    def test_ball_passes_once_the_largest_scale_exceeds_its_sparse_radius(self):
        f, points = self._unit_ball()
        verdict = z_alpha_check(f, ZAlphaParams(c0=1.3), points=points)
        self.assertTrue(verdict.passed)
        self.assertAlmostEqual(verdict.worst_ratio, (1 / 1.3) ** 3, delta=0.03)

    def test_parameters_default_to_settings(self):
        with self.settings(SPARSENESS_LAMBDA=0.4, SPARSENESS_DELTA=0.3, SPARSENESS_C0=1.5):
            params = ZAlphaParams.from_settings(c0=None, delta=0.25)
        self.assertEqual((params.lam, params.delta, params.c0), (0.4, 0.25, 1.5))

    def test_check_without_parameters_uses_settings(self):
        f, points = self._unit_ball()
        with self.settings(SPARSENESS_C0=1.2):
            self.assertFalse(z_alpha_check(f, points=points).passed)
        with self.settings(SPARSENESS_C0=1.3):
            self.assertTrue(z_alpha_check(f, points=points).passed)

    def test_invalid_parameters_are_rejected(self):
        with self.assertRaises(LevelSetError):
            ZAlphaParams(delta=1.5)
        with self.assertRaises(LevelSetError):
            ZAlphaParams(c0=1.0)


class MaskFileTests(SimpleTestCase):
    def test_written_mask_reads_back(self):
        grid = GridSpec(6)
        rng = np.random.default_rng(2)
        mask = BinaryMask(grid, rng.uniform(size=grid.shape) < 0.5)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'mask.bits'
            write_mask(mask, path)
            self.assertEqual(path.stat().st_size, 27)
            np.testing.assert_array_equal(read_mask(path, grid).bits, mask.bits)
