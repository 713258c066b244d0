import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from sparseness.analysis import (
    SparsenessRecord,
    diffusion_scale,
    filter_cyclic,
    filter_records,
    format_uncertainty,
    ingest_external_series,
    loglog_fit,
    loglog_regression,
    measure_snapshot,
    measure_snapshots,
    parse_uncertainty,
    peak_window,
    select_window,
    write_timeseries_csv,
)
from sparseness.exceptions import AnalysisError, SnapshotError
from sparseness.field import GridSpec, VectorField3
from sparseness.snapshots import FieldSnapshot
from sparseness.validation import check_regression, periodic_distance


def _power_law(slope, intercept, d):
    return [
        SparsenessRecord(t=float(i), omega_max=1.0, d=float(x), r=float(math.exp(intercept) * x ** slope),
                         lambda_used=0.5)
        for i, x in enumerate(d)
    ]


def _ball_snapshot(grid, time=0.0, radius=0.4):
    # ω_x = max(2ρ − |x − c|, 0): the half-peak super-level set is the ball of radius ρ.
    distance = periodic_distance(grid, (grid.domain_length / 2,) * 3)
    omega_x = np.maximum(2 * radius - distance, 0.0)
    vorticity = VectorField3.from_arrays(grid, omega_x, 0.0, 0.0)
    return FieldSnapshot.from_vorticity(vorticity, nu=1e-3, time=time)


# ‖ω‖_∞ decays from its initial value, bottoms out at t=3 and bursts at t=9.
BURST_OMEGA = [8.0, 6.0, 4.5, 4.0, 4.4, 4.9, 5.5, 6.0, 6.4, 6.7, 6.5, 6.0, 5.5]


def _burst_records(nu=1e-3):
    records = []
    for i, w in enumerate(BURST_OMEGA):
        d = math.sqrt(nu / w)
        r = 0.2 * d ** 1.5 * math.exp(0.005 * (-1) ** i) if 3 <= i <= 9 else 0.5
        records.append(SparsenessRecord(t=float(i), omega_max=w, d=d, r=r, lambda_used=0.5))
    return records


class DiffusionScaleTests(SimpleTestCase):
    def test_large_run_viscosity(self):
        self.assertAlmostEqual(diffusion_scale(1.0 / 3.0 * 1e-4, 100.0), 5.7735e-4, delta=1e-8)

    def test_unit_values(self):
        self.assertEqual(diffusion_scale(1.0, 1.0), 1.0)

    def test_quadrupling_vorticity_halves_the_scale(self):
        self.assertAlmostEqual(diffusion_scale(0.01, 8.0), diffusion_scale(0.01, 2.0) / 2, places=15)

    def test_quiescent_field_is_degenerate(self):
        with self.assertRaisesMessage(AnalysisError, 'degenerate: quiescent field'):
            diffusion_scale(0.01, 0.0)


class PeakWindowTests(SimpleTestCase):
    def test_window_starts_at_the_half_peak_crossing(self):
        times = [0, 1, 2, 3, 4, 5, 6, 7]
        omega = [1, 2, 3, 4, 5, 6, 5, 4]
        self.assertEqual(peak_window(times, omega), (2.0, 5.0))

    def test_series_starting_above_half_peak_opens_at_the_first_sample(self):
        self.assertEqual(peak_window([0.5, 1.0, 1.5], [4.0, 5.0, 3.0]), (0.5, 1.0))

    def test_select_window_keeps_the_rise_to_the_peak(self):
        records = [
            SparsenessRecord(t=float(t), omega_max=float(w), d=1.0, r=1.0, lambda_used=0.5)
            for t, w in enumerate([1, 2, 3, 4, 5, 6, 5, 4])
        ]
        selected, interval = select_window(records, 'peak')
        self.assertEqual([rec.t for rec in selected], [2.0, 3.0, 4.0, 5.0])
        self.assertEqual(interval, (2.0, 5.0))

    def test_reversed_window_is_rejected(self):
        record = SparsenessRecord(t=0.0, omega_max=1.0, d=1.0, r=1.0, lambda_used=0.5)
        with self.assertRaises(AnalysisError):
            select_window([record], (2.0, 1.0))

    def test_initial_maximum_does_not_hide_the_burst(self):
        self.assertEqual(peak_window(range(len(BURST_OMEGA)), BURST_OMEGA), (3.0, 9.0))

    def test_deep_dip_opens_at_the_half_burst_crossing(self):
        self.assertEqual(peak_window(range(7), [8, 3, 1, 2, 4, 6, 5]), (3.5, 5.0))

    def test_monotone_decay_collapses_to_the_first_sample(self):
        self.assertEqual(peak_window([0.0, 1.0, 2.0], [5.0, 4.0, 3.0]), (0.0, 0.0))

    def test_burst_window_gives_a_positive_power_law(self):
        selected, interval = select_window(_burst_records(), 'peak')
        self.assertEqual(interval, (3.0, 9.0))
        self.assertEqual([rec.t for rec in selected], [3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0])
        fit = loglog_regression(selected)
        self.assertGreater(fit.slope, 0.0)
        self.assertAlmostEqual(fit.slope, 1.5, delta=0.1)
        self.assertGreaterEqual(fit.r_squared, 0.8)


class MeasureSnapshotTests(SimpleTestCase):
    def setUp(self):
        self.grid = GridSpec(48)

    def test_ball_shaped_component_gives_its_radius(self):
        measurement = measure_snapshot(_ball_snapshot(self.grid), 0.5, oracle=True)
        record = measurement.record
        self.assertAlmostEqual(record.r, 0.4, delta=self.grid.spacing)
        self.assertAlmostEqual(record.r_oracle, record.r, delta=self.grid.spacing)
        self.assertAlmostEqual(record.d, math.sqrt(1e-3 / 0.8), places=12)
        self.assertEqual(len(measurement.rivs), 1)
        self.assertEqual(measurement.rivs[0].source_component, 'x+')

    def test_identical_snapshots_give_identical_records(self):
        first = measure_snapshot(_ball_snapshot(self.grid, time=1.0), 0.5).record
        second = measure_snapshot(_ball_snapshot(self.grid, time=1.0), 0.5).record
        self.assertEqual(first, second)

    def test_quiescent_snapshot_is_dropped_with_a_warning(self):
        snapshot = FieldSnapshot.from_vorticity(VectorField3.zeros(GridSpec(8)), nu=1e-3, time=0.0)
        with self.assertLogs('sparseness.analysis', 'WARNING') as logs:
            self.assertIsNone(measure_snapshot(snapshot, 0.5))
        self.assertIn('quiescent', logs.output[0])

    def test_velocity_only_snapshot_needs_derivation(self):
        grid = GridSpec(8)
        snapshot = FieldSnapshot.from_velocity(VectorField3.zeros(grid), nu=1e-3, time=0.0, with_vorticity=False)
        with self.assertRaisesMessage(SnapshotError, '--derive-vorticity'):
            measure_snapshots([snapshot], 0.5)

    def test_lambda_outside_unit_interval_is_rejected(self):
        with self.assertRaises(AnalysisError):
            measure_snapshots([_ball_snapshot(GridSpec(8))], 1.5)


class RegressionTests(SimpleTestCase):
    def test_exact_power_law_is_recovered(self):
        fit = loglog_regression(_power_law(1.098, 2.17, np.geomspace(1e-3, 1e-2, 50)))
        self.assertAlmostEqual(fit.slope, 1.098, delta=1e-12)
        self.assertAlmostEqual(fit.intercept, 2.17, delta=1e-12)
        self.assertLess(fit.slope_stderr, 1e-12)
        self.assertLess(fit.intercept_stderr, 1e-12)
        self.assertAlmostEqual(fit.r_squared, 1.0, places=12)

    def test_standard_errors_follow_the_residuals(self):
        log_d = np.array([0.0, 1.0, 2.0, 3.0])
        log_r = np.array([0.1, 0.9, 1.9, 3.1])
        fit = loglog_fit(log_d, log_r)
        # Exact line y = x plus residuals ±0.1 orthogonal to it; Sxx = 5, mean 1.5.
        variance = 0.04 / 2
        self.assertAlmostEqual(fit.slope_stderr, math.sqrt(variance / 5), places=12)
        self.assertAlmostEqual(fit.intercept_stderr, math.sqrt(variance * (0.25 + 2.25 / 5)), places=12)

    def test_constant_radius_has_zero_slope(self):
        records = [SparsenessRecord(t=float(i), omega_max=1.0, d=float(d), r=0.3, lambda_used=0.5)
                   for i, d in enumerate(np.linspace(0.1, 1.0, 10))]
        self.assertAlmostEqual(loglog_regression(records).slope, 0.0, delta=1e-12)

    def test_noisy_power_law_is_within_three_standard_errors(self):
        rng = np.random.default_rng(20190604)
        d = np.geomspace(1e-3, 1e-1, 100)
        hits = 0
        for _ in range(100):
            r = math.exp(2.17) * d ** 1.098 * (1 + 0.01 * rng.normal(size=d.size))
            fit = loglog_fit(np.log(d), np.log(r))
            hits += abs(fit.slope - 1.098) <= 3 * fit.slope_stderr
        self.assertGreaterEqual(hits, 95)

    def test_two_points_are_not_enough(self):
        with self.assertRaises(AnalysisError):
            loglog_regression(_power_law(1.0, 0.0, [0.1, 0.2]))

    def test_constant_abscissa_is_degenerate(self):
        with self.assertRaisesMessage(AnalysisError, 'degenerate abscissa'):
            loglog_fit([0.5, 0.5, 0.5], [1.0, 2.0, 3.0])

    def test_report_carries_uncertainty_notation(self):
        report = loglog_regression(_power_law(1.098, 2.17, np.geomspace(1e-3, 1e-2, 10))).as_dict()
        self.assertEqual(report['log_base'], 'e')
        self.assertAlmostEqual(parse_uncertainty(report['slope_notation'])[0], 1.098, places=9)

    def test_filtering_tightens_a_contaminated_fit(self):
        result = check_regression()
        self.assertTrue(result.passed, result.measured)


class CyclicFilterTests(SimpleTestCase):
    def setUp(self):
        self.t = np.arange(96, dtype=float)
        self.trend = 0.5 - 0.03 * self.t
        self.values = self.trend + 0.4 * np.sin(2 * math.pi * self.t / 12)

    def test_known_period_recovers_the_trend(self):
        result = filter_cyclic(self.t, self.values, period=12)
        np.testing.assert_allclose(result.values, self.trend, atol=1e-9)

    def test_period_is_detected_from_the_autocorrelation(self):
        result = filter_cyclic(self.t, self.values)
        self.assertTrue(result.cyclic_detected)
        self.assertEqual(result.period, 12)

    def test_constant_series_is_returned_flagged(self):
        values = np.full(32, 2.0)
        with self.assertLogs('sparseness.analysis', 'WARNING'):
            result = filter_cyclic(np.arange(32.0), values)
        self.assertEqual(result.flag, 'no cyclic component detected')
        np.testing.assert_array_equal(result.values, values)

    def test_white_noise_is_usually_flagged(self):
        rng = np.random.default_rng(1)
        flagged = 0
        with self.assertLogs('sparseness.analysis', 'WARNING'):
            for _ in range(100):
                flagged += not filter_cyclic(np.arange(512.0), rng.normal(size=512)).cyclic_detected
        self.assertGreaterEqual(flagged, 90)

    def test_refiltering_with_the_same_period_changes_little(self):
        once = filter_cyclic(self.t, self.values, period=12).values
        twice = filter_cyclic(self.t, once, period=12).values
        self.assertLess(np.abs(twice - once).max(), 0.05 * 0.4)

    def test_short_series_is_rejected(self):
        with self.assertRaises(AnalysisError):
            filter_cyclic(np.arange(4.0), np.arange(4.0))

    def test_uneven_sampling_is_rejected(self):
        with self.assertRaises(AnalysisError):
            filter_cyclic([0, 1, 2, 4, 5, 6, 7, 8], np.zeros(8))

    def test_filter_records_reports_both_series(self):
        records = _power_law(1.5, 0.0, np.exp(-4.0 - 0.02 * self.t))
        _, filters = filter_records(records, period=12)
        self.assertEqual(set(filters), {'log_d', 'log_r'})
        self.assertEqual(filters['log_r']['period'], 12)


class UncertaintyNotationTests(SimpleTestCase):
    def test_format(self):
        self.assertEqual(format_uncertainty(1.098, 0.009), '1.098(9)')
        self.assertEqual(format_uncertainty(2.17, 0.04), '2.17(4)')
        self.assertEqual(format_uncertainty(1.5, 0.2), '1.5(2)')
        self.assertEqual(format_uncertainty(6.1, 1.6), '6.1(1.6)')

    def test_parse(self):
        value, uncertainty = parse_uncertainty('1.098(9)')
        self.assertEqual(value, 1.098)
        self.assertAlmostEqual(uncertainty, 0.009, places=15)
        self.assertEqual(parse_uncertainty('6.1(1.6)'), (6.1, 1.6))

    def test_parse_rejects_plain_numbers(self):
        with self.assertRaises(AnalysisError):
            parse_uncertainty('1.098')


class SeriesFileTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, text):
        path = self.dir / 'series.csv'
        path.write_text(text)
        return path

    def test_well_formed_file(self):
        path = self._write('t,omega_max,d,r,lambda\n0,1,0.1,0.2,0.5\n1,2,0.07,0.15,0.5\n2,3,0.05,0.1,0.5\n')
        records = ingest_external_series(path)
        self.assertEqual(len(records), 3)
        self.assertEqual(records[1].d, 0.07)
        self.assertIsNone(records[0].r_oracle)

    def test_zero_radius_row_is_dropped_with_a_warning(self):
        path = self._write('t,omega_max,d,r,lambda\n0,1,0.1,0.2,0.5\n1,2,0.07,0,0.5\n')
        with self.assertLogs('sparseness.analysis', 'WARNING') as logs:
            records = ingest_external_series(path)
        self.assertEqual(len(records), 1)
        self.assertIn('line 3', logs.output[0])

    def test_malformed_rows_are_reported_by_line(self):
        path = self._write('t,omega_max,d,r,lambda\n0,1,0.1,0.2,0.5\n1,2,abc,0.15,0.5\n2,3,0.05,0.1,1.5\n')
        with self.assertRaises(AnalysisError) as caught:
            ingest_external_series(path)
        message = str(caught.exception)
        self.assertIn('line 3: d', message)
        self.assertIn('line 4: lambda', message)

    def test_missing_column_is_rejected(self):
        path = self._write('t,omega_max,d,r\n0,1,0.1,0.2\n')
        with self.assertRaisesMessage(AnalysisError, 'lambda'):
            ingest_external_series(path)

    def test_written_series_reads_back_exactly(self):
        records = [
            SparsenessRecord(t=0.1 * i, omega_max=1.0 + i / 3, d=0.01 / (i + 1), r=0.02 / (i + 1) ** 1.1,
                             lambda_used=0.5, r_oracle=0.019 / (i + 1))
            for i in range(5)
        ]
        path = self.dir / 'out.csv'
        write_timeseries_csv(records, path)
        self.assertEqual(ingest_external_series(path), records)
