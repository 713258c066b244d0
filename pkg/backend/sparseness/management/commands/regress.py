"""
Management command to fit log r = α·log d + c over a time-series CSV.
"""
from pathlib import Path

from sparseness.analysis import (
    filter_records,
    format_uncertainty,
    ingest_external_series,
    loglog_regression,
    select_window,
    write_plot_csv,
    write_regression_report,
)
from sparseness.management.base import LaboratoryCommand, parse_window
from sparseness.manifests import ManifestRecorder
from sparseness.models import RunCommand


class Command(LaboratoryCommand):
    help = 'Log-log regression of r against d, optionally after removing a cyclic component'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('series', type=str, help='Time-series CSV (t,omega_max,d,r,lambda[,r_oracle])')
        parser.add_argument('--filter-cyclic', action='store_true',
                            help='Remove the dominant cyclic component from ln d and ln r before fitting')
        parser.add_argument('--period', type=int, default=None,
                            help='Cycle length in samples (default: detected from the autocorrelation)')
        parser.add_argument('--window', type=str, default='all', help="'all', 'peak' or 't_a,t_b'")
        parser.add_argument('--output-dir', type=str, default=None,
                            help='Output directory (default: <series dir>/regress)')

    def run(self, **options):
        series_path = Path(options['series'])
        output_dir = Path(options['output_dir'] or series_path.parent / 'regress')
        window = parse_window(options['window'])
        echo = {
            'filter_cyclic': options['filter_cyclic'],
            'period': options['period'],
            'window': options['window'],
        }

        with ManifestRecorder(RunCommand.REGRESS, output_dir, echo) as recorder:
            recorder.add_inputs(series_path)
            records, interval = select_window(ingest_external_series(series_path), window)

            unfiltered, filters = None, None
            if options['filter_cyclic']:
                unfiltered = loglog_regression(records)
                records, filters = filter_records(records, options['period'])
            result = loglog_regression(records)

            output_dir.mkdir(parents=True, exist_ok=True)
            report_path = output_dir / 'report.json'
            plot_path = output_dir / 'plot.csv'
            write_regression_report(result, report_path, window=interval, filters=filters,
                                    source=series_path, unfiltered=unfiltered)
            write_plot_csv(records, result, plot_path)
            recorder.add_outputs(report_path, plot_path)
            recorder.finish()

        for warning in recorder.warnings:
            self.stdout.write(self.style.WARNING(f'[WARN] {warning}'))
        if unfiltered is not None:
            self.stdout.write(
                f'Before filtering: slope {format_uncertainty(unfiltered.slope, unfiltered.slope_stderr)}'
            )
        self.stdout.write(
            self.style.SUCCESS(
                f'fit = log(d) * {format_uncertainty(result.slope, result.slope_stderr)} + '
                f'{format_uncertainty(result.intercept_log10, result.intercept_log10_stderr)} '
                f'(n={result.n_points}, r^2={result.r_squared:.4f}) -> {report_path}'
            )
        )
