"""
Management command to measure ‖ω‖_∞, d(t) and r(t) over a snapshot directory.
"""
from dataclasses import asdict
import json
from pathlib import Path

from django.conf import settings

from sparseness.analysis import measure_snapshots, write_timeseries_csv
from sparseness.field import magnitude
from sparseness.geometry import GeometryConfig, inscribed_sphere_records, riv_block, write_obj
from sparseness.levelsets import ComponentPart, component_parts, write_rivs
from sparseness.management.base import LaboratoryCommand, parse_window
from sparseness.manifests import ManifestRecorder
from sparseness.models import RunCommand
from sparseness.snapshots import list_snapshots, snapshot_files


def _source_field(omega, source):
    if source == ComponentPart.MAGNITUDE:
        return magnitude(omega)
    return component_parts(omega)[source]


class Command(LaboratoryCommand):
    help = 'Assemble the (t, omega_max, d, r) time series from vorticity snapshots'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('snapshot_dir', type=str, help='Directory of snapshot files')
        parser.add_argument(
            '--lambda',
            dest='fraction',
            type=float,
            default=settings.SPARSENESS_LAMBDA,
            help=f'Super-level fraction of |omega|_inf (default: {settings.SPARSENESS_LAMBDA})',
        )
        parser.add_argument('--connectivity', type=int, choices=(6, 26), default=None)
        parser.add_argument('--refine-depth', type=int, default=None)
        parser.add_argument('--window', type=str, default='all', help="'all', 'peak' or 't_a,t_b'")
        parser.add_argument('--oracle', action='store_true', help='Add the voxel distance oracle column r_oracle')
        parser.add_argument('--magnitude', action='store_true',
                            help='Use the max-norm magnitude set instead of the six component sets')
        parser.add_argument('--derive-vorticity', action='store_true',
                            help='Recompute vorticity from velocity when a snapshot lacks it')
        parser.add_argument('--export', action='store_true',
                            help='Also write RIV inventories and the OBJ mesh of each winning RIV')
        parser.add_argument('--output-dir', type=str, default=None,
                            help='Output directory (default: <snapshot_dir>/../measure)')

    def run(self, **options):
        snapshot_dir = Path(options['snapshot_dir'])
        output_dir = Path(options['output_dir'] or snapshot_dir.parent / 'measure')
        window = parse_window(options['window'])
        fraction = options['fraction']
        geometry = GeometryConfig.from_settings(
            connectivity=options['connectivity'],
            refine_depth=options['refine_depth'],
        )
        echo = {
            'lambda': fraction,
            'window': options['window'],
            'oracle': options['oracle'],
            'magnitude': options['magnitude'],
            'geometry': asdict(geometry),
        }

        with ManifestRecorder(RunCommand.MEASURE, output_dir, echo) as recorder:
            headers = list_snapshots(snapshot_dir)
            for header in headers:
                recorder.add_inputs(header.path, *snapshot_files(header))
            measured = measure_snapshots(
                headers, fraction, geometry, window=window,
                use_magnitude=options['magnitude'], oracle=options['oracle'],
                workers=options['threads'], derive_vorticity=options['derive_vorticity'],
            )
            output_dir.mkdir(parents=True, exist_ok=True)
            series_path = output_dir / 'timeseries.csv'
            write_timeseries_csv([m.record for m in measured], series_path)

            spheres_path = output_dir / 'spheres.json'
            spheres = [{'t': m.record.t, 'spheres': inscribed_sphere_records(m.search)} for m in measured]
            spheres_path.write_text(json.dumps(spheres, indent=2, sort_keys=True) + '\n')
            recorder.add_outputs(series_path, spheres_path)

            if options['export']:
                recorder.add_outputs(*self._export(measured, headers, output_dir, options['derive_vorticity']))
            recorder.finish()

        for warning in recorder.warnings:
            self.stdout.write(self.style.WARNING(f'[WARN] {warning}'))
        self.stdout.write(
            self.style.SUCCESS(f'Measured {len(measured)} of {len(headers)} snapshots -> {series_path}')
        )

    def _export(self, measured, headers, output_dir, derive_vorticity):
        written = []
        by_time = {header.time: header for header in headers}
        for index, measurement in enumerate(measured):
            rivs_path = output_dir / f'rivs_{index:04d}.json'
            write_rivs(measurement.rivs, rivs_path)
            written.append(rivs_path)

            best = measurement.search.best
            riv = next(r for r in measurement.rivs if r.component_id == best.riv_id)
            snapshot = by_time[measurement.record.t].load(derive_vorticity=derive_vorticity)
            field = _source_field(snapshot.vorticity(), riv.source_component)
            mesh_path = output_dir / f'riv_{index:04d}.obj'
            write_obj(riv_block(riv, field, riv.threshold).mesh(), mesh_path)
            written.append(mesh_path)
        return written
