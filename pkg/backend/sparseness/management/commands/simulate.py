"""
Management command to run the Kida-vortex simulation described by a run
configuration file.

Writes snapshots, the per-step ‖ω‖_∞ and energy series, and a manifest.
"""
import csv
from pathlib import Path

from django.conf import settings

from sparseness.management.base import LaboratoryCommand
from sparseness.manifests import ManifestRecorder
from sparseness.models import RunCommand
from sparseness.serializers import SolverConfigSerializer
from sparseness.solver import simulate


def _write_series(path, header, rows):
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for step_index, t, value in rows:
            writer.writerow([step_index, repr(float(t)), repr(float(value))])


class Command(LaboratoryCommand):
    help = 'Integrate the Kida vortex to T_END and write snapshots plus a manifest'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('config', type=str, help='Run configuration file (key=value)')
        parser.add_argument(
            '--output-dir',
            type=str,
            default=None,
            help='Directory for snapshots and series (default: <SPARSENESS_OUTPUT_ROOT>/<config name>)',
        )

    def run(self, **options):
        config_path = Path(options['config'])
        config = SolverConfigSerializer.from_file(config_path)
        output_dir = Path(options['output_dir'] or Path(settings.SPARSENESS_OUTPUT_ROOT) / config_path.stem)
        snapshot_dir = output_dir / 'snapshots'

        with ManifestRecorder(RunCommand.SIMULATE, output_dir, config.as_dict()) as recorder:
            recorder.add_inputs(config_path)
            run = simulate(config, output_dir=snapshot_dir)

            omega_path = output_dir / 'omega_max.csv'
            energy_path = output_dir / 'energy.csv'
            _write_series(omega_path, ('step', 't', 'omega_max'), run.omega_series)
            _write_series(energy_path, ('step', 't', 'kinetic_energy'), run.energy_series)

            snapshot_files = sorted(p for p in snapshot_dir.iterdir() if p.is_file())
            recorder.add_outputs(omega_path, energy_path, *snapshot_files)
            recorder.config.update(run.metadata())
            _, manifest_path = recorder.finish()

        for warning in recorder.warnings:
            self.stdout.write(self.style.WARNING(f'[WARN] {warning}'))
        self.stdout.write(
            self.style.SUCCESS(
                f'Simulated {run.steps} steps (dt={run.config.dt:.6g}), '
                f'{len(run.snapshot_paths)} snapshots in {snapshot_dir}; manifest {manifest_path}'
            )
        )
