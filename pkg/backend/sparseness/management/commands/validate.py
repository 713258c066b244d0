"""
Management command to run the oracle cross-checks.

Exits with status 2 when any check fails; the failed checks are listed with
measured against expected values.
"""
import json
from pathlib import Path

from django.conf import settings
from django.core.management.base import CommandError

from sparseness.exceptions import SparsenessError
from sparseness.management.base import LaboratoryCommand
from sparseness.manifests import ManifestRecorder
from sparseness.models import RunCommand
from sparseness.validation import CHECKS, FAULTS, run_checks


class Command(LaboratoryCommand):
    help = 'Run the oracle cross-checks (Monte Carlo, brute force, exhaustive, exact solution)'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--only', action='append', choices=list(CHECKS), default=None,
                            help='Run only the named check (repeatable)')
        parser.add_argument('--inject-fault', choices=FAULTS, default=None,
                            help='Deliberately break a code path to prove the matching check catches it')
        parser.add_argument('--output-dir', type=str, default=None,
                            help='Output directory (default: <SPARSENESS_OUTPUT_ROOT>/validate)')

    def run(self, **options):
        output_dir = Path(options['output_dir'] or Path(settings.SPARSENESS_OUTPUT_ROOT) / 'validate')
        echo = {'only': options['only'], 'inject_fault': options['inject_fault']}

        with ManifestRecorder(RunCommand.VALIDATE, output_dir, echo) as recorder:
            results = run_checks(only=options['only'], inject_fault=options['inject_fault'])
            failed = [result for result in results if not result.passed]

            output_dir.mkdir(parents=True, exist_ok=True)
            report_path = output_dir / 'validation.json'
            report = {
                'passed': not failed,
                'checks': [result.as_dict() for result in results],
            }
            report_path.write_text(json.dumps(report, indent=2, sort_keys=True, default=str) + '\n')
            recorder.add_outputs(report_path)
            recorder.finish(exit_code=SparsenessError.exit_code if failed else 0)

        for result in results:
            line = f'{result.name}: measured {result.measured}, expected {result.expected}'
            if result.passed:
                self.stdout.write(self.style.SUCCESS(f'[PASS] {line}'))
            else:
                self.stdout.write(self.style.ERROR(f'[FAIL] {line}'))
                for detail in result.details:
                    self.stdout.write(f'    {detail}')

        if failed:
            names = ', '.join(result.name for result in failed)
            raise CommandError(f'{len(failed)} check(s) failed: {names}', returncode=SparsenessError.exit_code)
        self.stdout.write(self.style.SUCCESS(f'All {len(results)} check(s) passed -> {report_path}'))
