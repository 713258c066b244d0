"""
Shared plumbing for the laboratory's management commands: the --threads
knob and translation of laboratory errors into exit codes.
"""

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from scipy import fft

from sparseness.exceptions import ConfigurationError, SparsenessError


def parse_window(text):
    """'peak', 'all' or 't_a,t_b'."""
    if text is None or text == 'all':
        return None
    if text == 'peak':
        return 'peak'
    try:
        start, end = (float(part) for part in text.split(','))
    except ValueError as exc:
        raise ConfigurationError(f"Window must be 'peak', 'all' or 't_a,t_b', got {text!r}.",
                                 {'window': 'malformed'}) from exc
    return start, end


class LaboratoryCommand(BaseCommand):
    """
    Base class for pipeline commands. Subclasses implement ``run``; any
    SparsenessError escaping it becomes a CommandError carrying the error's
    exit code (1 configuration, 2 runtime).
    """

    def add_arguments(self, parser):
        default_threads = max(1, int(getattr(settings, 'SPARSENESS_THREADS', 1)))
        parser.add_argument(
            '--threads',
            type=int,
            default=default_threads,
            help=f'Worker threads for FFTs and independent work items (default: {default_threads})',
        )

    def handle(self, *args, **options):
        threads = options['threads']
        if threads < 1:
            raise CommandError('--threads must be at least 1', returncode=ConfigurationError.exit_code)
        try:
            with fft.set_workers(threads):
                self.run(**options)
        except SparsenessError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code) from exc

    def run(self, **options):
        raise NotImplementedError
