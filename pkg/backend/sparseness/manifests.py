"""
Run manifests: configuration echo, file digests, timing and warnings for
every command invocation.
"""

import hashlib
import json
import logging
from pathlib import Path

from django.core.exceptions import ImproperlyConfigured
from django.db.utils import OperationalError, ProgrammingError
from django.utils import timezone

from . import __version__
from .models import RunManifest
from .serializers import RunManifestSerializer

logger = logging.getLogger(__name__)

MANIFEST_SCHEMA_VERSION = 1
MANIFEST_NAME = 'manifest.json'


def file_digest(path, chunk_size=1 << 20):
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(chunk_size), b''):
            digest.update(chunk)
    return digest.hexdigest()


def digest_files(paths, root=None):
    """Map of (root-relative) path -> sha256 for every file, sorted by path."""
    digests = {}
    for path in sorted(Path(p) for p in paths):
        key = str(path.relative_to(root)) if root is not None and path.is_relative_to(root) else str(path)
        digests[key] = file_digest(path)
    return digests


class WarningCollector(logging.Handler):
    """Keeps the text of every WARNING-or-worse record emitted under the package logger."""

    def __init__(self):
        super().__init__(level=logging.WARNING)
        self.messages = []

    def emit(self, record):
        self.messages.append(f'{record.name}: {record.getMessage()}')


class ManifestRecorder:
    """
    Context manager wrapping one command run.

    Collects warnings while open; ``finish`` digests the registered inputs
    and outputs, writes ``manifest.json`` into the output directory and
    stores a RunManifest row when the database is reachable.
    """

    def __init__(self, command, output_dir, config=None):
        self.command = command
        self.output_dir = Path(output_dir)
        self.config = dict(config or {})
        self.inputs = []
        self.outputs = []
        self.collector = WarningCollector()
        self.started_at = None
        self._logger = logging.getLogger('sparseness')

    def __enter__(self):
        self.started_at = timezone.now()
        self._logger.addHandler(self.collector)
        return self

    def __exit__(self, exc_type, exc, tb):
        self._logger.removeHandler(self.collector)
        return False

    @property
    def warnings(self):
        return list(self.collector.messages)

    def add_inputs(self, *paths):
        self.inputs.extend(Path(p) for p in paths)

    def add_outputs(self, *paths):
        self.outputs.extend(Path(p) for p in paths)

    def finish(self, exit_code=0):
        manifest = RunManifest(
            command=self.command,
            schema_version=MANIFEST_SCHEMA_VERSION,
            tool_version=__version__,
            config=self.config,
            inputs=digest_files(self.inputs),
            outputs=digest_files(self.outputs, root=self.output_dir),
            warnings=self.warnings,
            output_dir=str(self.output_dir),
            exit_code=exit_code,
            started_at=self.started_at or timezone.now(),
            finished_at=timezone.now(),
        )
        self.output_dir.mkdir(parents=True, exist_ok=True)
        path = self.output_dir / MANIFEST_NAME
        path.write_text(json.dumps(RunManifestSerializer(manifest).data, indent=2, sort_keys=True) + '\n')

        try:
            manifest.save()
        except (OperationalError, ProgrammingError, ImproperlyConfigured) as exc:
            logger.warning('Run manifest not stored: database unavailable/misconfigured (%s)', exc)
        return manifest, path
