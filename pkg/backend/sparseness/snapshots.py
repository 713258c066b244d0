"""
Snapshot file format shared by the solver and the analysis pipeline.

A snapshot is a JSON header ``<stem>.json`` plus one raw file per field,
``<stem>.<field>.f64``, holding n³ little-endian 64-bit floats in x-fastest
order.
"""

from dataclasses import dataclass, field as dataclass_field
import json
import logging
from pathlib import Path

import numpy as np

from .exceptions import SnapshotError
from .field import GridSpec, ScalarField3, VectorField3, curl, max_norm

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
VELOCITY_FIELDS = ('u_x', 'u_y', 'u_z')
VORTICITY_FIELDS = ('omega_x', 'omega_y', 'omega_z')


@dataclass(eq=False)
class FieldSnapshot:
    """A time-stamped set of named fields on one grid."""
    grid: GridSpec
    nu: float
    time: float
    step: int = 0
    fields: dict = dataclass_field(default_factory=dict)

    @classmethod
    def from_velocity(cls, velocity, nu, time, step=0, with_vorticity=True):
        fields = dict(zip(VELOCITY_FIELDS, velocity.components))
        if with_vorticity:
            fields.update(zip(VORTICITY_FIELDS, curl(velocity).components))
        return cls(grid=velocity.grid, nu=nu, time=time, step=step, fields=fields)

    @classmethod
    def from_vorticity(cls, vorticity, nu, time, step=0):
        return cls(grid=vorticity.grid, nu=nu, time=time, step=step,
                   fields=dict(zip(VORTICITY_FIELDS, vorticity.components)))

    def load(self, derive_vorticity=False):
        if derive_vorticity and not self.has_vorticity():
            self.fields.update(zip(VORTICITY_FIELDS, curl(self.velocity()).components))
        return self

    def _vector(self, names, label):
        missing = [name for name in names if name not in self.fields]
        if missing:
            raise SnapshotError(f'Snapshot at t={self.time:.6g} has no {label} fields ({", ".join(missing)}).')
        return VectorField3(self.grid, tuple(self.fields[name] for name in names))

    def velocity(self):
        return self._vector(VELOCITY_FIELDS, 'velocity')

    def vorticity(self):
        return self._vector(VORTICITY_FIELDS, 'vorticity')

    def has_vorticity(self):
        return all(name in self.fields for name in VORTICITY_FIELDS)


@dataclass(frozen=True)
class SnapshotHeader:
    """Parsed header of an on-disk snapshot; fields are loaded on demand."""
    path: Path
    grid: GridSpec
    nu: float
    time: float
    step: int
    field_names: tuple
    omega_max: float = None

    def load(self, derive_vorticity=False):
        return read_snapshot(self.path, derive_vorticity=derive_vorticity)

    def has_vorticity(self):
        return all(name in self.field_names for name in VORTICITY_FIELDS)


def _field_path(header_path, name):
    return header_path.with_name(f'{header_path.stem}.{name}.f64')


def snapshot_files(header):
    """Raw field files belonging to ``header``."""
    return [_field_path(header.path, name) for name in header.field_names]


def write_snapshot(snapshot, directory, stem, index=None):
    """
    Write a snapshot header and its raw field files.

    Returns the list of written paths (header first). Disk failures are
    surfaced as ``SnapshotError`` naming the snapshot index.
    """
    directory = Path(directory)
    header_path = directory / f'{stem}.json'
    names = tuple(snapshot.fields)
    header = {
        'schema_version': SCHEMA_VERSION,
        'n': snapshot.grid.n,
        'domain_length': snapshot.grid.domain_length,
        'nu': snapshot.nu,
        'time': snapshot.time,
        'step': snapshot.step,
        'field_names': list(names),
        'dtype': 'f64',
        'order': 'x-fastest',
        'endianness': 'little',
    }
    if snapshot.has_vorticity():
        header['omega_max'] = max_norm(snapshot.vorticity())

    written = [header_path]
    try:
        directory.mkdir(parents=True, exist_ok=True)
        header_path.write_text(json.dumps(header, indent=2, sort_keys=True) + '\n')
        for name in names:
            path = _field_path(header_path, name)
            snapshot.fields[name].values.ravel(order='F').astype('<f8').tofile(path)
            written.append(path)
    except OSError as exc:
        label = stem if index is None else f'{index} ({stem})'
        raise SnapshotError(f'Failed to write snapshot {label}: {exc}') from exc
    return written


def read_header(path):
    path = Path(path)
    try:
        header = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise SnapshotError(f'Unreadable snapshot header {path}: {exc}') from exc

    required = ('schema_version', 'n', 'domain_length', 'nu', 'time', 'field_names')
    missing = [key for key in required if key not in header]
    if missing:
        raise SnapshotError(f'Snapshot header {path} is missing keys: {", ".join(missing)}')
    if header['schema_version'] != SCHEMA_VERSION:
        raise SnapshotError(f'Unsupported snapshot schema_version {header["schema_version"]} in {path}')
    if header.get('dtype', 'f64') != 'f64' or header.get('endianness', 'little') != 'little' \
            or header.get('order', 'x-fastest') != 'x-fastest':
        raise SnapshotError(f'Snapshot {path} must be little-endian f64 in x-fastest order.')

    return SnapshotHeader(
        path=path,
        grid=GridSpec(int(header['n']), float(header['domain_length'])),
        nu=float(header['nu']),
        time=float(header['time']),
        step=int(header.get('step', 0)),
        field_names=tuple(header['field_names']),
        omega_max=header.get('omega_max'),
    )


def read_snapshot(path, derive_vorticity=False):
    """
    Load a snapshot. With ``derive_vorticity`` the vorticity is recomputed by
    curl when the file only carries velocity.
    """
    header = read_header(path)
    grid = header.grid
    fields = {}
    for name in header.field_names:
        field_path = _field_path(header.path, name)
        try:
            raw = np.fromfile(field_path, dtype='<f8')
        except OSError as exc:
            raise SnapshotError(f'Missing field file {field_path}: {exc}') from exc
        if raw.size != grid.n ** 3:
            raise SnapshotError(f'Field file {field_path} holds {raw.size} values, expected {grid.n ** 3}.')
        fields[name] = ScalarField3(grid, raw.reshape(grid.shape, order='F'))

    snapshot = FieldSnapshot(grid=grid, nu=header.nu, time=header.time, step=header.step, fields=fields)
    if derive_vorticity and not snapshot.has_vorticity():
        logger.info('Deriving vorticity from velocity for %s', header.path.name)
        snapshot.fields.update(zip(VORTICITY_FIELDS, curl(snapshot.velocity()).components))
    return snapshot


def list_snapshots(directory):
    """Headers of every snapshot in ``directory``, ordered by time then step."""
    directory = Path(directory)
    if not directory.is_dir():
        raise SnapshotError(f'Snapshot directory {directory} does not exist.')
    headers = []
    for path in sorted(directory.glob('*.json')):
        try:
            candidate = json.loads(path.read_text())
        except (OSError, ValueError):
            continue
        if isinstance(candidate, dict) and 'field_names' in candidate and 'schema_version' in candidate:
            headers.append(read_header(path))
    if not headers:
        raise SnapshotError(f'No snapshots found in {directory}.')
    return sorted(headers, key=lambda h: (h.time, h.step))
