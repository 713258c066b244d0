"""
Serializers for the sparseness laboratory

Validation of run configuration files and time-series CSV rows, and the
rendering of run manifests. Every failure is keyed by the offending field.
"""

import logging
import math

from decouple import RepositoryEnv
from rest_framework import serializers

from .exceptions import ConfigurationError
from .field import GridSpec
from .models import RunManifest
from .solver import SolverConfig

logger = logging.getLogger(__name__)


def _finite(value):
    if not math.isfinite(value):
        raise serializers.ValidationError("Value must be finite.")
    return value


class SolverConfigSerializer(serializers.Serializer):
    """
    Keys of a run configuration file.

    Exactly one of NU and REYNOLDS is required (ν = U₀·L/Re); DT and
    CFL_TARGET are mutually exclusive, CFL 0.5 being the default.
    """
    N = serializers.IntegerField(min_value=4)
    DOMAIN_LENGTH = serializers.FloatField(required=False, default=2.0 * math.pi)
    NU = serializers.FloatField(required=False)
    REYNOLDS = serializers.FloatField(required=False)
    U0_AMPLITUDE = serializers.FloatField()
    DT = serializers.FloatField(required=False)
    CFL_TARGET = serializers.FloatField(required=False)
    T_END = serializers.FloatField()
    SNAPSHOT_STRIDE = serializers.IntegerField(min_value=1, required=False, default=10)

    def validate_N(self, value):
        if value % 2:
            raise serializers.ValidationError("Grid size must be even.")
        return value

    def _positive(self, value):
        _finite(value)
        if value <= 0:
            raise serializers.ValidationError("Must be positive.")
        return value

    validate_DOMAIN_LENGTH = _positive
    validate_NU = _positive
    validate_REYNOLDS = _positive
    validate_U0_AMPLITUDE = _positive
    validate_DT = _positive
    validate_CFL_TARGET = _positive
    validate_T_END = _positive

    def validate(self, data):
        if ('NU' in data) == ('REYNOLDS' in data):
            raise serializers.ValidationError({
                'NU': "Set exactly one of NU and REYNOLDS."
            })
        if 'DT' in data and 'CFL_TARGET' in data:
            raise serializers.ValidationError({
                'DT': "DT and CFL_TARGET are mutually exclusive."
            })
        return data

    def to_solver_config(self):
        data = self.validated_data
        grid = GridSpec(data['N'], data['DOMAIN_LENGTH'])
        nu = data.get('NU')
        if nu is None:
            nu = data['U0_AMPLITUDE'] * grid.domain_length / data['REYNOLDS']
        return SolverConfig(
            grid=grid,
            nu=nu,
            u0_amplitude=data['U0_AMPLITUDE'],
            t_end=data['T_END'],
            snapshot_stride=data['SNAPSHOT_STRIDE'],
            dt=data.get('DT'),
            cfl_target=data.get('CFL_TARGET', 0.5),
        )

    @classmethod
    def from_file(cls, path):
        """Read a key=value run configuration file (decouple's .env syntax)."""
        try:
            repository = RepositoryEnv(path)
        except OSError as exc:
            raise ConfigurationError(f'Cannot read run configuration {path}: {exc}', {'config': str(exc)}) from exc
        unknown = sorted(key for key in repository.data if key not in cls().fields)
        if unknown:
            raise ConfigurationError(
                f'Unknown key(s) in {path}: {", ".join(unknown)}',
                {key: ['Unknown configuration key.'] for key in unknown},
            )
        return cls.load(dict(repository.data), source=f'run configuration {path}')

    @classmethod
    def load(cls, values, source='configuration'):
        """Validate raw key/value pairs; raises ConfigurationError naming every bad field."""
        serializer = cls(data=values)
        if not serializer.is_valid():
            errors = {field: [str(m) for m in messages] for field, messages in serializer.errors.items()}
            listing = '; '.join(f'{field}: {" ".join(messages)}' for field, messages in errors.items())
            raise ConfigurationError(f'Invalid {source}: {listing}', errors)
        return serializer.to_solver_config()


class SparsenessRecordSerializer(serializers.Serializer):
    """One time-series row: t, omega_max, d, r, lambda and optional r_oracle."""
    t = serializers.FloatField()
    omega_max = serializers.FloatField(min_value=0)
    d = serializers.FloatField()
    r = serializers.FloatField()
    r_oracle = serializers.FloatField(required=False, allow_null=True)

    def get_fields(self):
        fields = super().get_fields()
        # 'lambda' is a keyword, so it cannot be declared in the class body.
        fields['lambda'] = serializers.FloatField(min_value=0, max_value=1)
        return fields

    def validate(self, data):
        for name, value in data.items():
            if value is not None and not math.isfinite(value):
                raise serializers.ValidationError({name: "Value must be finite."})
        return data


class RunManifestSerializer(serializers.ModelSerializer):
    """Serializer for RunManifest, as written to manifest.json."""
    duration_seconds = serializers.FloatField(read_only=True)

    class Meta:
        model = RunManifest
        fields = (
            'id',
            'command',
            'schema_version',
            'tool_version',
            'config',
            'inputs',
            'outputs',
            'warnings',
            'output_dir',
            'exit_code',
            'started_at',
            'finished_at',
            'duration_seconds',
        )
        read_only_fields = ('id',)
