"""
Exception hierarchy for the sparseness laboratory.

Every error carries the process exit code the management commands use when
the error escapes: 1 for validation/configuration problems, 2 for runtime or
numerical failures.
"""

CONFIG_EXIT_CODE = 1
RUNTIME_EXIT_CODE = 2


class SparsenessError(Exception):
    """Base class for all errors raised by the laboratory."""
    exit_code = RUNTIME_EXIT_CODE


class ConfigurationError(SparsenessError):
    """Invalid run configuration or command-line settings."""
    exit_code = CONFIG_EXIT_CODE

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = errors or {}


class FieldError(SparsenessError):
    """Invalid grid or field data (shape mismatch, non-finite samples)."""
    exit_code = CONFIG_EXIT_CODE


class SnapshotError(SparsenessError):
    """Snapshot files missing, malformed or not writable."""
    exit_code = CONFIG_EXIT_CODE


class InstabilityError(SparsenessError):
    """The time integration produced non-finite values."""

    def __init__(self, time, dt, omega_max):
        self.time = time
        self.dt = dt
        self.omega_max = omega_max
        super().__init__(
            f'blow-up or instability detected at t={time:.6g} '
            f'(dt={dt:.6g}, last finite |omega|_inf={omega_max:.6g})'
        )


class LevelSetError(SparsenessError):
    """Invalid super-level set or sparseness query."""
    exit_code = CONFIG_EXIT_CODE


class GeometryError(SparsenessError):
    """Meshing, distance or inscribed-sphere failures."""


class AnalysisError(SparsenessError):
    """Time-series assembly, regression or ingestion failures."""
    exit_code = CONFIG_EXIT_CODE
