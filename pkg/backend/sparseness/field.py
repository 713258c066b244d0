"""
Uniform periodic-grid fields and spectral differential operators.

Arrays are held as numpy arrays of shape (n, n, n) indexed [ix, iy, iz]; the
sample at index (i, j, k) sits at the physical point (i*h, j*h, k*h). On disk
the same samples are written x-fastest (Fortran order of this array).

All spectral operators use the real-to-complex transform of ``scipy.fft``.
Thread count is controlled by the caller through ``scipy.fft.set_workers``;
pocketfft splits work over independent 1D transforms, so results do not
depend on the worker count.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy import fft

from .exceptions import FieldError


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic N³ grid on a cubic box of side ``domain_length``."""
    n: int
    domain_length: float = 2.0 * math.pi

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4 or self.n % 2:
            raise FieldError(f'Grid size n must be an even integer >= 4, got {self.n!r}.')
        if not (self.domain_length > 0 and math.isfinite(self.domain_length)):
            raise FieldError(f'Domain length must be positive and finite, got {self.domain_length!r}.')

    @property
    def spacing(self):
        return self.domain_length / self.n

    @property
    def shape(self):
        return (self.n, self.n, self.n)

    @property
    def cell_volume(self):
        return self.spacing ** 3

    def coordinates(self):
        """1D array of grid-point coordinates along any axis."""
        return np.arange(self.n) * self.spacing

    def mesh(self):
        """Three broadcastable coordinate arrays (x, y, z)."""
        axis = self.coordinates()
        return (
            axis[:, None, None],
            axis[None, :, None],
            axis[None, None, :],
        )

    def linear_index(self, ix, iy, iz):
        """x-fastest linear index of grid point(s)."""
        return ix + self.n * (iy + self.n * iz)

    def unravel(self, linear):
        linear = np.asarray(linear)
        return linear % self.n, (linear // self.n) % self.n, linear // (self.n * self.n)


def _freeze(values):
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class ScalarField3:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != self.grid.shape:
            raise FieldError(f'Field shape {values.shape} does not match grid {self.grid.shape}.')
        if not np.all(np.isfinite(values)):
            bad = int(np.count_nonzero(~np.isfinite(values)))
            raise FieldError(f'Field contains {bad} non-finite samples.')
        object.__setattr__(self, 'values', _freeze(values))

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, np.full(grid.shape, float(value)))

    def max_abs(self):
        return float(np.abs(self.values).max())


@dataclass(frozen=True, eq=False)
class VectorField3:
    grid: GridSpec
    components: tuple

    def __post_init__(self):
        if len(self.components) != 3:
            raise FieldError('A vector field needs exactly three components.')
        for component in self.components:
            if component.grid != self.grid:
                raise FieldError('All vector components must share the same grid.')
        object.__setattr__(self, 'components', tuple(self.components))

    @classmethod
    def from_arrays(cls, grid, x, y, z):
        return cls(grid, tuple(ScalarField3(grid, np.broadcast_to(a, grid.shape)) for a in (x, y, z)))

    @classmethod
    def zeros(cls, grid):
        zero = np.zeros(grid.shape)
        return cls.from_arrays(grid, zero, zero, zero)

    @property
    def x(self):
        return self.components[0]

    @property
    def y(self):
        return self.components[1]

    @property
    def z(self):
        return self.components[2]

    def stacked(self):
        """Components as one (3, n, n, n) array."""
        return np.stack([c.values for c in self.components])

    def scaled(self, factor):
        return VectorField3(self.grid, tuple(ScalarField3(self.grid, factor * c.values) for c in self.components))


# ==================== SPECTRAL CONTRACT ====================

@dataclass(frozen=True, eq=False)
class Wavenumbers:
    """
    Physical wavenumbers of the rfftn layout for a grid.

    ``k`` holds the full wavenumbers (used for |k|², projection and
    dealiasing); ``kd`` holds the derivative wavenumbers with the Nyquist
    mode zeroed on every axis.
    """
    k: tuple
    kd: tuple
    k2: np.ndarray
    index_radius: np.ndarray


@lru_cache(maxsize=8)
def wavenumbers(grid):
    n = grid.n
    scale = 2.0 * math.pi / grid.domain_length
    full = np.fft.fftfreq(n, d=1.0 / n)
    half = np.fft.rfftfreq(n, d=1.0 / n)

    def derivative(index):
        out = index.copy()
        out[np.abs(index) == n // 2] = 0.0
        return out

    kx = (scale * full)[:, None, None]
    ky = (scale * full)[None, :, None]
    kz = (scale * half)[None, None, :]
    kdx = (scale * derivative(full))[:, None, None]
    kdy = (scale * derivative(full))[None, :, None]
    kdz = (scale * derivative(half))[None, None, :]
    k2 = kx ** 2 + ky ** 2 + kz ** 2
    index_radius = np.sqrt(full[:, None, None] ** 2 + full[None, :, None] ** 2 + half[None, None, :] ** 2)
    for array in (kx, ky, kz, kdx, kdy, kdz, k2, index_radius):
        _freeze(array)
    return Wavenumbers(k=(kx, ky, kz), kd=(kdx, kdy, kdz), k2=k2, index_radius=index_radius)


def forward(values):
    return fft.rfftn(values, axes=(-3, -2, -1))


def inverse(values_hat, grid):
    return fft.irfftn(values_hat, s=grid.shape, axes=(-3, -2, -1))


def transform_roundtrip(field):
    """Forward then inverse spectral transform; exposes the transform contract."""
    _require_finite(field)
    return ScalarField3(field.grid, inverse(forward(field.values), field.grid))


def _require_finite(field):
    components = field.components if isinstance(field, VectorField3) else (field,)
    for component in components:
        if not np.all(np.isfinite(component.values)):
            raise FieldError('Spectral operators reject non-finite input values.')


# ==================== DIFFERENTIAL OPERATORS ====================

def curl_hat(u_hat, grid):
    kdx, kdy, kdz = wavenumbers(grid).kd
    ux, uy, uz = u_hat
    return np.stack([
        1j * (kdy * uz - kdz * uy),
        1j * (kdz * ux - kdx * uz),
        1j * (kdx * uy - kdy * ux),
    ])


def curl(u):
    """Vorticity ω = ∇×u evaluated spectrally."""
    _require_finite(u)
    omega = inverse(curl_hat(forward(u.stacked()), u.grid), u.grid)
    return VectorField3.from_arrays(u.grid, *omega)


def divergence(u):
    _require_finite(u)
    kdx, kdy, kdz = wavenumbers(u.grid).kd
    u_hat = forward(u.stacked())
    div_hat = 1j * (kdx * u_hat[0] + kdy * u_hat[1] + kdz * u_hat[2])
    return ScalarField3(u.grid, inverse(div_hat, u.grid))


def gradient(s):
    _require_finite(s)
    s_hat = forward(s.values)
    parts = [inverse(1j * kd * s_hat, s.grid) for kd in wavenumbers(s.grid).kd]
    return VectorField3.from_arrays(s.grid, *parts)


# ==================== REDUCTIONS ====================

def magnitude(u):
    """Pointwise max-norm max{|u_x|, |u_y|, |u_z|} as a scalar field."""
    return ScalarField3(u.grid, np.abs(u.stacked()).max(axis=0))


def max_norm(u):
    """Grid maximum of the pointwise max-norm; ‖ω(t)‖_∞ when applied to vorticity."""
    return max(component.max_abs() for component in u.components)


def kinetic_energy(u):
    """½∫|u|² over the periodic box (rectangle rule, spectrally exact)."""
    return 0.5 * float(np.sum(u.stacked() ** 2)) * u.grid.cell_volume
