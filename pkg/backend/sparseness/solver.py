"""
Unforced incompressible Navier-Stokes integration on the periodic box.

Fourier pseudospectral discretization in all three directions. Pressure is
eliminated by Leray projection of the nonlinear term, the convective term
(u·∇)u is evaluated pseudospectrally with 2/3-rule spherical truncation, and
time stepping is IMEX: Adams-Bashforth on the nonlinear term, Adams-Moulton
on the (diagonal) diffusion term. The first two steps use the first- and
second-order members of the family to build history.
"""

from dataclasses import dataclass, replace
import logging
import math
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError, InstabilityError
from .field import (
    GridSpec, VectorField3, curl_hat, forward, inverse,
    kinetic_energy, wavenumbers,
)
from .snapshots import FieldSnapshot, write_snapshot

logger = logging.getLogger(__name__)

# AM3 applied to -nu*k^2 is only stable for nu*k^2*dt below this bound.
AM3_STABILITY_LIMIT = 6.0
DEFAULT_CFL = 0.5


@dataclass(frozen=True)
class SolverConfig:
    """
    Run parameters. Exactly one of ``dt`` and ``cfl_target`` drives the step
    size; ``dt`` wins when both are set. The external force is identically
    zero and has no knob.
    """
    grid: GridSpec
    nu: float
    u0_amplitude: float
    t_end: float
    snapshot_stride: int = 10
    dt: float = None
    cfl_target: float = DEFAULT_CFL

    def __post_init__(self):
        for name in ('nu', 'u0_amplitude', 't_end'):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigurationError(f'{name} must be positive and finite.', {name: 'must be > 0'})
        if self.dt is not None and not self.dt > 0:
            raise ConfigurationError('dt must be positive.', {'dt': 'must be > 0'})
        if self.dt is None and not (self.cfl_target and self.cfl_target > 0):
            raise ConfigurationError('cfl_target must be positive when dt is not set.', {'cfl_target': 'must be > 0'})
        if self.snapshot_stride < 1:
            raise ConfigurationError('snapshot_stride must be at least 1.', {'snapshot_stride': 'must be >= 1'})

    @property
    def reynolds(self):
        return self.u0_amplitude * self.grid.domain_length / self.nu

    def as_dict(self):
        return {
            'n': self.grid.n,
            'domain_length': self.grid.domain_length,
            'nu': self.nu,
            'u0_amplitude': self.u0_amplitude,
            't_end': self.t_end,
            'snapshot_stride': self.snapshot_stride,
            'dt': self.dt,
            'cfl_target': self.cfl_target,
            'forcing': 'none',
            'reynolds': self.reynolds,
        }


@dataclass(frozen=True, eq=False)
class SolverState:
    """
    Spectral state of the integration.

    ``history`` holds the previous projected nonlinear terms, most recent
    first; ``previous_velocity_hat`` is û one step back, needed by the
    two-step Adams-Moulton diffusion update.
    """
    time: float
    velocity_hat: np.ndarray
    history: tuple = ()
    previous_velocity_hat: np.ndarray = None
    step_index: int = 0

    @classmethod
    def initial(cls, velocity, time=0.0):
        ops = _Operators.for_grid(velocity.grid)
        return cls(time=time, velocity_hat=ops.clean(forward(velocity.stacked())))

    @classmethod
    def warm_start(cls, velocities, time, dt):
        """
        State at the third of three equally spaced velocity fields, with the
        history the third-order scheme expects. Used to measure the order of
        the multistep update without the startup steps.
        """
        if len(velocities) != 3:
            raise ConfigurationError('warm_start needs exactly three velocity fields.')
        grid = velocities[0].grid
        ops = _Operators.for_grid(grid)
        hats = [ops.clean(forward(v.stacked())) for v in velocities]
        history = (ops.project(_nonlinear_hat(hats[1], ops)), ops.project(_nonlinear_hat(hats[0], ops)))
        return cls(time=time, velocity_hat=hats[2], history=history,
                   previous_velocity_hat=hats[1], step_index=2)

    def velocity(self, grid):
        return VectorField3.from_arrays(grid, *inverse(self.velocity_hat, grid))


class _Operators:
    """Per-grid spectral operator cache (wavenumbers, projector, dealias mask)."""
    _cache = {}

    def __init__(self, grid):
        self.grid = grid
        w = wavenumbers(grid)
        self.k = w.k
        self.kd = w.kd
        self.k2 = w.k2
        self.k2_safe = np.where(w.k2 == 0, 1.0, w.k2)
        self.dealias = w.index_radius <= grid.n / 3.0
        self.k2_max = float(w.k2[self.dealias].max())

    @classmethod
    def for_grid(cls, grid):
        if grid not in cls._cache:
            cls._cache[grid] = cls(grid)
        return cls._cache[grid]

    def project(self, u_hat):
        kx, ky, kz = self.k
        k_dot_u = (kx * u_hat[0] + ky * u_hat[1] + kz * u_hat[2]) / self.k2_safe
        return np.stack([u_hat[0] - kx * k_dot_u, u_hat[1] - ky * k_dot_u, u_hat[2] - kz * k_dot_u])

    def clean(self, u_hat):
        return self.project(u_hat * self.dealias)


def _nonlinear_hat(u_hat, ops):
    """Dealiased spectral coefficients of -(u·∇)u (before projection)."""
    grid = ops.grid
    truncated = u_hat * ops.dealias
    u = inverse(truncated, grid)
    out = np.empty_like(u_hat)
    for j in range(3):
        advection = np.zeros(grid.shape)
        for i in range(3):
            advection += u[i] * inverse(1j * ops.kd[i] * truncated[j], grid)
        out[j] = -forward(advection) * ops.dealias
    return out


def divergence_defect(u_hat, grid):
    """max_k |k·û(k)| relative to max |û|; zero to round-off for projected states."""
    ops = _Operators.for_grid(grid)
    kx, ky, kz = ops.k
    scale = float(np.abs(u_hat).max())
    if scale == 0:
        return 0.0
    k_norm = np.sqrt(ops.k2_safe)
    k_dot_u = np.abs(kx * u_hat[0] + ky * u_hat[1] + kz * u_hat[2]) / k_norm
    return float(k_dot_u.max()) / scale


# ==================== INITIAL DATA ====================

def kida_initial_condition(grid, u0_amplitude):
    """Kida vortex: each component is the cyclic image of u_{0,x}."""
    x, y, z = grid.mesh()
    ux = np.sin(x) * (np.cos(3 * y) * np.cos(z) - np.cos(y) * np.cos(3 * z))
    uy = np.sin(y) * (np.cos(3 * z) * np.cos(x) - np.cos(z) * np.cos(3 * x))
    uz = np.sin(z) * (np.cos(3 * x) * np.cos(y) - np.cos(x) * np.cos(3 * y))
    return VectorField3.from_arrays(grid, u0_amplitude * ux, u0_amplitude * uy, u0_amplitude * uz)


def taylor_green_field(grid, t, nu):
    """Embedded 2D Taylor-Green vortex, an exact solution decaying as e^{-2νt}."""
    x, y, _ = grid.mesh()
    decay = math.exp(-2.0 * nu * t)
    ux = np.sin(x) * np.cos(y) * decay
    uy = -np.cos(x) * np.sin(y) * decay
    return VectorField3.from_arrays(grid, ux, uy, np.zeros(grid.shape))


def kida_symmetry_defect(u):
    """
    Relative violation of the cyclic symmetry u_y(x,y,z) = u_x(y,z,x) (and its
    rotations), measured against ‖u‖_∞.
    """
    ux, uy, uz = (c.values for c in u.components)
    rotate = (2, 0, 1)
    scale = max(np.abs(ux).max(), np.abs(uy).max(), np.abs(uz).max())
    if scale == 0:
        return 0.0
    defect = max(
        np.abs(uy - np.transpose(ux, rotate)).max(),
        np.abs(uz - np.transpose(uy, rotate)).max(),
        np.abs(ux - np.transpose(uz, rotate)).max(),
    )
    return float(defect / scale)


# ==================== OPERATORS ====================

def leray_project(u):
    """Divergence-free part of u; the k=0 mode is untouched."""
    ops = _Operators.for_grid(u.grid)
    return VectorField3.from_arrays(u.grid, *inverse(ops.project(forward(u.stacked())), u.grid))


def nonlinear_term(u):
    """Dealiased -(u·∇)u, the right-hand-side convective contribution."""
    ops = _Operators.for_grid(u.grid)
    return VectorField3.from_arrays(u.grid, *inverse(_nonlinear_hat(forward(u.stacked()), ops), u.grid))


def _omega_max(u_hat, grid):
    return float(np.abs(inverse(curl_hat(u_hat, grid), grid)).max())


def step(state, config):
    """
    Advance one step. IMEX-1 (Euler) at step 0, IMEX-2 (AB2/trapezoid) at
    step 1, IMEX-3 (AB3/AM3) afterwards.
    """
    if config.dt is None:
        raise ConfigurationError('step() needs a resolved dt; call resolve_time_step first.')
    grid = config.grid
    ops = _Operators.for_grid(grid)
    dt = config.dt
    z = config.nu * ops.k2 * dt

    u_hat = state.velocity_hat
    n_hat = ops.project(_nonlinear_hat(u_hat, ops))
    order = min(state.step_index, len(state.history), 2) + 1
    if order == 3 and state.previous_velocity_hat is None:
        order = 2

    if order == 1:
        new_hat = (u_hat + dt * n_hat) / (1.0 + z)
    elif order == 2:
        explicit = (3.0 * n_hat - state.history[0]) / 2.0
        new_hat = (u_hat * (1.0 - 0.5 * z) + dt * explicit) / (1.0 + 0.5 * z)
    else:
        explicit = (23.0 * n_hat - 16.0 * state.history[0] + 5.0 * state.history[1]) / 12.0
        new_hat = (
            u_hat * (1.0 - 8.0 * z / 12.0)
            + state.previous_velocity_hat * (z / 12.0)
            + dt * explicit
        ) / (1.0 + 5.0 * z / 12.0)

    if not np.all(np.isfinite(new_hat)):
        raise InstabilityError(state.time, dt, _omega_max(u_hat, grid))

    return SolverState(
        time=state.time + dt,
        velocity_hat=ops.clean(new_hat),
        history=(n_hat,) + state.history[:1],
        previous_velocity_hat=u_hat,
        step_index=state.step_index + 1,
    )


def resolve_time_step(config, velocity):
    """
    Fix the step size for the whole run.

    With a configured ``dt`` the run uses it as given (it must divide t_end
    and respect the diffusive limit). Otherwise dt comes from the CFL target
    against the maximum point speed of the initial field, is clipped to 90%
    of the diffusive limit, and shrunk so that t_end is an integer number of
    steps. Returns (config with dt, step count, policy description).
    """
    ops = _Operators.for_grid(config.grid)
    diffusive_limit = AM3_STABILITY_LIMIT / (config.nu * ops.k2_max)

    if config.dt is not None:
        steps = int(round(config.t_end / config.dt))
        if steps < 1 or abs(steps * config.dt - config.t_end) > 1e-9 * config.t_end:
            raise ConfigurationError('t_end must be an integer multiple of dt.', {'dt': 'does not divide t_end'})
        if config.dt >= diffusive_limit:
            raise ConfigurationError(
                f'dt={config.dt:.6g} exceeds the diffusive stability limit {diffusive_limit:.6g}.',
                {'dt': 'exceeds diffusive stability limit'},
            )
        return config, steps, {'policy': 'fixed', 'dt': config.dt}

    speed = float(np.sqrt((velocity.stacked() ** 2).sum(axis=0)).max())
    if speed == 0:
        raise ConfigurationError('CFL time step is undefined for a quiescent field; set dt.', {'dt': 'required'})
    dt = config.cfl_target * config.grid.spacing / speed
    if dt >= diffusive_limit:
        logger.warning('CFL step %.6g clipped to the diffusive limit %.6g', dt, 0.9 * diffusive_limit)
        dt = 0.9 * diffusive_limit
    steps = max(1, math.ceil(config.t_end / dt - 1e-12))
    dt = config.t_end / steps
    return replace(config, dt=dt), steps, {
        'policy': 'cfl', 'cfl_target': config.cfl_target, 'max_speed': speed, 'dt': dt,
    }


@dataclass
class SimulationRun:
    config: SolverConfig
    steps: int
    dt_policy: dict
    omega_series: list
    energy_series: list
    snapshots: list
    snapshot_paths: list

    def metadata(self):
        return {
            'config': self.config.as_dict(),
            'reynolds': self.config.reynolds,
            'steps': self.steps,
            'dt_policy': self.dt_policy,
            'snapshot_count': len(self.snapshot_paths) or len(self.snapshots),
            'omega_max_peak': max(row[2] for row in self.omega_series),
        }


def simulate(config, output_dir=None, initial_velocity=None):
    """
    Integrate from the Kida initial condition (or ``initial_velocity``) to
    t_end, emitting a snapshot every ``snapshot_stride`` steps and at the
    final step. With ``output_dir`` snapshots are written to disk and not
    retained in memory.

    ``omega_series`` holds (step, t, ‖ω‖_∞) for every step including 0.
    """
    grid = config.grid
    velocity = initial_velocity
    if velocity is None:
        velocity = kida_initial_condition(grid, config.u0_amplitude)
    config, steps, policy = resolve_time_step(config, velocity)
    logger.info('Simulating n=%d Re=%.1f dt=%.6g for %d steps', grid.n, config.reynolds, config.dt, steps)

    state = SolverState.initial(velocity)
    omega_series = [(0, 0.0, _omega_max(state.velocity_hat, grid))]
    energy_series = [(0, 0.0, kinetic_energy(state.velocity(grid)))]
    snapshots, paths = [], []

    def emit(current):
        snapshot = FieldSnapshot.from_velocity(current.velocity(grid), config.nu, current.time, current.step_index)
        if output_dir is None:
            snapshots.append(snapshot)
        else:
            index = len(paths)
            paths.append(write_snapshot(snapshot, Path(output_dir), f'snapshot_{index:04d}', index=index)[0])

    emit(state)
    for _ in range(steps):
        state = step(state, config)
        omega_series.append((state.step_index, state.time, _omega_max(state.velocity_hat, grid)))
        energy = kinetic_energy(state.velocity(grid))
        if energy > energy_series[-1][2] + 1e-12 * energy_series[0][2]:
            logger.warning('Kinetic energy increased at step %d (%.17g -> %.17g)',
                           state.step_index, energy_series[-1][2], energy)
        energy_series.append((state.step_index, state.time, energy))
        if state.step_index % config.snapshot_stride == 0 or state.step_index == steps:
            emit(state)

    return SimulationRun(
        config=config, steps=steps, dt_policy=policy, omega_series=omega_series,
        energy_series=energy_series, snapshots=snapshots, snapshot_paths=paths,
    )
