"""
Time series of the diffusion scale d(t) and the scale of sparseness r(t).

Snapshots are reduced to (t, ‖ω‖_∞, d, r) records, the records are fitted
with an ordinary least-squares power law r ∼ d^α in log-log space, and
externally sampled series can be cleaned of a dominant cyclic component
before fitting.
"""

from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import dataclass, replace
import json
import logging
import math
import re

import numpy as np
from scipy import stats

from .exceptions import AnalysisError, SnapshotError
from .field import magnitude, max_norm
from .geometry import GeometryConfig, search_rivs, voxel_distance_oracle
from .levelsets import ComponentPart, component_parts, connected_components, superlevel_mask
from .serializers import SparsenessRecordSerializer

logger = logging.getLogger(__name__)

CSV_COLUMNS = ('t', 'omega_max', 'd', 'r', 'lambda')
ORACLE_COLUMN = 'r_oracle'
PLOT_COLUMNS = ('log_d', 'log_r', 'fitted')
ACF_THRESHOLD = 0.2
PEAK_FRACTION = 0.5
MIN_REGRESSION_POINTS = 3
MIN_FILTER_SAMPLES = 8


@dataclass(frozen=True)
class SparsenessRecord:
    t: float
    omega_max: float
    d: float
    r: float
    lambda_used: float
    r_oracle: float = None

    def as_row(self, with_oracle=False):
        row = [repr(float(self.t)), repr(float(self.omega_max)), repr(float(self.d)),
               repr(float(self.r)), repr(float(self.lambda_used))]
        if with_oracle:
            row.append('' if self.r_oracle is None else repr(float(self.r_oracle)))
        return row


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    slope_stderr: float
    intercept_stderr: float
    n_points: int
    r_squared: float

    @property
    def intercept_log10(self):
        return self.intercept / math.log(10.0)

    @property
    def intercept_log10_stderr(self):
        return self.intercept_stderr / math.log(10.0)

    def predict(self, log_d):
        return self.intercept + self.slope * np.asarray(log_d)

    def as_dict(self):
        return {
            'slope': self.slope,
            'intercept': self.intercept,
            'slope_stderr': self.slope_stderr,
            'intercept_stderr': self.intercept_stderr,
            'n_points': self.n_points,
            'r_squared': self.r_squared,
            'log_base': 'e',
            'intercept_log10': self.intercept_log10,
            'intercept_log10_stderr': self.intercept_log10_stderr,
            'slope_notation': format_uncertainty(self.slope, self.slope_stderr),
            'intercept_notation': format_uncertainty(self.intercept, self.intercept_stderr),
            'intercept_log10_notation': format_uncertainty(self.intercept_log10, self.intercept_log10_stderr),
        }


@dataclass(frozen=True)
class CyclicFilterResult:
    values: np.ndarray
    period: int = None
    cyclic_detected: bool = False
    acf_peak: float = 0.0
    flag: str = None

    def as_dict(self):
        return {
            'period': self.period,
            'cyclic_detected': self.cyclic_detected,
            'acf_peak': self.acf_peak,
            'flag': self.flag,
        }


# ==================== SCALES ====================

def diffusion_scale(nu, omega_max):
    """d = sqrt(ν / ‖ω‖_∞)."""
    if not nu > 0:
        raise AnalysisError(f'Viscosity must be positive, got {nu!r}.')
    if omega_max == 0:
        raise AnalysisError('degenerate: quiescent field')
    if not omega_max > 0:
        raise AnalysisError(f'omega_max must be positive, got {omega_max!r}.')
    return math.sqrt(nu / omega_max)


def _end_of_initial_decay(omega_max):
    """Index of the first interior minimum, or 0 when the series does not start by decaying."""
    last = omega_max.size - 1
    i = 0
    while i < last and omega_max[i + 1] <= omega_max[i]:
        i += 1
    return 0 if i == last else i


def peak_window(times, omega_max):
    """
    Interval leading to the burst of ‖ω‖_∞.

    The burst is the largest value after the initial decay, which ends at
    the first interior minimum. The window runs from the last upward
    crossing of half the burst value (linearly interpolated) to the burst;
    without such a crossing it opens at the end of the initial decay.
    """
    times = np.asarray(times, dtype=float)
    omega_max = np.asarray(omega_max, dtype=float)
    if times.size == 0:
        raise AnalysisError('Cannot locate a peak window in an empty series.')
    trough = _end_of_initial_decay(omega_max)
    peak = trough + int(np.argmax(omega_max[trough:]))
    threshold = PEAK_FRACTION * omega_max[peak]
    below = trough + np.flatnonzero(omega_max[trough:peak] < threshold)
    if below.size == 0:
        return float(times[trough]), float(times[peak])
    i = int(below[-1])
    w0, w1 = omega_max[i], omega_max[i + 1]
    start = times[i] + (threshold - w0) / (w1 - w0) * (times[i + 1] - times[i])
    return float(start), float(times[peak])


def _in_window(t, window):
    start, end = window
    tolerance = 1e-12 * max(1.0, abs(start), abs(end))
    return start - tolerance <= t <= end + tolerance


def select_window(records, window):
    """
    Records inside ``window`` (None, ``'peak'`` or ``(t_a, t_b)``), plus the
    resolved interval or None.
    """
    records = sorted(records, key=lambda rec: rec.t)
    if window is None:
        return records, None
    if window == 'peak':
        window = peak_window([rec.t for rec in records], [rec.omega_max for rec in records])
    start, end = window
    if start > end:
        raise AnalysisError(f'Window start {start!r} is after its end {end!r}.')
    return [rec for rec in records if _in_window(rec.t, window)], (float(start), float(end))


# ==================== TIME SERIES ASSEMBLY ====================

@dataclass(frozen=True, eq=False)
class SnapshotMeasurement:
    record: SparsenessRecord
    rivs: tuple
    search: object


def _load(item, derive_vorticity):
    snapshot = item.load(derive_vorticity=derive_vorticity)
    if not snapshot.has_vorticity():
        raise SnapshotError(
            f'Snapshot at t={snapshot.time:.6g} has no vorticity fields; '
            're-derive them from velocity (measure --derive-vorticity).'
        )
    return snapshot


def _omega_max_of(item, derive_vorticity):
    cached = getattr(item, 'omega_max', None)
    if cached is not None:
        return float(cached)
    return max_norm(_load(item, derive_vorticity).vorticity())


def measure_snapshot(snapshot, fraction, config=None, use_magnitude=False, oracle=False):
    """One record from one vorticity snapshot, or None when it has nothing to measure."""
    config = config or GeometryConfig()
    omega = snapshot.vorticity()
    peak = max_norm(omega)
    if peak == 0:
        logger.warning('Dropping snapshot at t=%.6g: degenerate: quiescent field', snapshot.time)
        return None
    d = diffusion_scale(snapshot.nu, peak)
    cut = fraction * peak

    if use_magnitude:
        sources = {ComponentPart.MAGNITUDE: magnitude(omega)}
    else:
        sources = component_parts(omega)

    rivs, masks = [], []
    for source, field in sources.items():
        mask = superlevel_mask(field, cut)
        masks.append(mask)
        rivs.extend(connected_components(mask, config.connectivity, source, cut))
    if not rivs:
        logger.warning('Dropping snapshot at t=%.6g: empty super-level sets at lambda=%g', snapshot.time, fraction)
        return None
    rivs = [riv.with_id(index) for index, riv in enumerate(rivs)]

    search = search_rivs(rivs, sources, config=config)
    r_oracle = None
    if oracle:
        r_oracle = max(float(voxel_distance_oracle(mask).max()) for mask in masks if mask.count)

    record = SparsenessRecord(
        t=snapshot.time, omega_max=peak, d=d, r=search.best.radius,
        lambda_used=fraction, r_oracle=r_oracle,
    )
    logger.info('t=%.6g |omega|_inf=%.6g d=%.6g r=%.6g (%d RIVs)', record.t, peak, d, record.r, len(rivs))
    return SnapshotMeasurement(record=record, rivs=tuple(rivs), search=search)


def measure_snapshots(snapshots, fraction, config=None, window=None, use_magnitude=False,
                      oracle=False, workers=1, derive_vorticity=False):
    """
    Measurements for every snapshot inside ``window``.

    ``window`` is None (all snapshots), ``'peak'`` (see ``peak_window``) or an
    explicit ``(t_a, t_b)`` pair. Snapshots are measured independently, in
    parallel when ``workers > 1``; output order follows input order.
    """
    if not 0 < fraction < 1:
        raise AnalysisError(f'lambda must lie in (0, 1), got {fraction!r}.')
    snapshots = list(snapshots)
    if not snapshots:
        raise AnalysisError('No snapshots to measure.')

    if window == 'peak':
        series = [_omega_max_of(item, derive_vorticity) for item in snapshots]
        window = peak_window([item.time for item in snapshots], series)
        logger.info('Peak window: [%.6g, %.6g]', *window)
    if window is not None:
        start, end = window
        if start > end:
            raise AnalysisError(f'Window start {start!r} is after its end {end!r}.')
        snapshots = [item for item in snapshots if _in_window(item.time, window)]

    def measure(item):
        return measure_snapshot(_load(item, derive_vorticity), fraction, config, use_magnitude, oracle)

    if workers > 1 and len(snapshots) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            measured = list(pool.map(measure, snapshots))
    else:
        measured = [measure(item) for item in snapshots]
    return [m for m in measured if m is not None]


def assemble_timeseries(snapshots, fraction, config=None, window=None, use_magnitude=False,
                        oracle=False, workers=1, derive_vorticity=False):
    measured = measure_snapshots(snapshots, fraction, config, window, use_magnitude, oracle, workers, derive_vorticity)
    return [m.record for m in measured]


# ==================== REGRESSION ====================

def loglog_fit(log_d, log_r):
    log_d = np.asarray(log_d, dtype=float)
    log_r = np.asarray(log_r, dtype=float)
    if log_d.size < MIN_REGRESSION_POINTS:
        raise AnalysisError(
            f'At least {MIN_REGRESSION_POINTS} records with positive d and r are required, got {log_d.size}.'
        )
    if np.ptp(log_d) == 0:
        raise AnalysisError('degenerate abscissa')
    fit = stats.linregress(log_d, log_r)
    # Standard errors from the residual sum of squares; they vanish on exact data.
    n = log_d.size
    residuals = log_r - (fit.intercept + fit.slope * log_d)
    variance = float(np.dot(residuals, residuals)) / (n - 2)
    sxx = float(np.sum((log_d - log_d.mean()) ** 2))
    return RegressionResult(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        slope_stderr=math.sqrt(variance / sxx),
        intercept_stderr=math.sqrt(variance * (1.0 / n + log_d.mean() ** 2 / sxx)),
        n_points=int(log_d.size),
        r_squared=float(fit.rvalue ** 2),
    )


def loglog_regression(records):
    """Ordinary least squares of ln r against ln d; the slope estimates α."""
    usable = [rec for rec in records if rec.d > 0 and rec.r > 0]
    if len(usable) < len(records):
        logger.warning('Ignoring %d record(s) with non-positive d or r', len(records) - len(usable))
    return loglog_fit(
        np.log([rec.d for rec in usable]),
        np.log([rec.r for rec in usable]),
    )


# ==================== CYCLIC FILTER ====================

def _autocorrelation(values, max_lag):
    centered = values - values.mean()
    energy = float(np.dot(centered, centered))
    if energy == 0:
        return None
    return np.array([np.dot(centered[:values.size - lag], centered[lag:]) / energy for lag in range(max_lag + 1)])


def _dominant_period(values):
    """
    Lag of the highest autocorrelation in [2, n/2], looked for past the first
    zero crossing so the slow decay at short lags is not mistaken for a cycle.
    """
    n = values.size
    acf = _autocorrelation(values, n // 2)
    if acf is None:
        return None, 0.0
    negative = np.flatnonzero(acf[1:] < 0)
    if negative.size == 0:
        return None, 0.0
    first = max(2, int(negative[0]) + 1)
    if first > n // 2:
        return None, 0.0
    lag = first + int(np.argmax(acf[first:]))
    return lag, float(acf[lag])


def _seasonal_component(values, period):
    """Phase means of the series minus its centered moving average, zero-mean over one period."""
    if period % 2:
        weights = np.full(period, 1.0 / period)
    else:
        weights = np.concatenate([[0.5], np.ones(period - 1), [0.5]]) / period
    trend = np.convolve(values, weights, mode='valid')
    offset = (weights.size - 1) // 2
    detrended = values[offset:offset + trend.size] - trend
    phases = (np.arange(trend.size) + offset) % period
    seasonal = np.array([detrended[phases == phase].mean() for phase in range(period)])
    seasonal -= seasonal.mean()
    return seasonal[np.arange(values.size) % period]


def filter_cyclic(times, values, period=None):
    """
    Remove the dominant periodic component from a uniformly sampled series.

    The period is the autocorrelation peak of the linearly detrended series
    unless given. The returned values are trend plus residual; with no
    autocorrelation peak above 0.2 the input comes back unchanged and flagged.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size < MIN_FILTER_SAMPLES:
        raise AnalysisError(f'Cyclic filtering needs at least {MIN_FILTER_SAMPLES} samples, got {values.size}.')
    if times.size != values.size:
        raise AnalysisError('times and values must have the same length.')
    steps = np.diff(times)
    if not np.allclose(steps, steps[0], rtol=1e-6, atol=0) or steps[0] <= 0:
        raise AnalysisError('Cyclic filtering needs uniformly spaced, increasing times.')

    if period is None:
        line = stats.linregress(times, values)
        residual = values - (line.intercept + line.slope * times)
        period, peak = _dominant_period(residual)
        if period is None or peak <= ACF_THRESHOLD:
            logger.warning('no cyclic component detected (autocorrelation peak %.3f)', peak)
            return CyclicFilterResult(values=values.copy(), acf_peak=peak, flag='no cyclic component detected')
    else:
        if not 2 <= period <= values.size // 2:
            raise AnalysisError(f'Period must lie in [2, {values.size // 2}], got {period!r}.')
        peak = None

    seasonal = _seasonal_component(values, int(period))
    logger.info('Removed cyclic component with period %d samples', period)
    return CyclicFilterResult(values=values - seasonal, period=int(period), cyclic_detected=True, acf_peak=peak)


def filter_records(records, period=None):
    """Cyclic filtering of ln d and ln r; returns the filtered records and both filter outcomes."""
    times = [rec.t for rec in records]
    log_d = filter_cyclic(times, np.log([rec.d for rec in records]), period)
    log_r = filter_cyclic(times, np.log([rec.r for rec in records]), period)
    filtered = [
        replace(rec, d=float(math.exp(ld)), r=float(math.exp(lr)))
        for rec, ld, lr in zip(records, log_d.values, log_r.values)
    ]
    return filtered, {'log_d': log_d.as_dict(), 'log_r': log_r.as_dict()}


# ==================== UNCERTAINTY NOTATION ====================

_NOTATION = re.compile(r'^\s*([-+]?\d+(?:\.(\d+))?)\((\d+(?:\.\d+)?)\)\s*$')


def format_uncertainty(value, uncertainty):
    """
    ``x(y)`` notation: one significant digit of uncertainty in the last
    shown place, e.g. 1.098(9); uncertainties of 1 or more are written in
    value units with two significant digits, e.g. 6.1(1.6).
    """
    if not (uncertainty > 0 and math.isfinite(uncertainty)):
        return f'{value:g}(0)'
    exponent = math.floor(math.log10(uncertainty))
    if exponent < 0:
        decimals = -exponent
        digit = round(uncertainty * 10 ** decimals)
        if digit < 10:
            return f'{value:.{decimals}f}({digit})'
        decimals -= 1
        if decimals > 0:
            return f'{value:.{decimals}f}(1)'
        uncertainty = 1.0
        exponent = 0
    decimals = max(0, 1 - exponent)
    return f'{value:.{decimals}f}({uncertainty:.{decimals}f})'


def parse_uncertainty(text):
    """Inverse of ``format_uncertainty``: returns (value, uncertainty)."""
    match = _NOTATION.match(text)
    if match is None:
        raise AnalysisError(f'Not in x(y) uncertainty notation: {text!r}')
    number, fraction, spread = match.groups()
    value = float(number)
    if '.' in spread:
        return value, float(spread)
    decimals = len(fraction) if fraction else 0
    return value, float(f'{spread}e-{decimals}')


# ==================== FILES ====================

def ingest_external_series(path):
    """
    Records from a time-series CSV (``t,omega_max,d,r,lambda`` plus optional
    ``r_oracle``). Malformed rows fail the whole file with line-numbered
    errors; rows with non-positive d or r are dropped with a warning.
    """
    try:
        handle = open(path, newline='')
    except OSError as exc:
        raise AnalysisError(f'Cannot open series file {path}: {exc}') from exc

    records, errors = [], []
    with handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [column for column in CSV_COLUMNS if column not in header]
        if missing:
            raise AnalysisError(f'{path}: header is missing column(s): {", ".join(missing)}')
        for row in reader:
            line = reader.line_num
            data = {key: (value.strip() if value and value.strip() else None) for key, value in row.items() if key}
            serializer = SparsenessRecordSerializer(data=data)
            if not serializer.is_valid():
                details = '; '.join(
                    f'{field}: {" ".join(str(m) for m in messages)}' for field, messages in serializer.errors.items()
                )
                errors.append(f'line {line}: {details}')
                continue
            values = serializer.validated_data
            if values['d'] <= 0 or values['r'] <= 0:
                logger.warning('%s line %d: dropping row with non-positive d or r', path, line)
                continue
            records.append(SparsenessRecord(
                t=values['t'], omega_max=values['omega_max'], d=values['d'], r=values['r'],
                lambda_used=values['lambda'], r_oracle=values.get(ORACLE_COLUMN),
            ))
    if errors:
        raise AnalysisError(f'{path}: malformed rows\n' + '\n'.join(errors))
    return records


def write_timeseries_csv(records, path):
    with_oracle = any(rec.r_oracle is not None for rec in records)
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(CSV_COLUMNS + ((ORACLE_COLUMN,) if with_oracle else ()))
        for rec in records:
            writer.writerow(rec.as_row(with_oracle))


def write_regression_report(result, path, window=None, filters=None, source=None, unfiltered=None):
    """JSON report of ``result``; ``unfiltered`` is the fit before cyclic filtering, if any."""
    report = result.as_dict()
    report['window'] = list(window) if window is not None else None
    report['filters'] = filters or {}
    if unfiltered is not None:
        report['unfiltered'] = unfiltered.as_dict()
    if source is not None:
        report['source'] = str(source)
    with open(path, 'w') as handle:
        handle.write(json.dumps(report, indent=2, sort_keys=True) + '\n')
    return report


def write_plot_csv(records, result, path):
    """Plot-ready (ln d, ln r, fitted ln r) rows."""
    usable = [rec for rec in records if rec.d > 0 and rec.r > 0]
    log_d = np.log([rec.d for rec in usable])
    log_r = np.log([rec.r for rec in usable])
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(PLOT_COLUMNS)
        for x, y, fitted in zip(log_d, log_r, result.predict(log_d)):
            writer.writerow([repr(float(x)), repr(float(y)), repr(float(fitted))])
