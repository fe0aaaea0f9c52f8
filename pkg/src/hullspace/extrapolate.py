"""Steady-state extraction from an oscillatory resistance history.

The simulated resistance rings down onto its regime value; rather than
simulating until the oscillation dies out, the maxima and minima of the
filtered signal are fitted with decaying exponentials a*exp(-b*t) + c and
-a*exp(-b*t) + c, and the steady value is the average of the two offsets,
i.e. the t -> infinity limit of the envelope pair.
"""

import csv
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ValidationError

DEFAULT_WINDOW = 5
_GN_MAX_ITER = 200
_GN_STEP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Sampled signal with strictly increasing times."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if len(times) != len(values):
            raise ValidationError("times and values must have equal length")
        if len(times) == 0:
            raise ValidationError("series must not be empty")
        if np.any(np.diff(times) <= 0.0):
            raise ValidationError("times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValidationError("series contains non-finite entries")
        times.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.times)


def smooth(series, window=DEFAULT_WINDOW):
    """Centered moving average; the window shrinks symmetrically near the
    ends so boundary samples stay unbiased for constant signals."""
    if window % 2 == 0:
        raise ValidationError("smoothing window must be odd")
    if window > len(series):
        raise ValidationError("smoothing window longer than the series")
    if window == 1:
        return series
    half = window // 2
    n = len(series)
    out = np.empty(n)
    for i in range(n):
        h = min(half, i, n - 1 - i)
        out[i] = series.values[i - h : i + h + 1].mean()
    return TimeSeries(series.times, out)


def find_extrema(series):
    """Indices of interior strict local maxima and minima.

    Runs of equal values (plateaus) count once, at the run's midpoint.
    Emits a warning when fewer than three extrema of a kind are present,
    since the envelope fits downstream need at least three points.
    """
    if len(series) < 3:
        raise ValidationError("need at least three samples to find extrema")
    values = series.values
    # Compress plateaus to single representatives.
    starts = [0]
    for i in range(1, len(values)):
        if values[i] != values[starts[-1]]:
            starts.append(i)
    maxima, minima = [], []
    for j in range(1, len(starts) - 1):
        prev_v = values[starts[j - 1]]
        here_v = values[starts[j]]
        next_v = values[starts[j + 1]]
        run_end = starts[j + 1] - 1
        mid = starts[j] + (run_end - starts[j]) // 2
        if here_v > prev_v and here_v > next_v:
            maxima.append(mid)
        elif here_v < prev_v and here_v < next_v:
            minima.append(mid)
    if len(maxima) < 3 or len(minima) < 3:
        warnings.warn(
            f"only {len(maxima)} maxima / {len(minima)} minima found; "
            "envelope fitting needs at least three of each",
            stacklevel=2,
        )
    return np.asarray(maxima, dtype=np.int64), np.asarray(minima, dtype=np.int64)


@dataclass(frozen=True)
class EnvelopeFit:
    """Parameters of y = sign * a * exp(-b*t) + c."""

    a: float
    b: float
    c: float
    sign: int
    residual_rms: float

    def __post_init__(self):
        if self.b < 0.0:
            raise ValidationError("decay rate b must be non-negative")
        if not np.isfinite(self.residual_rms):
            raise ValidationError("residual must be finite")

    def value_at(self, t):
        """Evaluate the fitted envelope (finite-horizon curve for plots)."""
        return self.sign * self.a * np.exp(-self.b * np.asarray(t, dtype=float)) + self.c


def fit_envelope(times, values, sign):
    """Damped Gauss-Newton fit of sign * a * exp(-b*t) + c.

    Initialization: c from the last point, a from the first deviation,
    b from the log-ratio of the first two deviations. Converges when the
    accepted step norm falls below 1e-12; raises after 200 iterations
    otherwise. A negative decay rate is clamped to zero with a warning.
    """
    t = np.asarray(times, dtype=float).reshape(-1)
    y = np.asarray(values, dtype=float).reshape(-1)
    if sign not in (1, -1):
        raise ValidationError("sign must be +1 or -1")
    if len(t) != len(y) or len(t) < 3:
        raise ValidationError("need at least three (t, y) points")
    if sign == 1 and len(y) >= 2 and y[-1] > y[0]:
        warnings.warn("maxima envelope trends upward; fit may be poor", stacklevel=2)
    if sign == -1 and len(y) >= 2 and y[-1] < y[0]:
        warnings.warn("minima envelope trends downward; fit may be poor", stacklevel=2)

    c = float(y[-1])
    a = sign * (float(y[0]) - c)
    dev0, dev1 = sign * (y[0] - c), sign * (y[1] - c)
    if dev0 > 0.0 and dev1 > 0.0 and dev0 > dev1:
        b = float(np.log(dev0 / dev1) / (t[1] - t[0]))
    else:
        b = 1.0 / (t[-1] - t[0])

    def residual(p):
        return p[2] + sign * p[0] * np.exp(-p[1] * t) - y

    def jacobian(p):
        e = np.exp(-p[1] * t)
        return np.column_stack([sign * e, -sign * p[0] * t * e, np.ones_like(t)])

    params = np.array([a, b, c])
    cost = float(np.sum(residual(params) ** 2))
    best_cost = cost
    lam = 1e-3
    clamped = False
    for _ in range(_GN_MAX_ITER):
        r = residual(params)
        jac = jacobian(params)
        jtj = jac.T @ jac
        rhs = -jac.T @ r
        moved = 0.0
        for _ in range(50):
            try:
                delta = np.linalg.solve(jtj + lam * np.eye(3), rhs)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = params + delta
            if trial[1] < 0.0:
                trial[1] = 0.0
                clamped = True
            trial_cost = float(np.sum(residual(trial) ** 2))
            if trial_cost <= cost:
                moved = float(np.linalg.norm(trial - params))  # after clamping
                params, cost = trial, trial_cost
                best_cost = min(best_cost, cost)
                lam = max(lam * 0.3, 1e-14)
                break
            lam *= 10.0
        if moved <= _GN_STEP_TOL:
            if clamped:
                warnings.warn("decay rate clamped at zero during fit", stacklevel=2)
            rms = float(np.sqrt(cost / len(t)))
            return EnvelopeFit(float(params[0]), float(params[1]), float(params[2]), sign, rms)
    raise ConvergenceError(
        "envelope fit did not converge", best_residual=float(np.sqrt(best_cost / len(t)))
    )


@dataclass(frozen=True)
class SteadyStateResult:
    """Steady value plus the two envelope fits that produced it (fits are
    None for a constant input)."""

    value: float
    maxima_fit: EnvelopeFit = None
    minima_fit: EnvelopeFit = None


def extrapolate_series(series, window=DEFAULT_WINDOW):
    """Full pipeline: filter, locate extrema, fit both envelopes, average
    the two offsets at infinity.

    Extrema are located on the smoothed series, but the envelope fits use
    the raw values at those indices so the filter cannot bias amplitudes.
    """
    if np.ptp(series.values) == 0.0:
        return SteadyStateResult(float(series.values[0]))
    smoothed = smooth(series, window)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        maxima, minima = find_extrema(smoothed)
    if len(maxima) < 3 or len(minima) < 3:
        raise ValidationError(
            f"found {len(maxima)} maxima / {len(minima)} minima; "
            "need three of each -- provide a longer series"
        )
    fit_max = fit_envelope(series.times[maxima], series.values[maxima], +1)
    fit_min = fit_envelope(series.times[minima], series.values[minima], -1)
    return SteadyStateResult(0.5 * (fit_max.c + fit_min.c), fit_max, fit_min)


def steady_value(series, window=DEFAULT_WINDOW):
    """Steady regime value of the series (see extrapolate_series)."""
    return extrapolate_series(series, window).value


# ---------------------------------------------------------------------------
# persistence

def load_series(path):
    """Two-column CSV (t, value), optional header row."""
    times, values = [], []
    with open(path, "r", newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            if len(row) < 2:
                raise ValidationError(f"{path}: row {i} needs two columns")
            try:
                t, v = float(row[0]), float(row[1])
            except ValueError:
                if i == 0:
                    continue  # header
                raise ValidationError(f"{path}: unparseable row {i}")
            times.append(t)
            values.append(v)
    if not times:
        raise ValidationError(f"{path}: no data rows")
    return TimeSeries(np.asarray(times), np.asarray(values))


def save_result(result, path):
    """JSON export of the steady value and both envelope parameter sets."""
    def fit_payload(fit):
        if fit is None:
            return None
        return {"a": fit.a, "b": fit.b, "c": fit.c, "residual_rms": fit.residual_rms}

    payload = {
        "steady_value": result.value,
        "maxima_envelope": fit_payload(result.maxima_fit),
        "minima_envelope": fit_payload(result.minima_fit),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
