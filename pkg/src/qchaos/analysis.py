"""Decay/growth fits, fit-window selection, scaling exponents and plateau statistics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

MODELS = ("exponential", "gaussian", "powerlaw", "linear")
SATURATION_GUARD = 3.0


class FitError(ValueError):
    pass


class NoWindowError(FitError):
    """No usable fit window: the series is flat or saturates before the fit can start."""


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values)
        if t.shape != v.shape[:1]:
            raise ValueError("times and values differ in length")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.times.size

    def window(self, t_lo: float, t_hi: float) -> "TimeSeries":
        sel = (self.times >= t_lo) & (self.times <= t_hi)
        return TimeSeries(self.times[sel], self.values[sel], dict(self.metadata))


@dataclass(frozen=True)
class FitResult:
    """``params``: exponential (rate, prefactor) for y = A e^{-rate t}; gaussian (eta, prefactor)
    for y = A e^{-(eta t)^2}; powerlaw (exponent, prefactor) for y = A t^exponent; linear
    (slope, intercept)."""

    model: str
    params: tuple
    window: tuple
    residual: float
    r_squared: float
    n_points: int

    @property
    def rate(self) -> float:
        return self.params[0]

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "params": [float(p) for p in self.params],
            "window": [float(w) for w in self.window],
            "residual": float(self.residual),
            "r_squared": float(self.r_squared),
            "n_points": int(self.n_points),
        }


def _as_series(series, values=None) -> TimeSeries:
    if isinstance(series, TimeSeries):
        return series
    if values is None:
        raise TypeError("need a TimeSeries or (times, values)")
    return TimeSeries(series, values)


def fit_decay(series, model: str = "exponential", window=None, min_points: int = 8) -> FitResult:
    """Log-linear least squares of ``model`` on the samples with t_lo <= t <= t_hi."""
    series = _as_series(series)
    if model not in MODELS:
        raise FitError(f"unknown model {model!r}")
    t = series.times
    y = np.real(series.values).astype(float)
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, y = t[sel], y[sel]
    if t.size < min_points:
        raise FitError(f"need at least {min_points} points in the fit window, got {t.size}")
    if model != "linear" and np.any(y <= 0):
        raise FitError("non-positive values in a log-fit window")
    if model == "powerlaw" and np.any(t <= 0):
        raise FitError("power-law fits need t > 0")
    if model == "linear":
        x, z = t, y
    else:
        z = np.log(y)
        if model == "exponential":
            x = t
        elif model == "gaussian":
            x = t**2
        else:
            x = np.log(t)
    slope, intercept = np.polyfit(x, z, 1)
    pred = slope * x + intercept
    resid = z - pred
    ss_tot = float(np.sum((z - z.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    if model == "exponential":
        params = (-slope, float(np.exp(intercept)))
    elif model == "gaussian":
        params = (float(np.sign(-slope) * np.sqrt(abs(slope))), float(np.exp(intercept)))
    elif model == "powerlaw":
        params = (slope, float(np.exp(intercept)))
    else:
        params = (slope, intercept)
    return FitResult(
        model,
        tuple(float(p) for p in params),
        (float(t[0]), float(t[-1])),
        float(np.sqrt(np.mean(resid**2))),
        r2,
        int(t.size),
    )


def auto_window(series, saturation_estimate: float, curvature_time: float,
                guard: float = SATURATION_GUARD, min_points: int = 8) -> tuple[float, float]:
    """Fit window between the parabolic onset and the saturation shoulder.

    t_lo = 2 * curvature_time; t_hi is the first sample with value <= guard * saturation_estimate
    (the time the series enters the plateau band). A series that never enters the band runs
    to its final sample.
    """
    series = _as_series(series)
    t = series.times
    y = np.real(series.values)
    if y.size == 0 or np.ptp(y) <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        raise NoWindowError("series is constant; nothing to fit")
    t_lo = 2.0 * curvature_time
    entered = np.nonzero(y <= guard * saturation_estimate)[0]
    if entered.size and entered[0] == 0:
        raise NoWindowError("series starts inside the saturation band")
    last = entered[0] if entered.size else t.size - 1
    t_hi = float(t[last])
    n = int(np.count_nonzero((t >= t_lo) & (t <= t_hi)))
    if t_hi <= t_lo or n < min_points:
        raise NoWindowError(
            f"window [{t_lo:.4g}, {t_hi:.4g}] holds {n} points, need {min_points}"
        )
    first = float(t[np.nonzero(t >= t_lo)[0][0]])
    return first, t_hi


def scaling_exponent(xs, ys) -> tuple[float, float]:
    """Log-log least-squares slope and its standard error."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3 or xs.size != ys.size:
        raise FitError("need at least 3 matching (x, y) points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise FitError("scaling fits need positive inputs")
    res = stats.linregress(np.log(xs), np.log(ys))
    return float(res.slope), float(res.stderr)


def tail_values(series, tail_window) -> np.ndarray:
    """Values in ``tail_window``: a (t_lo, t_hi) pair or a trailing fraction in (0, 1]."""
    series = _as_series(series)
    if np.isscalar(tail_window):
        frac = float(tail_window)
        if not 0 < frac <= 1:
            raise ValueError("tail fraction must lie in (0, 1]")
        n = max(1, int(round(frac * len(series))))
        return series.values[-n:]
    lo, hi = tail_window
    return series.window(lo, hi).values


def fluctuation_stats(series, tail_window, min_samples: int = 20) -> tuple[float, float, float]:
    """(mean, variance, largest |deviation from the mean|) over the tail."""
    tail = np.real(tail_values(series, tail_window)).astype(float)
    if tail.size < min_samples:
        raise FitError(f"tail holds {tail.size} samples, need {min_samples}")
    mean = float(tail.mean())
    return mean, float(tail.var()), float(np.max(np.abs(tail - mean)))
