import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qchaos.analysis import (FitError, NoWindowError, TimeSeries, auto_window, fit_decay, fluctuation_stats,
                             scaling_exponent, tail_values)


def test_exponential_round_trip():
    t = np.linspace(0, 10, 30)
    fit = fit_decay(TimeSeries(t, np.exp(-0.5 * t)), "exponential")
    assert abs(fit.rate - 0.5) < 1e-10
    assert fit.residual < 1e-12 and fit.r_squared == pytest.approx(1.0)


def test_gaussian_round_trip():
    t = np.linspace(0, 5, 20)
    fit = fit_decay(TimeSeries(t, np.exp(-(0.3 * t) ** 2)), "gaussian")
    assert abs(fit.params[0] - 0.3) < 1e-10


def test_powerlaw_round_trip():
    t = np.linspace(1, 50, 25)
    fit = fit_decay(TimeSeries(t, t**-1.5), "powerlaw")
    assert abs(fit.params[0] + 1.5) < 1e-10


def test_linear_model():
    t = np.arange(10.0)
    fit = fit_decay(TimeSeries(t, 3 * t - 2), "linear")
    assert fit.params == pytest.approx((3.0, -2.0))


def test_fit_errors():
    t = np.arange(10.0)
    with pytest.raises(FitError):
        fit_decay(TimeSeries(t, np.exp(-t)), "exponential", (0, 5))  # 6 points < 8
    with pytest.raises(FitError):
        fit_decay(TimeSeries(t, np.cos(t)), "exponential")
    with pytest.raises(FitError):
        fit_decay(TimeSeries(t, np.exp(-t)), "bogus")
    with pytest.raises(FitError):
        fit_decay(TimeSeries(t, t + 1), "powerlaw")  # contains t = 0


def test_window_is_closed_interval():
    t = np.arange(20.0)
    fit = fit_decay(TimeSeries(t, np.exp(-0.2 * t)), "exponential", (3, 12))
    assert fit.window == (3.0, 12.0) and fit.n_points == 10


@settings(max_examples=50, deadline=None)
@given(model=st.sampled_from(["exponential", "gaussian", "powerlaw"]),
       rate=st.floats(0.05, 3.0), amp=st.floats(0.1, 10.0))
def test_round_trip_property(model, rate, amp):
    t = np.linspace(1.0, 4.0, 12)
    if model == "exponential":
        y = amp * np.exp(-rate * t)
    elif model == "gaussian":
        y = amp * np.exp(-(rate * t) ** 2)
    else:
        y = amp * t ** (-rate)
    fit = fit_decay(TimeSeries(t, y), model)
    expected = -rate if model == "powerlaw" else rate
    assert abs(fit.params[0] - expected) <= 1e-10 * max(1, abs(expected))
    assert abs(fit.params[1] - amp) <= 1e-8 * amp


@settings(max_examples=40, deadline=None)
@given(rate=st.floats(0.05, 2.0), s=st.floats(0.1, 10.0))
def test_time_rescaling_property(rate, s):
    t = np.linspace(0, 8, 16)
    y = np.exp(-rate * t) * (1 + 0.01 * np.sin(3 * t))
    a = fit_decay(TimeSeries(t, y), "exponential").rate
    b = fit_decay(TimeSeries(s * t, y), "exponential").rate
    assert abs(b - a / s) < 1e-10


def test_auto_window_inside_pre_saturation():
    N = 512
    t = np.arange(0.0, 30.0)
    y = np.maximum(np.exp(-0.5 * t), 1.0 / N)
    t_s = np.log(N) / 0.5
    lo, hi = auto_window(TimeSeries(t, y), 1.0 / N, 0.5)
    assert 0 < lo < hi < t_s
    assert lo == 1.0
    # the window ends at the first sample inside 3x the saturation value
    assert y[int(hi)] <= 3.0 / N < y[int(hi) - 1]


def test_auto_window_constant_series():
    with pytest.raises(NoWindowError):
        auto_window(TimeSeries(np.arange(20.0), np.ones(20)), 0.01, 1.0)


def test_auto_window_collapse():
    t = np.arange(20.0)
    with pytest.raises(NoWindowError):
        auto_window(TimeSeries(t, np.exp(-3 * t)), 0.01, 1.0)


def test_auto_window_never_saturating_runs_to_end():
    t = np.arange(20.0)
    lo, hi = auto_window(TimeSeries(t, np.exp(-0.05 * t)), 1e-6, 0.5)
    assert (lo, hi) == (1.0, 19.0)


def test_scaling_exponent_examples():
    x = np.array([1.0, 2.0, 5.0, 10.0])
    assert abs(scaling_exponent(x, x**2)[0] - 2) < 1e-12
    assert abs(scaling_exponent(x, 3.7 * x)[0] - 1) < 1e-12
    with pytest.raises(FitError):
        scaling_exponent(x, -x)
    with pytest.raises(FitError):
        scaling_exponent(x[:2], x[:2])


def test_fluctuation_stats_constant_and_sinusoid():
    t = np.arange(200.0)
    assert fluctuation_stats(TimeSeries(t, np.full(200, 0.7)), 0.5)[1] < 1e-28
    A = 0.3
    y = 1 + A * np.sin(2 * np.pi * t / 8)
    mean, var, exc = fluctuation_stats(TimeSeries(t, y), (100, 195))  # whole number of periods
    assert mean == pytest.approx(1.0, abs=1e-12)
    assert exc == pytest.approx(A, abs=1e-12)
    assert var == pytest.approx(A**2 / 2, rel=1e-2)


def test_fluctuation_stats_short_tail():
    with pytest.raises(FitError):
        fluctuation_stats(TimeSeries(np.arange(30.0), np.ones(30)), 0.5)


def test_tail_values_fraction_and_window():
    s = TimeSeries(np.arange(10.0), np.arange(10.0))
    assert np.array_equal(tail_values(s, 0.3), [7, 8, 9])
    assert np.array_equal(tail_values(s, (2, 4)), [2, 3, 4])
    with pytest.raises(ValueError):
        tail_values(s, 1.5)
