from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stockcycles.detrend import (
    DEFAULT_ORDER,
    PolyTrend,
    detrend,
    evaluate_trend,
    fit_polynomial,
    residual_sum_of_squares,
)
from stockcycles.errors import ConditioningError, FormatError, ParamError, RankError
from stockcycles.ingest import SampledSeries


def regular(values):
    values = np.asarray(values, dtype=float)
    return SampledSeries(np.arange(values.size, dtype=float), values)


def exact_normal_equations(times, values, order):
    """Least-squares coefficients in raw t, solved exactly over the rationals."""
    t = [Fraction(int(v)) for v in times]
    y = [Fraction(v) for v in values]
    m = order + 1
    A = [[sum(ti ** (i + j) for ti in t) for j in range(m)] for i in range(m)]
    b = [sum(yi * ti**i for ti, yi in zip(t, y)) for i in range(m)]
    for col in range(m):
        piv = next(r for r in range(col, m) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        b[col], b[piv] = b[piv], b[col]
        for r in range(m):
            if r != col and A[r][col] != 0:
                f = A[r][col] / A[col][col]
                A[r] = [a - f * c for a, c in zip(A[r], A[col])]
                b[r] -= f * b[col]
    return [b[i] / A[i][i] for i in range(m)]


series_values = arrays(np.float64, st.integers(14, 80), elements=st.floats(-1e3, 1e3))


def test_constant_series():
    for order in (0, 3, 6):
        trend = fit_polynomial(regular(np.full(30, 4.25)), order)
        np.testing.assert_allclose(evaluate_trend(trend, np.arange(30)), 4.25, rtol=0, atol=1e-12)


def test_exact_line():
    t = np.arange(10.0)
    trend = fit_polynomial(regular(2 * t + 3), 1)
    assert np.max(np.abs(detrend(regular(2 * t + 3), trend).values)) < 1e-9


def test_quadratic_against_rational_oracle():
    t = np.arange(20.0)
    s = regular(t**2)
    trend = fit_polynomial(s, 2)
    coeffs = exact_normal_equations(t, t**2, 2)
    oracle = np.array([float(sum(c * Fraction(int(ti)) ** k for k, c in enumerate(coeffs))) for ti in t])
    assert np.max(np.abs(evaluate_trend(trend, t) - oracle)) < 1e-8


def test_noisy_quintic_against_rational_oracle():
    rng = np.random.default_rng(5)
    t = np.arange(60.0)
    y = np.round(0.001 * (t - 30) ** 3 + rng.normal(size=t.size), 3)
    coeffs = exact_normal_equations(t, y, 3)
    oracle = np.array([float(sum(c * Fraction(int(ti)) ** k for k, c in enumerate(coeffs))) for ti in t])
    fitted = evaluate_trend(fit_polynomial(regular(y), 3), t)
    assert np.max(np.abs(fitted - oracle)) < 1e-9


def test_detrend_examples():
    s = regular(np.linspace(-3, 5, 25) ** 3)
    own = fit_polynomial(s, 3)
    assert np.max(np.abs(detrend(s, own).values)) < 1e-9
    zero = PolyTrend(0, (0.0,), (0.0, 24.0))
    np.testing.assert_array_equal(detrend(s, zero).values, s.values)
    line = regular(0.5 * np.arange(40) - 7)
    assert abs(detrend(line, fit_polynomial(line, 1)).values.mean()) < 1e-10


def test_evaluate_examples():
    assert evaluate_trend(PolyTrend(0, (2.5,), (0, 9)), [-100, 3, 1e4]).tolist() == [2.5, 2.5, 2.5]
    trend = fit_polynomial(SampledSeries(np.array([0.0, 10.0]), np.array([0.0, 10.0])), 1)
    values, outside = evaluate_trend(trend, [20.0], return_outside=True)
    assert values[0] == pytest.approx(20.0, abs=1e-12)
    assert outside.tolist() == [True]


def test_evaluate_matches_fit_points():
    rng = np.random.default_rng(0)
    y = rng.normal(size=200).cumsum()
    s = regular(y)
    trend = fit_polynomial(s, 5)
    X = np.vander(trend.scale(s.times), 6, increasing=True)
    direct = X @ np.array(trend.coeffs)
    np.testing.assert_allclose(evaluate_trend(trend, s.times), direct, rtol=0, atol=1e-10)


def test_irregular_times():
    t = np.array([0, 1, 2, 5, 6, 9, 13, 14, 20], dtype=float)
    s = SampledSeries(t, 1 - 2 * t + 0.25 * t**2)
    trend = fit_polynomial(s, 2)
    np.testing.assert_allclose(evaluate_trend(trend, t), s.values, atol=1e-10)


@pytest.mark.parametrize("order", [-1, 13])
def test_order_range(order):
    with pytest.raises(ParamError):
        fit_polynomial(regular(np.arange(40.0)), order)


def test_underdetermined():
    with pytest.raises(RankError):
        fit_polynomial(regular([1.0, 2.0, 3.0]), 3)


def test_conditioning():
    # four distinct times, three of them nearly coincident
    t = np.array([0.0, 1.0, 1.0 + 1e-9, 1.0 + 2e-9, 2.0])
    with pytest.raises(ConditioningError):
        fit_polynomial(SampledSeries(t, np.arange(5.0)), 4)


def test_json_roundtrip():
    trend = fit_polynomial(regular(np.sin(np.arange(50.0) / 4)), 5)
    back = PolyTrend.from_json(trend.to_json())
    assert back == trend
    with pytest.raises(FormatError):
        PolyTrend.from_dict({"order": 2})


def test_default_orders():
    assert DEFAULT_ORDER == {"US": 5, "Germany": 5, "Japan": 6}


@settings(max_examples=40, deadline=None)
@given(series_values, st.integers(0, 8))
def test_residuals_orthogonal_to_basis(values, order):
    s = regular(values)
    trend = fit_polynomial(s, order)
    resid = detrend(s, trend).values
    basis = np.vander(trend.scale(s.times), order + 1, increasing=True)
    assert np.max(np.abs(resid @ basis)) / values.size < 1e-8
    assert abs(resid.mean()) < 1e-8


@settings(max_examples=40, deadline=None)
@given(series_values)
def test_rss_monotone_in_order(values):
    s = regular(values)
    rss = [residual_sum_of_squares(s, fit_polynomial(s, k)) for k in range(0, 9)]
    scale = 1e-9 * max(1.0, float(values @ values))
    assert all(b <= a + scale for a, b in zip(rss, rss[1:]))


@settings(max_examples=30, deadline=None)
@given(series_values, st.integers(0, 6), st.integers(0, 2**32 - 1))
def test_rss_not_beaten_by_perturbed_coefficients(values, order, seed):
    s = regular(values)
    trend = fit_polynomial(s, order)
    best = residual_sum_of_squares(s, trend)
    rng = np.random.default_rng(seed)
    other = PolyTrend(order, np.array(trend.coeffs) + rng.normal(scale=1e-3, size=order + 1), trend.fit_range)
    assert best <= residual_sum_of_squares(s, other) * (1 + 1e-12) + 1e-12
