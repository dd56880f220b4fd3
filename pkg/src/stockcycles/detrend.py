"""Least-squares polynomial trends.

Time is mapped onto [-1, 1] over the fitting range before building the
Vandermonde matrix; with raw month indices in the hundreds an order 5-6
system is hopelessly ill-conditioned.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, FormatError, ParamError, RankError
from .ingest import SampledSeries

MAX_ORDER = 12
_RCOND = 1e-12

# Default orders for the three markets studied.
DEFAULT_ORDER = {"US": 5, "Germany": 5, "Japan": 6}


@dataclass(frozen=True)
class PolyTrend:
    """Polynomial in the scaled time ``s = (t - t_mid) / t_half``.

    ``coeffs[k]`` multiplies ``s**k``.
    """

    order: int
    coeffs: tuple[float, ...]
    fit_range: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        object.__setattr__(self, "fit_range", (float(self.fit_range[0]), float(self.fit_range[1])))
        if self.order < 0 or len(self.coeffs) != self.order + 1:
            raise ParamError(f"order {self.order} needs {self.order + 1} coefficients, got {len(self.coeffs)}")

    @property
    def center(self) -> float:
        return 0.5 * (self.fit_range[0] + self.fit_range[1])

    @property
    def half_width(self) -> float:
        half = 0.5 * (self.fit_range[1] - self.fit_range[0])
        return half if half > 0 else 1.0

    def scale(self, times) -> np.ndarray:
        return (np.asarray(times, dtype=float) - self.center) / self.half_width

    def outside(self, times) -> np.ndarray:
        """Mask of times that lie outside the fitting range (extrapolation)."""
        t = np.asarray(times, dtype=float)
        return (t < self.fit_range[0]) | (t > self.fit_range[1])

    def __call__(self, times) -> np.ndarray:
        return evaluate_trend(self, times)

    def to_dict(self) -> dict:
        return {"order": self.order, "coeffs": list(self.coeffs), "fit_range": list(self.fit_range)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "PolyTrend":
        try:
            return cls(int(data["order"]), tuple(data["coeffs"]), tuple(data["fit_range"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed trend record: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "PolyTrend":
        return cls.from_dict(json.loads(text))


def _vandermonde(s: np.ndarray, order: int) -> np.ndarray:
    return np.vander(s, order + 1, increasing=True)


def fit_polynomial(series: SampledSeries, order: int) -> PolyTrend:
    """Least-squares polynomial of the given order through ``series``.

    Solved through a QR factorisation of the scaled Vandermonde matrix.

    Raises
    ------
    ParamError
        ``order`` outside ``0..12``.
    RankError
        Fewer observations than coefficients.
    ConditioningError
        The triangular factor is numerically singular.
    """
    order = int(order)
    if not 0 <= order <= MAX_ORDER:
        raise ParamError(f"polynomial order must be in 0..{MAX_ORDER}, got {order}")
    n = len(series)
    if n <= order:
        raise RankError(f"{n} observations cannot determine an order-{order} polynomial")

    t = series.times
    provisional = PolyTrend(order, (0.0,) * (order + 1), (t[0], t[-1]))
    X = _vandermonde(provisional.scale(t), order)
    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    if diag.min() <= _RCOND * diag.max():
        raise ConditioningError(f"order-{order} design matrix is numerically singular")
    coeffs = np.linalg.solve(np.triu(r), q.T @ series.values)
    return PolyTrend(order, tuple(coeffs), (t[0], t[-1]))


def evaluate_trend(trend: PolyTrend, times, return_outside: bool = False):
    """Evaluate the trend at ``times`` (extrapolation allowed).

    With ``return_outside=True`` also return the mask of extrapolated points.
    """
    s = trend.scale(times)
    # Horner in the scaled variable
    values = np.zeros_like(s)
    for c in reversed(trend.coeffs):
        values = values * s + c
    if return_outside:
        return values, trend.outside(times)
    return values


def detrend(series: SampledSeries, trend: PolyTrend) -> SampledSeries:
    return series.with_values(series.values - evaluate_trend(trend, series.times))


def residual_sum_of_squares(series: SampledSeries, trend: PolyTrend) -> float:
    resid = series.values - evaluate_trend(trend, series.times)
    return float(resid @ resid)
