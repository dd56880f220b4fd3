"""Harmonic models: peak selection, least-squares fit, reconstruction, forecast."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .detrend import PolyTrend, detrend, evaluate_trend, fit_polynomial
from .errors import ParamError, RankError
from .ingest import MonthlySeries, SampledSeries, ShockCalendar, YearMonth, deflate, excise
from .spectral import SpectralEstimate, estimate

_RCOND = 1e-10
MIN_TRAINING_MONTHS = 120


@dataclass(frozen=True)
class Peak:
    freq: float
    power: float
    share: float

    @property
    def period(self) -> float:
        return 1.0 / self.freq


def top_k_frequencies(spec: SpectralEstimate, k: int, min_separation: Optional[float] = None) -> list[Peak]:
    """The ``k`` strongest bins, ties going to the lower frequency.

    On an oversampled grid (Lomb-Scargle) neighbouring bins belong to the same
    peak, so by default candidates closer than ``spec.resolution`` to an
    already selected frequency are skipped. For Fourier-grid estimators the
    default separation is zero, i.e. a plain ranking of bins.
    """
    k = int(k)
    if k < 0:
        raise ParamError(f"k must be nonnegative, got {k}")
    if k == 0:
        return []
    if len(spec) == 0:
        raise ParamError("empty spectral estimate")
    if k > len(spec):
        raise ParamError(f"k={k} exceeds the {len(spec)} available bins")
    if min_separation is None:
        min_separation = spec.resolution if spec.method == "lomb_scargle" else 0.0
    # guard against the grid step landing a hair under the resolution
    gap = min_separation * (1.0 - 1e-9)

    order = np.lexsort((spec.freqs, -spec.power))
    shares = spec.shares()
    chosen: list[int] = []
    for i in order:
        f = spec.freqs[i]
        if all(abs(f - spec.freqs[j]) >= gap for j in chosen):
            chosen.append(int(i))
            if len(chosen) == k:
                break
    if len(chosen) < k:
        raise ParamError(f"only {len(chosen)} peaks separated by {min_separation:g}; asked for {k}")
    return [Peak(float(spec.freqs[i]), float(spec.power[i]), float(shares[i])) for i in chosen]


@dataclass(frozen=True)
class HarmonicTerm:
    freq: float
    a: float  # cosine coefficient
    b: float  # sine coefficient
    share: Optional[float] = None  # spectral share the term was selected with

    @property
    def amplitude(self) -> float:
        return math.hypot(self.a, self.b)

    @property
    def phase(self) -> float:
        """phi in ``A cos(2 pi f t + phi)``."""
        return math.atan2(-self.b, self.a)

    @property
    def period(self) -> float:
        return 1.0 / self.freq

    def to_dict(self) -> dict:
        return {
            "freq": self.freq,
            "period_months": self.period,
            "a": self.a,
            "b": self.b,
            "amplitude": self.amplitude,
            "phase": self.phase,
            "variance_share": self.share,
        }


@dataclass(frozen=True)
class HarmonicModel:
    terms: tuple[HarmonicTerm, ...] = ()
    fit_range: tuple[float, float] = (0.0, 0.0)
    attached_trend: Optional[PolyTrend] = None
    origin: Optional[YearMonth] = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def freqs(self) -> list[float]:
        return [t.freq for t in self.terms]

    def to_dict(self) -> dict:
        return {
            "origin": None if self.origin is None else str(self.origin),
            "fit_range": [float(v) for v in self.fit_range],
            "terms": [t.to_dict() for t in self.terms],
            "trend": None if self.attached_trend is None else self.attached_trend.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _design(times: np.ndarray, freqs: Sequence[float]) -> np.ndarray:
    X = np.empty((times.size, 2 * len(freqs)))
    for i, f in enumerate(freqs):
        arg = 2.0 * np.pi * f * times
        X[:, 2 * i] = np.cos(arg)
        X[:, 2 * i + 1] = np.sin(arg)
    return X


def fit_harmonics(series: SampledSeries, freqs: Sequence[float],
                  shares: Optional[Sequence[float]] = None,
                  trend: Optional[PolyTrend] = None) -> HarmonicModel:
    """Least-squares ``a_j, b_j`` for ``sum_j a_j cos(2 pi f_j t) + b_j sin(2 pi f_j t)``.

    Regressors are evaluated at the true sample times, so irregular series
    are handled directly.
    """
    freqs = [float(f) for f in freqs]
    t = series.times
    fit_range = (float(t[0]), float(t[-1])) if len(series) else (0.0, 0.0)
    if not freqs:
        return HarmonicModel((), fit_range, trend, series.origin)
    if any(not 0.0 < f <= 0.5 for f in freqs):
        raise ParamError("harmonic frequencies must lie in (0, 0.5]")
    if 2 * len(freqs) >= len(series):
        raise RankError(f"{len(freqs)} harmonics need more than {2 * len(freqs)} observations, got {len(series)}")
    X = _design(t, freqs)
    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    if diag.min() <= _RCOND * diag.max():
        raise RankError("harmonic regressors are collinear (duplicate or aliased frequencies)")
    coef = np.linalg.solve(np.triu(r), q.T @ series.values)
    shares = list(shares) if shares is not None else [None] * len(freqs)
    terms = tuple(
        HarmonicTerm(f, float(coef[2 * i]), float(coef[2 * i + 1]), None if s is None else float(s))
        for i, (f, s) in enumerate(zip(freqs, shares))
    )
    return HarmonicModel(terms, fit_range, trend, series.origin)


def reconstruct(model: HarmonicModel, times, with_trend: bool = False) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    out = np.zeros_like(t)
    for term in model.terms:
        arg = 2.0 * np.pi * term.freq * t
        out += term.a * np.cos(arg) + term.b * np.sin(arg)
    if with_trend and model.attached_trend is not None:
        out = out + evaluate_trend(model.attached_trend, t)
    return out


# --------------------------------------------------------------------------
# Forecasting


@dataclass(frozen=True)
class ForecastConfig:
    poly_order: int = 5
    k: int = 5
    spectral_method: str = "lomb"  # or classical | welch | auto (Welch unless excision left gaps)
    base: YearMonth = YearMonth(1960, 1)
    excise: bool = True
    segment_length: Optional[int] = None
    overlap: float = 0.5
    window: str = "hanning"
    # extrapolated phase error grows with frequency error times the training
    # span, so peaks are picked on an oversampled grid
    oversampling: float = 4.0
    horizon: Optional[int] = None  # months after the cutoff; default: to the end of the data


@dataclass(frozen=True)
class ForecastResult:
    cutoff: YearMonth
    horizon_times: np.ndarray
    predicted: np.ndarray
    predicted_with_trend: np.ndarray
    model: HarmonicModel
    spectrum: SpectralEstimate
    training: SampledSeries  # detrended pre-cutoff observations
    training_levels: SampledSeries  # same times, before detrending
    actual: Optional[np.ndarray] = None  # deflated observations over the horizon, when known
    peaks: tuple = field(default_factory=tuple)

    @property
    def origin(self) -> YearMonth:
        return self.training.origin

    @property
    def cutoff_time(self) -> float:
        return float(self.cutoff - self.origin)

    @property
    def horizon_dates(self) -> list[YearMonth]:
        return [self.origin.shift(int(t)) for t in self.horizon_times]

    @property
    def actual_detrended(self) -> Optional[np.ndarray]:
        if self.actual is None:
            return None
        return self.actual - evaluate_trend(self.model.attached_trend, self.horizon_times)

    def predicted_change(self, months: int = 12, with_trend: bool = False) -> float:
        """Model value ``months`` after the cutoff minus its value at the cutoff."""
        t0 = self.cutoff_time
        v = reconstruct(self.model, [t0, t0 + months], with_trend=with_trend)
        return float(v[1] - v[0])

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["date", "time", "actual", "predicted", "predicted_with_trend"])
        actual = self.actual if self.actual is not None else [None] * self.horizon_times.size
        for d, t, a, p, pt in zip(self.horizon_dates, self.horizon_times, actual,
                                  self.predicted, self.predicted_with_trend):
            writer.writerow([str(d), int(t), "" if a is None else repr(float(a)),
                             repr(float(p)), repr(float(pt))])
        return out.getvalue()


def forecast(raw: MonthlySeries, cpi: Optional[MonthlySeries], calendar: Optional[ShockCalendar],
             cutoff: YearMonth, cfg: ForecastConfig = ForecastConfig()) -> ForecastResult:
    """Fit on data up to and including ``cutoff``; extrapolate past it.

    deflate -> excise -> polynomial trend -> detrend -> spectrum -> top-k
    peaks -> harmonic refit -> extrapolation. Nothing after ``cutoff`` enters
    any fitting step; post-cutoff observations are only read to report
    ``actual``.
    """
    if not raw.start < cutoff < raw.end:
        raise ParamError(f"cutoff {cutoff} must fall strictly inside {raw.start}..{raw.end}")
    prior = cutoff - raw.start
    if prior < MIN_TRAINING_MONTHS:
        raise ParamError(f"cutoff leaves {prior} prior months; need at least {MIN_TRAINING_MONTHS}")
    if cfg.k < 0:
        raise ParamError(f"k must be nonnegative, got {cfg.k}")

    train = raw.slice(raw.start, cutoff)
    if cpi is not None:
        if cfg.base > cutoff:
            raise ParamError(f"deflation base {cfg.base} lies after the cutoff {cutoff}")
        train = deflate(train, cpi, cfg.base)
    if calendar is not None and cfg.excise:
        levels = excise(train, calendar)
    else:
        levels = train.to_sampled()

    trend = fit_polynomial(levels, cfg.poly_order)
    resid = detrend(levels, trend)

    method = cfg.spectral_method
    if method == "auto":
        method = "welch" if resid.is_regular else "lomb"
    if method in ("classical", "welch") and not resid.is_regular:
        raise ParamError(f"{method} needs regular sampling; excised data calls for 'lomb'")
    spec = estimate(resid, method, cfg.segment_length, cfg.overlap, cfg.window, cfg.oversampling)
    peaks = top_k_frequencies(spec, cfg.k)
    model = fit_harmonics(resid, [p.freq for p in peaks], [p.share for p in peaks], trend)

    horizon = cfg.horizon if cfg.horizon is not None else raw.end - cutoff
    if horizon < 1:
        raise ParamError(f"horizon must be at least one month, got {horizon}")
    times = np.arange(prior + 1, prior + 1 + horizon, dtype=float)
    predicted = reconstruct(model, times)
    with_trend = predicted + evaluate_trend(trend, times)

    actual = _actual_after(raw, cpi, cfg.base, cutoff, horizon)
    return ForecastResult(cutoff, times, predicted, with_trend, model, spec, resid, levels,
                          actual, tuple(peaks))


def _actual_after(raw, cpi, base, cutoff, horizon) -> Optional[np.ndarray]:
    last = min(raw.end, cutoff.shift(horizon))
    if last <= cutoff:
        return None
    after = raw.slice(cutoff.shift(1), last)
    if cpi is not None:
        if not (cpi.contains(after.start) and cpi.contains(after.end)):
            return None
        after = deflate(after, cpi, base)
    values = np.full(horizon, np.nan)
    values[: len(after)] = after.values
    if np.isnan(values).any():
        return None
    return values
