"""End-to-end runs behind the command line.

Each ``run_*`` function returns an in-memory bundle ``{filename: text}``;
nothing touches the output directory until the whole bundle has been
computed, so a failing run leaves no partial outputs.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import __version__, rng
from .detrend import DEFAULT_ORDER, MAX_ORDER, PolyTrend, detrend, evaluate_trend, fit_polynomial
from .errors import InputIOError, ParamError, StockCyclesError
from .harmonics import ForecastConfig, HarmonicModel, fit_harmonics, forecast, reconstruct, top_k_frequencies
from .ingest import (
    MonthlySeries,
    SampledSeries,
    ShockCalendar,
    YearMonth,
    builtin_calendar,
    canonical_country,
    deflate,
    excise,
    read_csv,
    serialize_csv,
)
from .metrics import format_table, score
from .spectral import SpectralEstimate, estimate, periodogram
from .stats import (
    DEFAULT_LAGS,
    acf,
    box_pierce,
    first_differences,
    jarque_bera,
    ks_test_normal,
    ljung_box,
    simulate_random_walk,
    simulate_white_noise,
)
from .svg import Trace, line_chart

MAX_K = 64
# a 1x Lomb-Scargle grid keeps candidate peaks one bin apart, so tones at
# adjacent Fourier frequencies stay resolved; forecasting instead wants the
# finer frequency estimate of the 4x grid (see ForecastConfig)
ANALYZE_OVERSAMPLING = 1.0


@dataclass(frozen=True)
class PipelineConfig:
    input: Optional[str] = None
    column: Optional[str] = None
    cpi: Optional[str] = None
    cpi_column: Optional[str] = None
    base: str = "1960-01"
    calendar: Optional[str] = None
    country: Optional[str] = None
    excise: bool = False
    order: Optional[int] = None
    method: Optional[str] = None  # classical | welch | lomb; default welch, lomb when excised
    segment: Optional[int] = None
    overlap: float = 0.5
    window: str = "hanning"
    oversampling: Optional[float] = None  # default 1 for analyze, 4 for forecast
    k: int = 5
    cutoff: Optional[str] = None
    lags: int = DEFAULT_LAGS
    seed: int = 0
    out: Optional[str] = None

    def __post_init__(self):
        if self.order is not None and not 0 <= int(self.order) <= MAX_ORDER:
            raise ParamError(f"order must be in 0..{MAX_ORDER}, got {self.order}")
        if not 0 <= int(self.k) <= MAX_K:
            raise ParamError(f"k must be in 0..{MAX_K}, got {self.k}")
        if self.method is not None and self.method not in ("classical", "welch", "lomb"):
            raise ParamError(f"unknown method {self.method!r}")
        if self.window not in ("rect", "rectangular", "hanning"):
            raise ParamError(f"unknown window {self.window!r}")
        if int(self.seed) < 0:
            raise ParamError("seed must be nonnegative")
        if self.country is not None:
            canonical_country(self.country)

    @property
    def poly_order(self) -> int:
        if self.order is not None:
            return int(self.order)
        if self.country is not None:
            return DEFAULT_ORDER[canonical_country(self.country)]
        return 5

    @property
    def base_month(self) -> YearMonth:
        return YearMonth.parse(self.base)

    @classmethod
    def fields(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_mapping(cls, data: dict) -> "PipelineConfig":
        known = set(cls.fields())
        clean = {}
        for key, value in data.items():
            name = key.replace("-", "_")
            if name == "segment_length":
                name = "segment"
            if name not in known:
                raise ParamError(f"unknown configuration key {key!r}")
            clean[name] = value
        return cls(**clean)

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("out")
        d["order"] = self.poly_order
        return d


# --------------------------------------------------------------------------
# Inputs


@dataclass(frozen=True)
class Inputs:
    raw: MonthlySeries
    cpi: Optional[MonthlySeries]
    calendar: Optional[ShockCalendar]
    digests: dict


def _digest(path: str) -> str:
    try:
        with open(path, "rb") as fh:
            return hashlib.sha256(fh.read()).hexdigest()
    except OSError as exc:
        raise InputIOError(f"cannot read {path}: {exc.strerror or exc}") from None


def load_inputs(cfg: PipelineConfig) -> Inputs:
    if not cfg.input:
        raise ParamError("no --input series given")
    digests = {cfg.input: _digest(cfg.input)}
    raw = read_csv(cfg.input, value_column=cfg.column)
    cpi = None
    if cfg.cpi:
        digests[cfg.cpi] = _digest(cfg.cpi)
        cpi = read_csv(cfg.cpi, value_column=cfg.cpi_column)
    calendar = None
    if cfg.calendar:
        digests[cfg.calendar] = _digest(cfg.calendar)
        with open(cfg.calendar, encoding="utf-8") as fh:
            calendar = ShockCalendar.from_json(fh.read())
    elif cfg.country:
        calendar = builtin_calendar(cfg.country)
    if cfg.excise and calendar is None:
        raise ParamError("--excise needs --calendar or --country")
    return Inputs(raw, cpi, calendar, digests)


def manifest(command: str, cfg: PipelineConfig, inputs: Optional[Inputs], files) -> str:
    record = {
        "command": command,
        "package_version": __version__,
        "config": cfg.echo(),
        "seed": int(cfg.seed),
        "generator": rng.describe(cfg.seed),
        "inputs": {} if inputs is None else {os.path.basename(k): v for k, v in sorted(inputs.digests.items())},
        "outputs": sorted(files),
    }
    return json.dumps(record, indent=2) + "\n"


# --------------------------------------------------------------------------
# Helpers


def _csv(header, rows) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return out.getvalue()


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _date_label(origin: YearMonth):
    def fmt(t: float) -> str:
        return str(origin.shift(int(round(t)))) if abs(t - round(t)) < 1e-9 else f"{t:g}"

    return fmt


def _prepare(cfg: PipelineConfig, inputs: Inputs):
    series = inputs.raw
    if inputs.cpi is not None:
        series = deflate(series, inputs.cpi, cfg.base_month)
    if cfg.excise:
        sampled = excise(series, inputs.calendar)
    else:
        sampled = series.to_sampled()
    return series, sampled


def _method(cfg: PipelineConfig, regular: bool) -> str:
    method = cfg.method or ("welch" if regular else "lomb")
    if method in ("classical", "welch") and not regular:
        raise ParamError(f"{method} needs regular sampling; excised data calls for --method lomb")
    return method


def _topk_rows(peaks):
    top_total = sum(p.power for p in peaks)
    return [
        (rank, p.freq, p.period, p.power, p.share, p.power / top_total if top_total > 0 else 0.0)
        for rank, p in enumerate(peaks, start=1)
    ]


_TOPK_HEADER = ["rank", "freq", "period_months", "power", "variance_share_total", "variance_share_topk"]


def _normality(values) -> dict:
    out = {}
    for name, fn in (("ks", ks_test_normal), ("jb", jarque_bera)):
        try:
            out[name] = fn(values).to_dict()
        except StockCyclesError as exc:  # reported, not fatal: e.g. exact fits leave no residual
            out[name] = {"error": str(exc)}
    return out


# --------------------------------------------------------------------------
# Commands


@dataclass(frozen=True)
class Analysis:
    trend: PolyTrend
    resid: SampledSeries
    spectrum: SpectralEstimate
    peaks: list
    model: HarmonicModel


def analyze_series(sampled: SampledSeries, cfg: PipelineConfig) -> Analysis:
    """Trend, detrended values, spectrum, top-k peaks and harmonic refit."""
    trend = fit_polynomial(sampled, cfg.poly_order)
    resid = detrend(sampled, trend)
    method = _method(cfg, resid.is_regular)
    spec = estimate(resid, method, cfg.segment, cfg.overlap, cfg.window,
                    cfg.oversampling if cfg.oversampling is not None else ANALYZE_OVERSAMPLING)
    peaks = top_k_frequencies(spec, cfg.k)
    model = fit_harmonics(resid, [p.freq for p in peaks], [p.share for p in peaks], trend)
    return Analysis(trend, resid, spec, peaks, model)


def run_analyze(cfg: PipelineConfig, inputs: Optional[Inputs] = None) -> dict:
    inputs = inputs or load_inputs(cfg)
    series, sampled = _prepare(cfg, inputs)
    res = analyze_series(sampled, cfg)
    trend, resid, spec, peaks, model = res.trend, res.resid, res.spectrum, res.peaks, res.model
    recon = reconstruct(model, resid.times)
    trend_vals = evaluate_trend(trend, resid.times)
    card = score(resid.values, recon)

    origin = series.start
    dates = [origin.shift(int(t)) for t in resid.times]
    files = {
        "series.csv": serialize_csv(series, "value"),
        "trend.json": trend.to_json() + "\n",
        "detrended.csv": _csv(["date", "time", "value", "trend", "detrended"],
                              zip(map(str, dates), resid.times.astype(int), sampled.values, trend_vals, resid.values)),
        "spectrum.csv": spec.to_csv(),
        "spectrum.json": spec.to_json() + "\n",
        "topk.csv": _csv(_TOPK_HEADER, _topk_rows(peaks)),
        "model.json": model.to_json() + "\n",
        "reconstruction.csv": _csv(["date", "time", "detrended", "reconstruction", "reconstruction_with_trend"],
                                   zip(map(str, dates), resid.times.astype(int), resid.values, recon,
                                       recon + trend_vals)),
        "scorecard.json": _json({"model": card.to_dict(),
                                 "residual_normality": _normality(resid.values - recon)}),
        "scorecard.txt": format_table({series.label or "series": card}, "Model accuracy"),
    }
    fmt = _date_label(origin)
    files["series_trend.svg"] = line_chart(
        [Trace(resid.times, sampled.values, "series", kind="line" if resid.is_regular else "points"),
         Trace(resid.times, trend_vals, f"order-{trend.order} trend")],
        title="Series and polynomial trend", ylabel="value", xtick_labels=fmt)
    files["periodogram.svg"] = line_chart(
        [Trace(spec.freqs, spec.shares(), f"{spec.method} periodogram")],
        title="Periodogram", xlabel="frequency (cycles/month)", ylabel="share of power")
    files["reconstruction.svg"] = line_chart(
        [Trace(resid.times, resid.values, "detrended", kind="line" if resid.is_regular else "points"),
         Trace(resid.times, recon, f"sum of top {len(peaks)} harmonics")],
        title="Harmonic model", ylabel="detrended value", xtick_labels=fmt)
    files["manifest.json"] = manifest("analyze", cfg, inputs, files)
    return files


def run_rwm_test(cfg: PipelineConfig, inputs: Optional[Inputs] = None) -> dict:
    inputs = inputs or load_inputs(cfg)
    series = inputs.raw
    if inputs.cpi is not None:
        series = deflate(series, inputs.cpi, cfg.base_month)
    diffs = first_differences(series)
    n = len(diffs)
    max_lag = min(max(cfg.lags, DEFAULT_LAGS), n - 1)
    ac = acf(diffs, max_lag)
    tests = {"h": int(cfg.lags), "box_pierce": box_pierce(ac, cfg.lags).to_dict(),
             "ljung_box": ljung_box(ac, cfg.lags).to_dict()}
    tests["normality"] = _normality(diffs.values)

    sigma = float(np.std(diffs.values)) or 1.0
    noise = simulate_white_noise(n, sigma, cfg.seed, start=diffs.start)
    walk = simulate_random_walk(len(series), sigma, cfg.seed, start=series.start)
    walk_ac = acf(first_differences(walk), max_lag)
    tests["simulated_random_walk"] = {
        "sigma": sigma,
        "generator": rng.describe(cfg.seed),
        "box_pierce": box_pierce(walk_ac, cfg.lags).to_dict(),
        "ljung_box": ljung_box(walk_ac, cfg.lags).to_dict(),
    }

    order = cfg.poly_order
    diff_spec = periodogram(diffs)
    walk_sampled = walk.to_sampled()
    walk_spec = periodogram(detrend(walk_sampled, fit_polynomial(walk_sampled, order)))
    sampled = series.to_sampled()
    series_spec = periodogram(detrend(sampled, fit_polynomial(sampled, order)))

    band = ac.band()
    fmt = _date_label(diffs.start)
    t = np.arange(n)
    files = {
        "differences.csv": _csv(["date", "difference", "simulated_white_noise"],
                                zip(map(str, diffs.dates), diffs.values, noise.values)),
        "acf.csv": _csv(["lag", "rho", "lower", "upper"],
                        ((int(k), r, -band, band) for k, r in zip(ac.lags, ac.rho))),
        "diff_spectrum.csv": diff_spec.to_csv(),
        "series_spectrum.csv": series_spec.to_csv(),
        "rwm_spectrum.csv": walk_spec.to_csv(),
        "simulated_rwm.csv": serialize_csv(walk, "value"),
        "tests.json": _json(tests),
        "differences.svg": line_chart(
            [Trace(t, diffs.values, "first differences"),
             Trace(t, noise.values, "simulated white noise", dash="3,2")],
            title="First differences vs white noise", xtick_labels=fmt),
        "correlogram.svg": line_chart(
            [Trace(ac.lags[1:], ac.rho[1:], "autocorrelation", kind="stem")],
            hlines=[(band, "+2/sqrt(n)"), (-band, "-2/sqrt(n)")],
            title="Correlogram of first differences", xlabel="lag (months)", ylabel="rho"),
        "diff_periodogram.svg": line_chart(
            [Trace(diff_spec.freqs, diff_spec.shares(), "first differences")],
            title="Periodogram of first differences", xlabel="frequency (cycles/month)", ylabel="share of power"),
        "rwm_periodogram.svg": line_chart(
            [Trace(series_spec.freqs, series_spec.shares(), "detrended series"),
             Trace(walk_spec.freqs, walk_spec.shares(), "detrended simulated random walk", dash="3,2")],
            title="Periodogram: series vs simulated random walk", xlabel="frequency (cycles/month)",
            ylabel="share of power"),
    }
    files["manifest.json"] = manifest("rwm-test", cfg, inputs, files)
    return files


def run_forecast(cfg: PipelineConfig, inputs: Optional[Inputs] = None) -> dict:
    if not cfg.cutoff:
        raise ParamError("forecast needs --cutoff YYYY-MM")
    cutoff = YearMonth.parse(cfg.cutoff)
    inputs = inputs or load_inputs(cfg)
    fcfg = ForecastConfig(
        poly_order=cfg.poly_order, k=cfg.k, spectral_method=cfg.method or "lomb", base=cfg.base_month,
        excise=cfg.excise, segment_length=cfg.segment, overlap=cfg.overlap, window=cfg.window,
        oversampling=cfg.oversampling if cfg.oversampling is not None else ForecastConfig.oversampling,
    )
    result = forecast(inputs.raw, inputs.cpi, inputs.calendar if cfg.excise else None, cutoff, fcfg)

    scores = {}
    if result.actual is not None:
        scores["detrended"] = score(result.actual_detrended, result.predicted).to_dict()
        scores["levels"] = score(result.actual, result.predicted_with_trend).to_dict()
    summary = {
        "cutoff": str(cutoff),
        "horizon_months": int(result.horizon_times.size),
        "spectral_method": result.spectrum.method,
        "predicted_change_12m": result.predicted_change(12),
        "predicted_change_12m_with_trend": result.predicted_change(12, with_trend=True),
        "periods_months": [p.period for p in result.peaks],
    }
    levels = result.training_levels
    if result.actual is not None and result.actual.size >= 12 and levels.times[-1] == result.cutoff_time:
        summary["actual_change_12m"] = float(result.actual[11] - levels.values[-1])

    fmt = _date_label(result.origin)
    tr = result.training
    fitted = reconstruct(result.model, tr.times, with_trend=True)
    traces = [
        Trace(tr.times, result.training_levels.values, "observed (training)",
              kind="line" if tr.is_regular else "points"),
        Trace(tr.times, fitted, "harmonics + trend (fit)"),
        Trace(result.horizon_times, result.predicted_with_trend, "prediction", dash="5,3"),
    ]
    if result.actual is not None:
        traces.insert(1, Trace(result.horizon_times, result.actual, "observed (after cutoff)", color="#999999"))
    files = {
        "forecast.csv": result.to_csv(),
        "model.json": result.model.to_json() + "\n",
        "spectrum.csv": result.spectrum.to_csv(),
        "topk.csv": _csv(_TOPK_HEADER, _topk_rows(result.peaks)),
        "scorecard.json": _json(scores),
        "summary.json": _json(summary),
        "forecast.svg": line_chart(traces, title=f"Prediction from {cutoff}", ylabel="value",
                                   vlines=[(result.cutoff_time, f"cutoff {cutoff}")], xtick_labels=fmt),
        "forecast_detrended.svg": line_chart(
            [Trace(tr.times, tr.values, "detrended (training)", kind="line" if tr.is_regular else "points"),
             Trace(tr.times, reconstruct(result.model, tr.times), "harmonic fit"),
             Trace(result.horizon_times, result.predicted, "prediction", dash="5,3")]
            + ([Trace(result.horizon_times, result.actual_detrended, "detrended (after cutoff)",
                      color="#999999")] if result.actual is not None else []),
            title=f"Detrended prediction from {cutoff}", vlines=[(result.cutoff_time, f"cutoff {cutoff}")],
            xtick_labels=fmt),
    }
    if scores:
        files["scorecard.txt"] = format_table(
            {"detrended": score(result.actual_detrended, result.predicted),
             "levels": score(result.actual, result.predicted_with_trend)}, "Prediction accuracy")
    files["manifest.json"] = manifest("forecast", cfg, inputs, files)
    return files


def write_bundle(files: dict, out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name in sorted(files):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(files[name])
        written.append(path)
    return written
