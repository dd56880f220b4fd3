"""Periodogram estimation.

Frequencies are in cycles per sample (cycles/month for monthly data) and
the DFT convention is

    d(f_j) = n**-0.5 * sum_t x_t exp(-2 pi i f_j t),    f_j = j / n,

so that a cosine of amplitude A at an interior Fourier frequency gives a
classical periodogram value ``|d|**2 = n A**2 / 4`` and a scaled value
``(4 / n) |d|**2 = A**2``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateError, ParamError
from .ingest import MonthlySeries, SampledSeries

# bins whose quadrature normaliser falls below this fraction of N are dropped
_LS_DEGENERATE = 1e-10
_LS_CHUNK = 256
_DIRECT_CHUNK = 512


# --------------------------------------------------------------------------
# Discrete Fourier transform


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def _bit_reverse(n: int) -> np.ndarray:
    levels = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(levels):
        rev |= ((idx >> b) & 1) << (levels - 1 - b)
    return rev


def fft_radix2(x) -> np.ndarray:
    """Unnormalised forward transform, iterative decimation in time.

    ``len(x)`` must be a power of two.
    """
    a = np.asarray(x, dtype=complex)
    n = a.size
    if not _is_pow2(n):
        raise ParamError(f"radix-2 transform needs a power-of-two length, got {n}")
    a = a[_bit_reverse(n)]
    size = 2
    while size <= n:
        half = size // 2
        angle = -2.0 * np.pi * np.arange(half) / size
        twiddle = np.cos(angle) + 1j * np.sin(angle)
        blocks = a.reshape(-1, size)
        even = blocks[:, :half]
        odd = blocks[:, half:] * twiddle
        a = np.concatenate([even + odd, even - odd], axis=1).ravel()
        size *= 2
    return a


def _unit_roots(n: int) -> np.ndarray:
    angle = -2.0 * np.pi * np.arange(n) / n
    return np.cos(angle) + 1j * np.sin(angle)


def dft_direct(x) -> np.ndarray:
    """Unnormalised forward transform by direct O(n^2) summation.

    Exponents are reduced modulo n before lookup so the kernel is exact to
    rounding of a single table of n unit roots.
    """
    x = np.asarray(x, dtype=complex)
    n = x.size
    roots = _unit_roots(n)
    t = np.arange(n)
    out = np.empty(n, dtype=complex)
    for lo in range(0, n, _DIRECT_CHUNK):
        j = np.arange(lo, min(lo + _DIRECT_CHUNK, n))
        kernel = roots[np.outer(j, t) % n]
        out[lo : lo + j.size] = (kernel * x).sum(axis=1)
    return out


def dft_chirp(x) -> np.ndarray:
    """Unnormalised forward transform of any length via Bluestein's chirp-z.

    Evaluates the exact grid j/n with three radix-2 transforms of a padded
    length; no change of frequency grid.
    """
    x = np.asarray(x, dtype=complex)
    n = x.size
    if _is_pow2(n):
        return fft_radix2(x)
    m = 1 << (2 * n - 1).bit_length()
    k = np.arange(n)
    # k^2 mod 2n keeps the chirp angle small
    angle = np.pi * ((k * k) % (2 * n)) / n
    chirp = np.cos(angle) - 1j * np.sin(angle)
    a = np.zeros(m, dtype=complex)
    a[:n] = x * chirp
    b = np.zeros(m, dtype=complex)
    b[:n] = np.conj(chirp)
    b[m - n + 1 :] = np.conj(chirp[1:][::-1])
    conv = np.conj(fft_radix2(np.conj(fft_radix2(a) * fft_radix2(b)))) / m
    return conv[:n] * chirp


def dft(values, method: str = "auto") -> np.ndarray:
    """Normalised DFT ``d(f_j)`` for j = 0..n-1.

    ``method``: ``"auto"`` (radix-2 for powers of two, direct summation
    otherwise), ``"fft"``, ``"direct"`` or ``"chirp"``.
    """
    x = np.asarray(values)
    n = x.size
    if n < 2:
        raise ParamError("DFT needs at least 2 samples")
    if method == "auto":
        method = "fft" if _is_pow2(n) else "direct"
    if method == "fft":
        out = fft_radix2(x)
    elif method == "direct":
        out = dft_direct(x)
    elif method == "chirp":
        out = dft_chirp(x)
    else:
        raise ParamError(f"unknown DFT method {method!r}")
    return out / math.sqrt(n)


# --------------------------------------------------------------------------
# Spectral estimates


@dataclass(frozen=True)
class WindowSpec:
    kind: str = "hanning"
    length: int = 0

    def __post_init__(self):
        kind = {"rect": "rectangular", "hann": "hanning"}.get(self.kind, self.kind)
        if kind not in ("rectangular", "hanning"):
            raise ParamError(f"unknown window {self.kind!r}")
        object.__setattr__(self, "kind", kind)

    def weights(self, length: Optional[int] = None) -> np.ndarray:
        L = int(length or self.length)
        if L < 1:
            raise ParamError("window length must be positive")
        if self.kind == "rectangular" or L == 1:
            return np.ones(L)
        t = np.arange(L)
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * t / (L - 1)))


@dataclass(frozen=True)
class SpectralEstimate:
    """Power on a grid of positive frequencies (cycles per sample).

    ``resolution`` is the natural frequency bin width of the estimator
    (1/n, 1/segment_length, or 1/baseline for Lomb-Scargle). Lomb-Scargle
    bins whose normaliser degenerates are not reported; their frequencies
    are listed in ``invalid_freqs``.
    """

    freqs: np.ndarray
    power: np.ndarray
    method: str
    n_effective: int
    variance_total: float
    resolution: float
    params: dict = field(default_factory=dict)
    invalid_freqs: tuple = ()

    def __post_init__(self):
        freqs = np.array(self.freqs, dtype=float)
        power = np.array(self.power, dtype=float)
        freqs.setflags(write=False)
        power.setflags(write=False)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "power", power)

    def __len__(self):
        return self.freqs.size

    @property
    def periods(self) -> np.ndarray:
        return 1.0 / self.freqs

    def shares(self) -> np.ndarray:
        """Fraction of the summed power carried by each bin."""
        total = self.power.sum()
        if total <= 0:
            return np.zeros_like(self.power)
        return self.power / total

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["freq", "period_months", "power", "variance_share"])
        for f, p, s in zip(self.freqs, self.power, self.shares()):
            writer.writerow([repr(float(f)), repr(float(1.0 / f)), repr(float(p)), repr(float(s))])
        return out.getvalue()

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "n_effective": int(self.n_effective),
            "variance_total": float(self.variance_total),
            "resolution": float(self.resolution),
            "params": self.params,
            "invalid_freqs": [float(f) for f in self.invalid_freqs],
            "freqs": [float(f) for f in self.freqs],
            "power": [float(p) for p in self.power],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _as_regular(series) -> np.ndarray:
    if isinstance(series, MonthlySeries):
        return np.asarray(series.values, dtype=float)
    if isinstance(series, SampledSeries):
        if not series.is_regular:
            raise ParamError("this estimator needs regular sampling; use lomb_scargle")
        return np.asarray(series.values, dtype=float)
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ParamError("expected a 1-d series")
    return x


def periodogram(series, dft_method: str = "auto") -> SpectralEstimate:
    """Classical periodogram ``|d(f_j)|^2`` for j = 1..n//2 (mean removed)."""
    x = _as_regular(series)
    n = x.size
    if n < 4:
        raise ParamError(f"periodogram needs at least 4 samples, got {n}")
    dev = x - x.mean()
    d = dft(dev, dft_method)
    j = np.arange(1, n // 2 + 1)
    return SpectralEstimate(
        freqs=j / n,
        power=np.abs(d[j]) ** 2,
        method="classical",
        n_effective=n,
        variance_total=float(dev @ dev) / n,
        resolution=1.0 / n,
        params={"dft": dft_method},
    )


def scaled_periodogram(series, dft_method: str = "auto") -> SpectralEstimate:
    """Periodogram times 4/n; an interior bin then reads the squared amplitude."""
    raw = periodogram(series, dft_method)
    n = raw.n_effective
    return SpectralEstimate(
        freqs=raw.freqs,
        power=raw.power * (4.0 / n),
        method="scaled",
        n_effective=n,
        variance_total=raw.variance_total,
        resolution=raw.resolution,
        params=raw.params,
    )


def parseval_check(series, dft_method: str = "auto") -> tuple[float, float, float]:
    """Compare the sample variance with the sum of harmonic contributions.

    Interior harmonics contribute ``A_j^2 / 2``; for even n the Nyquist
    harmonic contributes ``a_{n/2}^2``.

    Returns
    -------
    (variance, spectral_sum, relative_gap)
    """
    x = _as_regular(series)
    n = x.size
    if n < 4:
        raise ParamError(f"Parseval check needs at least 4 samples, got {n}")
    dev = x - x.mean()
    variance = float(dev @ dev) / n
    if variance <= 0.0:
        raise DegenerateError("zero-variance series")
    d = dft(dev, dft_method)
    power = np.abs(d) ** 2
    interior = np.arange(1, (n - 1) // 2 + 1)
    amp_sq = 4.0 * power[interior] / n
    spectral_sum = float(np.sum(amp_sq / 2.0))
    if n % 2 == 0:
        # a_{n/2} = d(1/2) / sqrt(n) is real for real input
        spectral_sum += float(power[n // 2]) / n
    return variance, spectral_sum, abs(variance - spectral_sum) / variance


def welch(series, segment_length: Optional[int] = None, overlap: float = 0.5,
          window="hanning", dft_method: str = "auto") -> SpectralEstimate:
    """Welch average of windowed, mean-removed segment periodograms.

    Segments of ``segment_length`` start every
    ``floor(segment_length * (1 - overlap))`` samples; only full segments are
    used. Each segment periodogram is divided by the window power
    ``sum(w**2) / L`` so a rectangular window reproduces the classical
    periodogram. Defaults: half the series, 50% overlap, Hanning.
    """
    x = _as_regular(series)
    n = x.size
    L = n // 2 if segment_length is None else int(segment_length)
    if L < 4:
        raise ParamError(f"segment length must be at least 4, got {L}")
    if L > n:
        raise ParamError(f"segment length {L} exceeds series length {n}")
    if not 0.0 <= overlap <= 0.9:
        raise ParamError(f"overlap must lie in [0, 0.9], got {overlap}")
    spec = window if isinstance(window, WindowSpec) else WindowSpec(window, L)
    w = spec.weights(L)
    w_power = float(w @ w) / L
    stride = max(1, int(math.floor(L * (1.0 - overlap))))
    starts = range(0, n - L + 1, stride)

    j = np.arange(1, L // 2 + 1)
    acc = np.zeros(j.size)
    for s in starts:
        seg = x[s : s + L]
        seg = (seg - seg.mean()) * w
        acc += np.abs(dft(seg, dft_method)[j]) ** 2
    n_seg = len(starts)
    dev = x - x.mean()
    return SpectralEstimate(
        freqs=j / L,
        power=acc / (n_seg * w_power),
        method="welch",
        n_effective=L,
        variance_total=float(dev @ dev) / n,
        resolution=1.0 / L,
        params={
            "segment_length": L,
            "overlap": float(overlap),
            "stride": stride,
            "n_segments": n_seg,
            "window": spec.kind,
        },
    )


def lomb_grid(times, oversampling: float = 4.0, f_max: float = 0.5) -> np.ndarray:
    """Evenly spaced grid from ``df`` to ``f_max`` with ``df = 1 / (oversampling * T)``."""
    t = np.asarray(times, dtype=float)
    baseline = float(t[-1] - t[0])
    if baseline <= 0:
        raise ParamError("need a positive time baseline")
    df = 1.0 / (oversampling * baseline)
    count = int(math.floor(f_max / df + 1e-9))
    return df * np.arange(1, count + 1)


def _sampled(series) -> SampledSeries:
    if isinstance(series, SampledSeries):
        return series
    if isinstance(series, MonthlySeries):
        return series.to_sampled()
    values = np.asarray(series, dtype=float)
    return SampledSeries(np.arange(values.size, dtype=float), values)


def lomb_scargle(series, freqs=None, normalization: str = "psd", oversampling: float = 4.0,
                 chunk_size: int = _LS_CHUNK) -> SpectralEstimate:
    """Lomb-Scargle periodogram of (possibly irregular) samples.

    For each frequency, with ``w = 2 pi f`` and the offset ``tau`` solving
    ``tan(2 w tau) = sum sin(2 w t) / sum cos(2 w t)``::

        P = 1/2 [ (sum y cos w(t - tau))^2 / sum cos^2 w(t - tau)
                + (sum y sin w(t - tau))^2 / sum sin^2 w(t - tau) ]

    with ``y`` the mean-removed values. In this ``"psd"`` form (alias
    ``"raw"``) the power coincides with the classical periodogram on
    regular samples at interior Fourier frequencies. ``"normalized"``
    divides by the sample variance.

    Frequencies where either normaliser vanishes (e.g. the Nyquist bin of
    integer-spaced data) are dropped and reported in ``invalid_freqs``.
    Frequency bins are computed independently, so ``chunk_size`` does not
    change the result.
    """
    s = _sampled(series)
    if len(s) < 4:
        raise ParamError(f"Lomb-Scargle needs at least 4 observations, got {len(s)}")
    if normalization == "raw":
        normalization = "psd"
    if normalization not in ("psd", "normalized"):
        raise ParamError(f"unknown normalization {normalization!r}")
    t = s.times
    y = s.values - s.values.mean()
    n = y.size
    f = lomb_grid(t, oversampling) if freqs is None else np.asarray(freqs, dtype=float)
    if f.ndim != 1 or f.size == 0 or np.any(f <= 0):
        raise ParamError("frequencies must be a non-empty list of positive values")
    if np.unique(f).size != f.size:
        raise ParamError("frequencies must be distinct")

    power = np.empty(f.size)
    valid = np.ones(f.size, dtype=bool)
    for lo in range(0, f.size, max(1, int(chunk_size))):
        omega = 2.0 * np.pi * f[lo : lo + chunk_size]
        wt = np.outer(omega, t)
        c, sn = np.cos(wt), np.sin(wt)
        cc = (c * c).sum(axis=1)
        ss = (sn * sn).sum(axis=1)
        cs = (c * sn).sum(axis=1)
        yc = (c * y).sum(axis=1)
        ys = (sn * y).sum(axis=1)
        # 2 w tau = atan2(sum sin 2wt, sum cos 2wt)
        half = 0.5 * np.arctan2(2.0 * cs, cc - ss)
        ct, st = np.cos(half), np.sin(half)
        y_cos = ct * yc + st * ys
        y_sin = ct * ys - st * yc
        cos_sq = ct * ct * cc + 2.0 * ct * st * cs + st * st * ss
        sin_sq = ct * ct * ss - 2.0 * ct * st * cs + st * st * cc
        ok = (cos_sq > _LS_DEGENERATE * n) & (sin_sq > _LS_DEGENERATE * n)
        with np.errstate(divide="ignore", invalid="ignore"):
            p = 0.5 * (y_cos**2 / cos_sq + y_sin**2 / sin_sq)
        power[lo : lo + omega.size] = np.where(ok, p, 0.0)
        valid[lo : lo + omega.size] = ok

    variance = float(y @ y) / n
    if normalization == "normalized":
        power = power / variance if variance > 0 else np.zeros_like(power)
    baseline = float(t[-1] - t[0])
    order = np.argsort(f[valid], kind="stable")
    return SpectralEstimate(
        freqs=f[valid][order],
        power=np.maximum(power[valid][order], 0.0),
        method="lomb_scargle",
        n_effective=n,
        variance_total=variance,
        resolution=1.0 / baseline if baseline > 0 else float("nan"),
        params={"normalization": normalization, "oversampling": float(oversampling),
                "custom_grid": freqs is not None},
        invalid_freqs=tuple(float(v) for v in f[~valid]),
    )


METHODS = ("classical", "welch", "lomb")


def estimate(series, method: str = "welch", segment_length: Optional[int] = None,
             overlap: float = 0.5, window: str = "hanning",
             oversampling: float = 4.0) -> SpectralEstimate:
    """Dispatch to one of the three estimators by name."""
    if method == "classical":
        return periodogram(series)
    if method == "welch":
        return welch(series, segment_length, overlap, window)
    if method in ("lomb", "lomb_scargle"):
        return lomb_scargle(series, oversampling=oversampling)
    raise ParamError(f"unknown spectral method {method!r}; expected one of {', '.join(METHODS)}")
