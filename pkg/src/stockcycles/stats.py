"""Random-walk falsification tools.

Autocorrelation, Box-Pierce / Ljung-Box portmanteau tests, normality tests
and the reference processes (white noise, random walk) they are compared
against. Chi-square and Kolmogorov tail probabilities are computed here
rather than pulled from scipy so the p-values have no optional dependency.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import rng
from .errors import DegenerateError, ParamError, TooShortError
from .ingest import MonthlySeries, SampledSeries, YearMonth

_EPS = 1e-16
_FPMIN = 1e-300
_MAX_ITER = 10_000
# relative std below which a sample counts as constant
_DEGENERATE = 1e-10

DEFAULT_LAGS = 24


# --------------------------------------------------------------------------
# Tail probabilities


def gammaincc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma ``Q(a, x) = Gamma(a, x) / Gamma(a)``.

    Series expansion of P below ``x = a + 1``, Lentz continued fraction for Q
    above it.
    """
    if a <= 0:
        raise ParamError(f"shape must be positive, got {a}")
    if x < 0:
        raise ParamError(f"argument must be nonnegative, got {x}")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    log_prefactor = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        ap = a
        term = total = 1.0 / a
        for _ in range(_MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * _EPS:
                break
        return max(0.0, 1.0 - total * math.exp(log_prefactor))

    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return min(1.0, math.exp(log_prefactor) * h)


def chi2_sf(statistic: float, dof: int) -> float:
    """Survival function of the chi-square distribution."""
    if dof <= 0:
        raise ParamError(f"degrees of freedom must be positive, got {dof}")
    if statistic <= 0:
        return 1.0
    return gammaincc(0.5 * dof, 0.5 * statistic)


def kolmogorov_sf(lam: float) -> float:
    """P(K > lam) for the limiting Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 1.18:
        # theta-function form converges fast for small arguments
        y = math.exp(-(math.pi**2) / (8.0 * lam * lam))
        s = y + y**9 + y**25 + y**49
        return max(0.0, min(1.0, 1.0 - math.sqrt(2.0 * math.pi) / lam * s))
    x = math.exp(-2.0 * lam * lam)
    s = x - x**4 + x**9 - x**16
    return max(0.0, min(1.0, 2.0 * s))


def norm_cdf(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * (1.0 + np.vectorize(math.erf)(x / math.sqrt(2.0)))


# --------------------------------------------------------------------------
# Results


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # keep pytest from collecting this class

    test_name: str
    statistic: float
    dof: int
    p_value: float

    def rejects(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class AcfResult:
    lags: np.ndarray
    rho: np.ndarray
    n: int

    @property
    def max_lag(self) -> int:
        return int(self.lags[-1])

    def band(self) -> float:
        """Approximate 95% white-noise band, +/- 2/sqrt(n)."""
        return 2.0 / math.sqrt(self.n)


def _values(series) -> np.ndarray:
    if isinstance(series, MonthlySeries):
        return np.asarray(series.values, dtype=float)
    if isinstance(series, SampledSeries):
        if not series.is_regular:
            raise ParamError("autocorrelation needs regularly sampled data")
        return np.asarray(series.values, dtype=float)
    return np.asarray(series, dtype=float)


# --------------------------------------------------------------------------
# Operations


def first_differences(series):
    """y[t+1] - y[t]. A MonthlySeries comes back dated from its second month."""
    values = _values(series)
    if values.size < 2:
        raise TooShortError(f"first differences need at least 2 observations, got {values.size}")
    diffs = np.diff(values)
    if isinstance(series, MonthlySeries):
        return MonthlySeries(series.start.shift(1), diffs, series.label)
    return diffs


def acf(series, max_lag: int) -> AcfResult:
    """Sample autocorrelations with the biased (1/n) covariance estimator.

    rho[k] = sum_t (x_t - m)(x_{t+k} - m) / sum_t (x_t - m)^2
    """
    x = _values(series)
    n = x.size
    max_lag = int(max_lag)
    if max_lag < 0 or max_lag >= n:
        raise ParamError(f"max_lag must be in 0..{n - 1}, got {max_lag}")
    dev = x - x.mean()
    denom = float(dev @ dev)
    if denom <= n * (_DEGENERATE * np.abs(x).max()) ** 2:
        raise DegenerateError("autocorrelation of a constant series is undefined")
    rho = np.empty(max_lag + 1)
    rho[0] = 1.0
    for k in range(1, max_lag + 1):
        rho[k] = float(dev[:-k] @ dev[k:]) / denom
    return AcfResult(np.arange(max_lag + 1), rho, n)


def _check_h(result: AcfResult, h: int) -> int:
    h = int(h)
    if h <= 0:
        raise ParamError(f"number of lags must be positive, got {h}")
    if h > result.max_lag:
        raise ParamError(f"h={h} exceeds the {result.max_lag} autocorrelations available")
    return h


def box_pierce(result: AcfResult, h: int = DEFAULT_LAGS) -> TestReport:
    h = _check_h(result, h)
    r = result.rho[1 : h + 1]
    q = result.n * float(np.sum(r * r))
    return TestReport("box-pierce", q, h, chi2_sf(q, h))


def ljung_box(result: AcfResult, h: int = DEFAULT_LAGS) -> TestReport:
    h = _check_h(result, h)
    n = result.n
    k = np.arange(1, h + 1)
    r = result.rho[1 : h + 1]
    q = n * (n + 2) * float(np.sum(r * r / (n - k)))
    return TestReport("ljung-box", q, h, chi2_sf(q, h))


def _moments(values) -> tuple[np.ndarray, float]:
    x = np.asarray(values, dtype=float)
    if x.size < 8:
        raise TooShortError(f"normality tests need at least 8 observations, got {x.size}")
    dev = x - x.mean()
    var = float(dev @ dev) / x.size
    if var <= (_DEGENERATE * np.abs(x).max()) ** 2:
        raise DegenerateError("normality test of a constant sample")
    return dev, var


def ks_test_normal(values) -> TestReport:
    """Kolmogorov-Smirnov distance to a Normal with the sample mean and std.

    The p-value uses the asymptotic Kolmogorov law with Stephens' small-sample
    correction; it ignores that the parameters were estimated (so it is
    conservative).
    """
    dev, _ = _moments(values)
    n = dev.size
    z = np.sort(dev) / dev.std(ddof=1)
    cdf = norm_cdf(z)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))
    sqrt_n = math.sqrt(n)
    p = kolmogorov_sf((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)
    return TestReport("kolmogorov-smirnov", d, 0, p)


def jarque_bera(values) -> TestReport:
    dev, var = _moments(values)
    n = dev.size
    skew = float(np.mean(dev**3)) / var**1.5
    kurt = float(np.mean(dev**4)) / var**2
    jb = n / 6.0 * (skew**2 + (kurt - 3.0) ** 2 / 4.0)
    return TestReport("jarque-bera", jb, 2, chi2_sf(jb, 2))


# --------------------------------------------------------------------------
# Reference processes

SIMULATION_START = YearMonth(1960, 1)


def _check_sim(n: int, sigma: float) -> None:
    if int(n) < 1:
        raise ParamError(f"n must be at least 1, got {n}")
    if not sigma > 0:
        raise ParamError(f"sigma must be positive, got {sigma}")


def simulate_white_noise(n: int, sigma: float = 1.0, seed: int = 0,
                         start: YearMonth = SIMULATION_START) -> MonthlySeries:
    _check_sim(n, sigma)
    eps = sigma * rng.standard_normal(n, seed)
    return MonthlySeries(start, eps, f"white-noise {rng.GENERATOR} seed={seed}")


def simulate_random_walk(n: int, sigma: float = 1.0, seed: int = 0,
                         start: YearMonth = SIMULATION_START) -> MonthlySeries:
    """y_0 = 0, y_t = y_{t-1} + eps_t; returns the n values y_0 .. y_{n-1}.

    The increments are the first ``n - 1`` draws of the white-noise stream
    for the same seed.
    """
    _check_sim(n, sigma)
    eps = sigma * rng.standard_normal(n - 1, seed)
    path = np.concatenate(([0.0], np.cumsum(eps)))
    return MonthlySeries(start, path, f"random-walk {rng.GENERATOR} seed={seed}")


def max_share(values) -> float:
    """Largest single-bin share of the classical periodogram's total power."""
    from .spectral import periodogram

    power = periodogram(values).power
    total = power.sum()
    if total <= 0:
        raise DegenerateError("periodogram has no power")
    return float(power.max() / total)


def white_noise_max_share_envelope(n: int, quantile: float = 0.99, n_sim: int = 500,
                                   seed: int = 0) -> float:
    """Monte Carlo quantile of :func:`max_share` for Gaussian white noise of length n."""
    shares = [max_share(rng.standard_normal(n, seed + i)) for i in range(n_sim)]
    return float(np.quantile(shares, quantile))
