"""Spectral analysis of monthly stock-index series.

Deflate and detrend an index, test it against the random-walk model,
estimate periodograms (classical, Welch, Lomb-Scargle) and forecast from
the strongest harmonics.
"""

__version__ = "0.1.0"

# the ``detrend`` function stays in its submodule so it does not shadow it
from .detrend import PolyTrend, evaluate_trend, fit_polynomial
from .errors import StockCyclesError
from .harmonics import (
    ForecastConfig,
    ForecastResult,
    HarmonicModel,
    fit_harmonics,
    forecast,
    reconstruct,
    top_k_frequencies,
)
from .ingest import (
    MonthlySeries,
    SampledSeries,
    ShockCalendar,
    YearMonth,
    builtin_calendar,
    deflate,
    excise,
    parse_csv,
    serialize_csv,
)
from .metrics import ScoreCard, chi_squared, mae, rmse, score, smape
from .spectral import (
    SpectralEstimate,
    dft,
    lomb_scargle,
    parseval_check,
    periodogram,
    scaled_periodogram,
    welch,
)
from .stats import (
    acf,
    box_pierce,
    first_differences,
    jarque_bera,
    ks_test_normal,
    ljung_box,
    simulate_random_walk,
    simulate_white_noise,
)
