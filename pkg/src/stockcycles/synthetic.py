"""Synthetic series with known harmonic structure.

Used by the test-suite and by ``stockcycles simulate`` to produce inputs
whose answers are known in advance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .ingest import MonthlySeries, YearMonth

# Five periods (months) found for the US market, 1957-2022.
US_PERIODS = (87.3, 98.25, 112.3, 196.5, 262.0)
US_AMPLITUDES = (0.9, 1.5, 1.0, 1.3, 1.1)
US_START = YearMonth(1957, 1)
US_LENGTH = 786

# Quintic trend in the scaled time s in [-1, 1]; coefficient k multiplies s**k.
TREND_COEFFS = (10.0, 6.0, -2.0, 3.0, 1.0, -1.5)


@dataclass(frozen=True)
class Fixture:
    series: MonthlySeries
    periods: tuple
    amplitudes: tuple
    phases: tuple
    noise_sigma: float
    trend: np.ndarray
    cycles: np.ndarray  # harmonic sum without noise or trend

    @property
    def freqs(self) -> np.ndarray:
        return 1.0 / np.asarray(self.periods)


def _trend(n: int) -> np.ndarray:
    s = np.linspace(-1.0, 1.0, n)
    return np.polynomial.polynomial.polyval(s, TREND_COEFFS)


def five_tone(seed: int, n: int = US_LENGTH, noise_fraction: float = 0.1,
              periods=US_PERIODS, amplitudes=US_AMPLITUDES, phases=None,
              start: YearMonth = US_START) -> Fixture:
    """Quintic trend + cosines at ``periods`` + Gaussian noise.

    Noise sigma is ``noise_fraction`` times the smallest amplitude. Phases
    are drawn uniformly from the seed's stream unless given.
    """
    t = np.arange(n, dtype=float)
    if phases is None:
        phases = tuple(2.0 * np.pi * rng.uniforms(len(periods), seed + 1_000_003))
    cycles = np.zeros(n)
    for p, a, ph in zip(periods, amplitudes, phases):
        cycles += a * np.cos(2.0 * np.pi * t / p + ph)
    sigma = noise_fraction * min(amplitudes)
    trend = _trend(n)
    values = trend + cycles + sigma * rng.standard_normal(n, seed)
    return Fixture(MonthlySeries(start, values, f"five-tone seed={seed}"), tuple(periods),
                   tuple(amplitudes), tuple(float(p) for p in phases), sigma, trend, cycles)


def downturn(seed: int, cutoff: YearMonth = YearMonth(2008, 7), n: int = US_LENGTH,
             noise_fraction: float = 0.1, jitter: float = np.pi / 8) -> Fixture:
    """Five-tone series whose cycles crest at ``cutoff`` and fall afterwards.

    Each harmonic's phase puts its maximum at the cutoff month, perturbed by
    a uniform jitter of +/- ``jitter`` radians, so the post-cutoff year is a
    slide into a trough that the pre-cutoff data already announces.
    """
    t_cut = cutoff - US_START
    u = rng.uniforms(len(US_PERIODS), seed + 2_000_003)
    phases = tuple(
        -2.0 * np.pi * t_cut / p + jitter * (2.0 * ui - 1.0) for p, ui in zip(US_PERIODS, u)
    )
    return five_tone(seed, n=n, noise_fraction=noise_fraction, phases=phases)
