"""Accuracy measures for fitted and forecast values.

``Y`` is the observed series and ``E`` the model (expected) values.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Mapping, Optional

import numpy as np

from .errors import DivisionByNearZeroError, ParamError

NEAR_ZERO = 1e-12


def _pair(actual, expected) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(actual, dtype=float).ravel()
    e = np.asarray(expected, dtype=float).ravel()
    if y.size != e.size:
        raise ParamError(f"length mismatch: {y.size} observed vs {e.size} expected")
    if y.size == 0:
        raise ParamError("need at least one pair")
    return y, e


def chi_squared(actual, expected) -> tuple[float, int]:
    """Pearson statistic ``sum (Y - E)^2 / E`` with ``n - 1`` degrees of freedom.

    Taken literally: on a detrended scale E can be negative, and so can the
    statistic.
    """
    y, e = _pair(actual, expected)
    bad = np.flatnonzero(np.abs(e) < NEAR_ZERO)
    if bad.size:
        raise DivisionByNearZeroError(
            f"{bad.size} expected value(s) within {NEAR_ZERO:g} of zero", indices=bad.tolist()
        )
    return float(np.sum((y - e) ** 2 / e)), y.size - 1


def smape(actual, expected, factor_two: bool = False) -> float:
    """Mean of ``|Y - E| / (|Y| + |E|)``, in [0, 1].

    Pairs with ``|Y| + |E| == 0`` contribute zero. ``factor_two=True`` uses
    the more common ``(|Y| + |E|) / 2`` denominator (range [0, 2]).
    """
    y, e = _pair(actual, expected)
    denom = np.abs(y) + np.abs(e)
    if factor_two:
        denom = denom / 2.0
    num = np.abs(y - e)
    ratio = np.divide(num, denom, out=np.zeros_like(num), where=denom > 0)
    return float(ratio.mean())


def mae(actual, expected) -> float:
    y, e = _pair(actual, expected)
    return float(np.mean(np.abs(y - e)))


def rmse(actual, expected) -> float:
    y, e = _pair(actual, expected)
    d = np.abs(y - e)
    top = float(d.max())
    if top == 0.0 or not math.isfinite(top):
        return top
    # scaled so tiny or huge errors neither underflow nor overflow when squared
    return top * math.sqrt(float(np.mean((d / top) ** 2)))


@dataclass(frozen=True)
class ScoreCard:
    chi2: Optional[float]
    chi2_dof: int
    smape: float
    mae: float
    rmse: float
    n: int

    @property
    def smape_percent(self) -> float:
        return 100.0 * self.smape

    def to_dict(self) -> dict:
        d = asdict(self)
        d["smape_percent"] = self.smape_percent
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def score(actual, expected) -> ScoreCard:
    """All four measures; ``chi2`` is None when some expected value is ~0."""
    y, e = _pair(actual, expected)
    try:
        chi2, dof = chi_squared(y, e)
    except DivisionByNearZeroError:
        chi2, dof = None, y.size - 1
    return ScoreCard(chi2, dof, smape(y, e), mae(y, e), rmse(y, e), y.size)


def format_table(cards: Mapping[str, ScoreCard], title: str = "") -> str:
    """Plain-text table with one column per named score card."""
    names = list(cards)
    rows = [
        ("Pearson chi squared",
         [("n/a" if c.chi2 is None else f"{c.chi2:.0f}") + f" (dof: {c.chi2_dof})" for c in cards.values()]),
        ("sMAPE", [f"{c.smape_percent:.0f}%" for c in cards.values()]),
        ("MAE", [f"{c.mae:.2f}" for c in cards.values()]),
        ("RMSE", [f"{c.rmse:.2f}" for c in cards.values()]),
    ]
    first = max(len(r[0]) for r in rows)
    widths = [max(len(name), *(len(r[1][i]) for r in rows)) for i, name in enumerate(names)]
    lines = [title] if title else []
    lines.append(" " * first + "  " + "  ".join(n.rjust(w) for n, w in zip(names, widths)))
    for label, cells in rows:
        lines.append(label.ljust(first) + "  " + "  ".join(c.rjust(w) for c, w in zip(cells, widths)))
    return "\n".join(lines) + "\n"
