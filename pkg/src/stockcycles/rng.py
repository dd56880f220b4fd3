"""Seeded Gaussian variates for the simulators.

Uniforms come from the Philox-4x64-10 counter-based generator with
``key=seed`` and a zero counter, so the stream is defined by the seed alone
and can be regenerated outside numpy. Raw 64-bit outputs are mapped to
(0, 1] as ``((u >> 11) + 1) * 2**-53`` and paired through Box-Muller.
"""

import numpy as np

GENERATOR = "philox4x64-10"
TRANSFORM = "box-muller"

_TWO_POW_M53 = 2.0**-53


def uniforms(n: int, seed: int) -> np.ndarray:
    """``n`` doubles in (0, 1] from the counter-based stream for ``seed``."""
    bitgen = np.random.Philox(key=int(seed), counter=0)
    raw = bitgen.random_raw(int(n))
    return ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_POW_M53


def standard_normal(n: int, seed: int) -> np.ndarray:
    n = int(n)
    m = (n + 1) // 2
    u = uniforms(2 * m, seed)
    u1, u2 = u[0::2], u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.empty(2 * m)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:n]


def describe(seed: int) -> dict:
    return {"generator": GENERATOR, "transform": TRANSFORM, "key": int(seed), "counter": 0}
