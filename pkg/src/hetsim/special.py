"""Special functions for the ergodic-rate machinery of the small-cell links.

A Rayleigh-faded link with mean SINR g has ergodic rate
``exp(1/g) E1(1/g) / ln 2`` bit/s/Hz; the power control inverts this map.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import exp1

LN2 = math.log(2.0)


def exp_integral_e1(z: float) -> float:
    """Exponential integral E1(z) = int_z^inf exp(-t)/t dt, z > 0."""
    if z <= 0:
        raise ValueError(f"E1 requires z > 0, got {z}")
    return float(exp1(z))


def _e1_scaled(z: float) -> float:
    """exp(z) * E1(z) without overflow; asymptotic tail for large z."""
    if z > 50.0:
        zi = 1.0 / z
        # truncated asymptotic series 1/z * (1 - 1/z + 2/z^2 - 6/z^3 + 24/z^4)
        return zi * (1 - zi * (1 - 2 * zi * (1 - 3 * zi * (1 - 4 * zi))))
    return math.exp(z) * exp_integral_e1(z)


def ergodic_rate_of_sinr(mean_sinr: float) -> float:
    """Ergodic rate (bit/s/Hz) of a Rayleigh link with the given mean SINR."""
    if mean_sinr < 0:
        raise ValueError("mean SINR must be nonnegative")
    if mean_sinr == 0:
        return 0.0
    return _e1_scaled(1.0 / mean_sinr) / LN2


def invert_ergodic_rate(rate_bps_hz: float) -> float:
    """Mean SINR needed for a Rayleigh link to sustain the given ergodic rate.

    The forward map is strictly increasing through the origin, so the root is
    unique; solved by bracketed root finding to ~1e-12 relative.
    """
    if rate_bps_hz <= 0:
        if rate_bps_hz == 0:
            return 0.0
        raise ValueError("rate must be nonnegative")
    f = lambda g: _e1_scaled(1.0 / g) - rate_bps_hz * LN2
    lo, hi = 1e-12, 1e12
    while f(hi) < 0:
        hi *= 1e3
        if hi > 1e300:
            raise ArithmeticError("ergodic-rate inversion bracket blew up")
    return float(brentq(f, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=400))


def sinr_of_rate(rate_bps_hz) -> np.ndarray | float:
    """Deterministic SINR target for a rate target: 2^r - 1."""
    return 2.0 ** np.asarray(rate_bps_hz, dtype=float) - 1.0
