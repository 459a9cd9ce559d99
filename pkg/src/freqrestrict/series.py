"""Builders for the concrete series used by examples, tests and the CLI."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .analytic import AnalyticFunction, antiderivative

# log of the smallest relative term we keep; also stays clear of underflow
_LOG_CUTOFF = -60.0
_LOG_FLOOR = -700.0


def exp_order(radius: float) -> int:
    """Truncation order for the exponential series on ``D(0, radius)``."""
    log_r = math.log(radius)
    peak = max(n * log_r - math.lgamma(n + 1) for n in range(int(radius) + 2))
    n = max(8, int(2 * radius))
    while n * log_r - math.lgamma(n + 1) > peak + _LOG_CUTOFF:
        if -math.lgamma(n + 2) < _LOG_FLOOR:
            break
        n += 1
    return n


def exp_coeffs(order: int) -> np.ndarray:
    return np.exp(-np.array([math.lgamma(n + 1) for n in range(order + 1)]))


def exp_series(radius: float = 8.0, center: float = 0.0, order: int | None = None) -> AnalyticFunction:
    """``exp(t)`` expanded about ``center`` (coefficients carry ``e^center``)."""
    order = exp_order(radius) if order is None else order
    return AnalyticFunction(center, radius, math.exp(center) * exp_coeffs(order))


def poly_times_exp(poly: Sequence[float], radius: float = 8.0, order: int | None = None) -> AnalyticFunction:
    """``p(t) e^t`` about 0, with ``poly`` ascending coefficients."""
    order = exp_order(radius) if order is None else order
    c = np.convolve(np.asarray(poly, dtype=float), exp_coeffs(order))[:order + 1]
    return AnalyticFunction(0.0, radius, c)


def integrate_times(f: AnalyticFunction, d: int) -> AnalyticFunction:
    """``d``-fold antiderivative with zero constants at the center."""
    for _ in range(d):
        f = antiderivative(f)
    return f


def planted_curve(poly: Sequence[float], d: int = 3, half_length: float = 1.0,
                  radius: float | None = None) -> AnalyticFunction:
    """Series ``phi`` about 0 with ``phi^(d) = p(t) e^t``.

    The radius defaults to ``2^(d+3) r``, enough for ``[-r, r]``.
    """
    radius = 2.0 ** (d + 3) * half_length if radius is None else radius
    return integrate_times(poly_times_exp(poly, radius), d)
