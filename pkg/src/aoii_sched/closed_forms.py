"""Closed-form steady-state quantities and Whittle indices under threshold policies.

Under threshold ``n`` the user stays idle while ``j < n`` and transmits
while ``j >= n``.  All polynomials in ``n`` are evaluated with Horner's
scheme; ``n`` may be a scalar or an integer array.
"""
from __future__ import annotations

import math
from enum import Enum
from typing import NamedTuple

import numpy as np

from .core import SourceParams

JMAX_CAP = 10**6


class Metric(str, Enum):
    AOII = "aoii"
    AOI = "aoi"


def _check_rho(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0) or np.any(rho > 1):
        raise ValueError("rho must lie in (0, 1]")
    return rho


def _out(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def truncation_index(n: int, rho: float, tail: float = 1e-14) -> int:
    """Smallest ladder truncation whose geometric tail mass is below ``tail``."""
    _check_rho(rho)
    if rho == 1.0:
        return n + 1
    J = n + math.ceil(math.log(tail) / math.log1p(-rho))
    if J > JMAX_CAP:
        raise ValueError(f"rho={rho} needs truncation {J} > cap {JMAX_CAP}")
    return J


def stationary_mass(n, rho, j):
    """Stationary probability of ladder state ``j`` under threshold ``n``."""
    rho = _check_rho(rho)
    n = np.asarray(n)
    j = np.asarray(j)
    base = rho / (n * rho + 1.0)
    # (1-rho)**0 == 1 also covers rho == 1 on the flat part
    excess = np.maximum(j - n, 0)
    with np.errstate(divide="ignore"):
        mass = base * np.power(1.0 - rho, excess)
    return _out(np.where(j < 0, 0.0, mass))


def stationary_pmf(n: int, rho: float, j_max: int) -> np.ndarray:
    """Stationary pmf on states ``0..j_max`` (tail beyond ``j_max`` omitted)."""
    return stationary_mass(n, rho, np.arange(j_max + 1))


def avg_aoii(n, params: SourceParams):
    """Average predicted AoII under threshold ``n``."""
    r = _check_rho(params.rho)
    n = np.asarray(n, dtype=float)
    c1 = (6.0 - r * r - 3.0 * r) / (6.0 * r * r)
    c0 = (1.0 - r) / r**3
    poly = ((n / 6.0 + 1.0 / (2.0 * r)) * n + c1) * n + c0
    return _out(params.d * params.p * r / (n * r + 1.0) * poly)


def avg_aoi(n, rho):
    """Average AoI under threshold ``n``."""
    r = _check_rho(rho)
    n = np.asarray(n, dtype=float)
    q = 1.0 - r
    poly = (0.5 * n + (0.5 + q / r)) * n + q / (r * r)
    return _out(r / (n * r + 1.0) * poly)


def avg_active(n, rho):
    """Long-run fraction of slots spent transmitting under threshold ``n``."""
    r = _check_rho(rho)
    return _out(1.0 / (np.asarray(n, dtype=float) * r + 1.0))


def whittle_aoii(n, params: SourceParams):
    """Whittle index of AoII ladder state ``n``."""
    r = _check_rho(params.rho)
    n = np.asarray(n, dtype=float)
    w = (((r / 3.0) * n + (1.0 + r / 2.0)) * n + (1.0 + r / 6.0 + 1.0 / r)) * n + 1.0 / r
    return _out(params.d * params.p * w)


def whittle_aoi(n, rho):
    """Whittle index of AoI ladder state ``n``: ``n (n+1) rho / 2 + n + 1``."""
    r = _check_rho(rho)
    n = np.asarray(n, dtype=float)
    return _out(((r / 2.0) * n + (r / 2.0 + 1.0)) * n + 1.0)


def average_cost(n, params: SourceParams, metric=Metric.AOII):
    if Metric(metric) is Metric.AOII:
        return avg_aoii(n, params)
    return avg_aoi(n, params.rho)


def whittle_index(n, params: SourceParams, metric=Metric.AOII):
    if Metric(metric) is Metric.AOII:
        return whittle_aoii(n, params)
    return whittle_aoi(n, params.rho)


def whittle_intersection(n, params: SourceParams, metric=Metric.AOII):
    """Penalty at which thresholds ``n`` and ``n+1`` have equal dual cost.

    Computed from the steady-state averages directly, without the index
    polynomial.
    """
    n = np.asarray(n)
    dcost = average_cost(n + 1, params, metric) - average_cost(n, params, metric)
    dactive = avg_active(n, params.rho) - avg_active(n + 1, params.rho)
    return _out(np.asarray(dcost) / np.asarray(dactive))


class IndexabilityReport(NamedTuple):
    indexable: bool
    first_violation: int | None


def check_indexability(params: SourceParams, n_max: int, metric=Metric.AOII) -> IndexabilityReport:
    """Check that the active fraction falls and the index rises strictly over ``0..n_max``.

    ``first_violation`` is the first ``n`` for which the step ``n -> n+1``
    breaks either monotonicity.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    ns = np.arange(n_max + 1)
    active = np.asarray(avg_active(ns, params.rho))
    index = np.asarray(whittle_index(ns, params, metric))
    bad = (np.diff(active) >= 0) | (np.diff(index) <= 0)
    if bad.any():
        return IndexabilityReport(False, int(np.argmax(bad)))
    return IndexabilityReport(True, None)
