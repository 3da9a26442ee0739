"""Numerical oracles for the closed forms and the property suites built on them.

Each oracle computes its quantity along a different route from the one it
checks: balance equations of the truncated chain, truncated series,
relative value iteration with bisection on the transmission price.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from . import closed_forms as cf
from .closed_forms import Metric
from .core import SourceParams
from .mdp import extract_threshold, solve_dual, threshold_boundary

RTOL = 1e-9
ATOL = 1e-12

STATIONARY_N = (0, 1, 2, 5, 10, 25)
STATIONARY_RHO = (0.1, 0.3, 0.5, 0.7, 0.9, 1.0)
GRID_RHO = tuple(round(0.1 * i, 1) for i in range(1, 11))
GRID_N = tuple(range(51))
GRID_DP = ((1.0, 0.5), (5.0, 0.1), (5.0, 0.9), (100.0, 0.5))


@dataclass(frozen=True)
class Check:
    name: str
    max_error: float
    tol: float
    passed: bool

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: max error {self.max_error:.3e} (tol {self.tol:.1e})"


def rel_err(a, b, atol=ATOL):
    """Relative error with an absolute floor, so zeros compare cleanly."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.abs(a - b) / np.maximum(np.abs(b), atol / RTOL)


# -- stationary distribution -------------------------------------------------

def transition_matrix(n: int, rho: float, J: int) -> np.ndarray:
    """Ladder transitions on ``0..J`` under threshold ``n``; mass leaving past ``J`` is dropped."""
    P = np.zeros((J + 1, J + 1))
    for i in range(J + 1):
        stay = 1.0 if i < n else 1.0 - rho
        if i >= n:
            P[i, 0] += rho
        if i < J:
            P[i, i + 1] += stay
    return P


def balance_residual(n: int, rho: float):
    """Worst pointwise balance residual and normalisation error of the closed-form pmf."""
    J = cf.truncation_index(n, rho)
    u = cf.stationary_pmf(n, rho, J)
    inflow = u @ transition_matrix(n, rho, J)
    tail = (1.0 - rho) ** (J - n + 1) / (n * rho + 1.0)
    return float(np.max(np.abs(inflow - u))), abs(u.sum() + tail - 1.0)


def solve_balance(n: int, rho: float, J: int) -> np.ndarray:
    """Stationary pmf of the truncated chain by a direct linear solve.

    The state ``J`` is made to reset like an active state so the truncated
    matrix stays stochastic.
    """
    P = transition_matrix(n, rho, J)
    P[J, 0] += 1.0 - P[J].sum()
    A = P.T - np.eye(J + 1)
    A[-1, :] = 1.0
    rhs = np.zeros(J + 1)
    rhs[-1] = 1.0
    return np.linalg.solve(A, rhs)


# -- series oracles ----------------------------------------------------------

def series_average(n: int, params: SourceParams, metric=Metric.AOII) -> float:
    """``sum_j ladder(j) u^n(j)`` over the truncated ladder."""
    J = cf.truncation_index(n, params.rho)
    j = np.arange(J + 1, dtype=float)
    ladder = j if Metric(metric) is Metric.AOI else params.d * params.p * j * (j + 1) / 2.0
    u = cf.stationary_pmf(n, params.rho, J)
    return float(np.sum(ladder * u))


def series_active(n: int, rho: float) -> float:
    J = cf.truncation_index(n, rho)
    return float(cf.stationary_pmf(n, rho, J)[n:].sum())


def series_intersection(n: int, params: SourceParams, metric=Metric.AOII) -> float:
    """Whittle index from the series oracles alone."""
    ds = series_average(n + 1, params, metric) - series_average(n, params, metric)
    da = series_active(n, params.rho) - series_active(n + 1, params.rho)
    return ds / da


def grid_params():
    for (d, p), rho in product(GRID_DP, GRID_RHO):
        yield SourceParams(p=p, d=d, rho=rho)


# -- suites ------------------------------------------------------------------

def check_stationary():
    bal, norm = 0.0, 0.0
    for n, rho in product(STATIONARY_N, STATIONARY_RHO):
        b, s = balance_residual(n, rho)
        bal, norm = max(bal, b), max(norm, s)
    return [Check("stationary balance residual", bal, 1e-12, bal < 1e-12),
            Check("stationary normalisation", norm, 1e-12, norm < 1e-12)]


def check_series():
    err_s = err_a = err_aoi = 0.0
    for params in grid_params():
        for n in GRID_N:
            err_s = max(err_s, float(rel_err(cf.avg_aoii(n, params), series_average(n, params))))
            err_aoi = max(err_aoi, float(rel_err(cf.avg_aoi(n, params.rho),
                                                 series_average(n, params, Metric.AOI))))
            err_a = max(err_a, float(rel_err(cf.avg_active(n, params.rho), series_active(n, params.rho))))
    return [Check("average AoII vs series", err_s, RTOL, err_s <= RTOL),
            Check("average AoI vs series", err_aoi, RTOL, err_aoi <= RTOL),
            Check("average active time vs series", err_a, RTOL, err_a <= RTOL)]


def check_whittle():
    ns = np.array(GRID_N)
    err_ii = err_i = 0.0
    mono = True
    for params in grid_params():
        w_ii = np.asarray(cf.whittle_aoii(ns, params))
        w_i = np.asarray(cf.whittle_aoi(ns, params.rho))
        err_ii = max(err_ii, float(np.max(rel_err(w_ii, cf.whittle_intersection(ns, params, Metric.AOII)))))
        err_i = max(err_i, float(np.max(rel_err(w_i, cf.whittle_intersection(ns, params, Metric.AOI)))))
        mono &= bool(np.all(np.diff(w_ii) > 0) and np.all(np.diff(w_i) > 0))
    ref = SourceParams(p=0.8, d=5.0, rho=0.5)
    spots = [(cf.whittle_aoii(0, ref), 8.0), (cf.whittle_aoii(1, ref), 26.0), (cf.whittle_aoi(0, 0.5), 1.0)]
    spot = max(float(rel_err(a, b)) for a, b in spots)
    return [Check("AoII index vs intersection", err_ii, RTOL, err_ii <= RTOL),
            Check("AoI index vs intersection", err_i, RTOL, err_i <= RTOL),
            Check("index spot values", spot, RTOL, spot <= RTOL),
            Check("indices strictly increasing", 0.0 if mono else 1.0, 0.0, mono)]


RVIA_GRID = tuple(SourceParams(p=p, d=d, rho=rho)
                  for p, d, rho in product((0.2, 0.5, 0.9), (1.0, 5.0, 20.0), (0.3, 0.6, 1.0)))


def check_rvia(ns=(0, 1, 2), tol=1e-3, grid=RVIA_GRID):
    err = {Metric.AOII: 0.0, Metric.AOI: 0.0}
    for params, n, metric in product(grid, ns, (Metric.AOII, Metric.AOI)):
        W = threshold_boundary(params, n, metric)
        err[metric] = max(err[metric], float(rel_err(W, cf.whittle_index(n, params, metric))))
    return [Check(f"RVIA switch point vs {m.value} index", e, tol, e <= tol) for m, e in err.items()]


def check_threshold_structure(W_grid=None, grid=RVIA_GRID[::3]):
    """Every RVIA solution is a threshold policy, nondecreasing in W."""
    W_grid = np.logspace(-1, 3, 40) if W_grid is None else W_grid
    ok = True
    for params in grid:
        prev = -1
        for W in W_grid:
            try:
                n = extract_threshold(solve_dual(params, float(W)))
            except Exception:
                ok = False
                break
            ok &= n >= prev
            prev = n
    return [Check("RVIA threshold structure and monotonicity", 0.0 if ok else 1.0, 0.0, ok)]


def check_indexability(draws=100, n_max=200, seed=0):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(draws):
        params = SourceParams(p=rng.uniform(0.01, 1.0), d=rng.uniform(0.1, 100.0), rho=rng.uniform(0.01, 1.0))
        bad += not cf.check_indexability(params, n_max).indexable
    return [Check(f"indexability over {draws} random draws", float(bad), 0.0, bad == 0)]


SUITES = {
    "stationary": check_stationary,
    "series": check_series,
    "whittle": check_whittle,
    "rvia": check_rvia,
    "threshold": check_threshold_structure,
    "indexability": check_indexability,
}


def run_suite(name: str):
    if name == "all":
        return [c for fn in SUITES.values() for c in fn()]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
    return SUITES[name]()
