"""Relative value iteration for the single-user dual problem.

The dual problem charges ``s + W a`` per slot, where ``s`` is the ladder
penalty and ``W`` the price of one transmission.  The ladder is truncated
at ``j_max``; the last state loops onto itself when idle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .closed_forms import Metric
from .core import SourceParams

PASSIVE, ACTIVE = 0, 1


class SolverError(RuntimeError):
    pass


class ConvergenceError(SolverError):
    def __init__(self, iterations, residual):
        super().__init__(f"RVIA did not converge in {iterations} iterations (span residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class TruncationError(SolverError):
    def __init__(self, j_max):
        super().__init__(f"passive action is optimal at the truncation boundary j_max={j_max}; enlarge j_max")
        self.j_max = j_max


class StructureError(SolverError):
    """Raised when an optimal policy is not of threshold form."""


@dataclass(frozen=True)
class DualProblem:
    params: SourceParams
    W: float
    metric: Metric = Metric.AOII
    j_max: int = 64

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric(self.metric))
        if self.j_max < 2:
            raise ValueError("j_max must be >= 2")
        if self.W < 0:
            raise ValueError("W must be nonnegative")

    def costs(self) -> np.ndarray:
        j = np.arange(self.j_max + 1, dtype=float)
        if self.metric is Metric.AOI:
            return j
        return self.params.d * self.params.p * j * (j + 1) / 2.0


@dataclass
class SolveResult:
    problem: DualProblem
    value: np.ndarray
    theta: float
    policy: np.ndarray
    iterations: int
    residual: float
    delta: np.ndarray = field(repr=False)


def _bellman(V, b, W, rho):
    nxt = np.empty_like(V)
    nxt[:-1] = V[1:]
    nxt[-1] = V[-1]
    passive = b + nxt
    active = b + W + rho * V[0] + (1.0 - rho) * nxt
    return passive, active


def rvia_solve(prob: DualProblem, eps: float = 1e-10, max_iter: int = 10**6, v0=None,
               damping: float = 0.5) -> SolveResult:
    """Solve the truncated dual problem by relative value iteration.

    Each sweep applies ``V <- (1 - damping) V + damping T V`` (the
    aperiodicity transform, needed when ``rho = 1`` makes the chain
    periodic) and renormalises so that ``V[0] = 0``.  Stops when the span
    of ``T V - V`` drops below ``eps * max(1, theta)``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    b = prob.costs()
    rho = prob.params.rho
    W = float(prob.W)
    V = np.zeros_like(b) if v0 is None else np.array(v0, dtype=float)
    if V.shape != b.shape:
        raise ValueError("v0 has the wrong length")
    V -= V[0]

    span = math.inf
    for it in range(1, max_iter + 1):
        passive, active = _bellman(V, b, W, rho)
        diff = np.minimum(passive, active) - V
        lo, hi = diff.min(), diff.max()
        span = hi - lo
        V += damping * diff
        V -= V[0]
        if span < eps * max(1.0, abs(hi)):
            break
    else:
        raise ConvergenceError(max_iter, span)

    theta = 0.5 * (lo + hi)
    passive, active = _bellman(V, b, W, rho)
    delta = active - passive
    # ties go to the passive action
    policy = np.where(delta < 0, ACTIVE, PASSIVE)
    if delta[-1] > 0:
        raise TruncationError(prob.j_max)
    return SolveResult(prob, V, float(theta), policy, it, float(span), delta)


def default_j_max(params: SourceParams, W: float, metric=Metric.AOII) -> int:
    """Truncation guess: four times a rough threshold scale plus a geometric tail of mass < 1e-14."""
    if Metric(metric) is Metric.AOI:
        scale = math.sqrt(2.0 * W / params.rho)
    else:
        dp = params.d * params.p
        scale = (3.0 * W / (dp * params.rho)) ** (1.0 / 3.0) if dp > 0 else 1.0
    scale = max(scale, 1.0 / params.rho, 1.0)
    tail = 1 if params.rho == 1.0 else math.ceil(math.log(1e-14) / math.log1p(-params.rho))
    return max(16, 4 * math.ceil(scale)) + tail


def solve_dual(params: SourceParams, W: float, metric=Metric.AOII, j_max=None, eps=1e-10,
               max_iter=10**6, v0=None, max_j=2**16) -> SolveResult:
    """Run :func:`rvia_solve`, doubling ``j_max`` until the boundary lies in the active region."""
    J = default_j_max(params, W, metric) if j_max is None else int(j_max)
    while True:
        start = None
        if v0 is not None:
            start = np.resize(np.asarray(v0, dtype=float), J + 1)
            start[len(v0):] = v0[-1]
        try:
            return rvia_solve(DualProblem(params, W, metric, J), eps, max_iter, start)
        except TruncationError:
            if 2 * J > max_j:
                raise
            J *= 2


def extract_threshold(result) -> int:
    """Return ``n`` such that the policy is passive below ``n`` and active from ``n`` on."""
    policy = np.asarray(getattr(result, "policy", result))
    active = np.flatnonzero(policy == ACTIVE)
    if active.size == 0:
        raise StructureError("policy is never active")
    n = int(active[0])
    if not np.all(policy[n:] == ACTIVE):
        bad = n + int(np.argmax(policy[n:] != ACTIVE))
        raise StructureError(f"policy is not threshold form: active at {n} but passive at {bad}")
    return n


def delta_v(result: SolveResult, j: int) -> float:
    """Active-minus-passive value gap ``rho (W/rho + V(0) - V(j+1))`` at state ``j``."""
    V = result.value
    if not 0 <= j < len(V) - 1:
        raise ValueError(f"need 0 <= j < j_max, got {j}")
    rho = result.problem.params.rho
    return rho * (result.problem.W / rho + V[0] - V[j + 1])


def threshold_boundary(params: SourceParams, n: int, metric=Metric.AOII, rtol: float = 1e-7,
                       max_steps: int = 200) -> float:
    """Penalty at which the optimal threshold switches from ``<= n`` to ``>= n+1``, by bisection.

    The upper bracket end is found by doubling from 1, so the search never
    consults the closed-form index.
    """
    cache = {}

    def thr(W):
        res = solve_dual(params, W, metric, v0=cache.get("v"))
        cache["v"] = res.value
        return extract_threshold(res)

    lo, hi = 0.0, 1.0
    if thr(lo) > n:
        raise SolverError(f"bracket failure: threshold at W=0 already exceeds {n}")
    steps = 0
    while thr(hi) <= n:
        lo, hi = hi, 2.0 * hi
        steps += 1
        if steps > max_steps:
            raise SolverError(f"bracket failure: no switch found in [0, {hi}]")
    for _ in range(max_steps):
        if hi - lo <= rtol * max(1.0, hi):
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        if thr(mid) <= n:
            lo = mid
        else:
            hi = mid
    raise SolverError(f"bisection did not close bracket [{lo}, {hi}] in {max_steps} steps")
