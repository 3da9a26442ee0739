"""Source/channel model and AoII state ladders.

A user is a birth-chain source (one step of size ``d`` forward with
probability ``p`` per slot) observed through a channel that delivers a
pulled update with probability ``rho``.  Every quantity the scheduler
tracks is a function of a single integer ``j``: the number of slots since
the last successful delivery.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np


@dataclass(frozen=True)
class SourceParams:
    """Per-user triple: source jump probability, state spacing, channel success probability."""

    p: float
    d: float
    rho: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not self.d > 0:
            raise ValueError(f"d must be positive, got {self.d}")
        if not 0.0 < self.rho <= 1.0:
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")


@dataclass(frozen=True)
class SlotOutcome:
    scheduled: bool
    channel_success: bool = False
    source_jump: bool = False

    @property
    def delivered(self) -> bool:
        # a success draw only counts when the user actually transmitted
        return self.scheduled and self.channel_success


def predicted_aoii(j, params: SourceParams):
    """Expected AoII after ``j`` slots without a delivery: ``d p j (j+1) / 2``.

    Accepts a scalar or an integer array for ``j``.
    """
    j = np.asarray(j)
    if np.any(j < 0):
        raise ValueError("state index must be nonnegative")
    out = params.d * params.p * (j * (j + 1)) / 2.0
    return float(out) if out.ndim == 0 else out


def aoi_value(j):
    """AoI ladder value ``c^j = j``."""
    return j


def empirical_aoii(k, d: float):
    """Penalty of the empirical chain at index ``k``: ``d k (k+1) / 2``."""
    k = np.asarray(k)
    out = d * (k * (k + 1)) / 2.0
    return float(out) if out.ndim == 0 else out


def gap_pmf(k: int, elapsed: int, p: float) -> float:
    """Probability that the source has moved ``elapsed - k`` states after ``elapsed`` slots.

    The source-monitor gap is Binomial(elapsed, p); ``k`` counts the idle slots.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if elapsed < 0 or not 0 <= k <= elapsed:
        raise ValueError(f"need 0 <= k <= elapsed, got k={k}, elapsed={elapsed}")
    gap = elapsed - k
    return comb(elapsed, k) * p**gap * (1.0 - p) ** k


def step_predicted(j: int, outcome: SlotOutcome) -> int:
    """Predicted-AoII ladder transition: reset on delivery, otherwise advance one step."""
    return 0 if outcome.delivered else j + 1


def step_empirical(j: int, outcome: SlotOutcome) -> int:
    """Empirical-AoII ladder transition: reset on delivery, advance only when the source jumps."""
    if outcome.delivered:
        return 0
    return j + 1 if outcome.source_jump else j


def simulate_true_source(params: SourceParams, horizon: int, rng_seed=None, n_paths=None):
    """Exact cumulative mismatch ``sum_u d (X(u) - X_hat)`` of the birth chain with no deliveries.

    Offset ``j`` of the result holds the AoII ``j`` slots after the monitor
    last synchronised.  With ``n_paths`` the result has shape
    ``(n_paths, horizon)``; otherwise it is one path of length ``horizon``.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng = np.random.default_rng(rng_seed)
    rows = 1 if n_paths is None else int(n_paths)
    jumps = rng.random((rows, horizon - 1)) < params.p
    gap = np.zeros((rows, horizon), dtype=np.int64)
    np.cumsum(jumps, axis=1, out=gap[:, 1:])
    aoii = params.d * np.cumsum(gap, axis=1, dtype=np.float64)
    return aoii[0] if n_paths is None else aoii
