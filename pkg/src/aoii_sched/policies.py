"""Index-based multi-user schedulers.

Every kind except the two blind baselines ranks users by a per-state index
computed from the predicted ladder state (slots since last delivery) and
gives the ``M`` channels to the top ``M`` users.  Functions here work on
one population (shape ``(N,)``) or on a batch of replications (shape
``(R, N)``); params broadcast along the last axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .closed_forms import whittle_aoi, whittle_aoii


class PolicyKind(str, Enum):
    WIP_AOII = "WIP_AOII"
    WIP_AOI = "WIP_AOI"
    WWIP_AOI = "WWIP_AOI"
    RANDOM = "RANDOM"
    ROUND_ROBIN = "ROUND_ROBIN"
    GREEDY_AOII = "GREEDY_AOII"

    @property
    def uses_index(self) -> bool:
        return self not in (PolicyKind.RANDOM, PolicyKind.ROUND_ROBIN)


@dataclass(frozen=True)
class Population:
    """Column view of a list of :class:`SourceParams`."""

    p: np.ndarray
    d: np.ndarray
    rho: np.ndarray

    @classmethod
    def from_params(cls, params) -> "Population":
        params = list(params)
        if not params:
            raise ValueError("population must have at least one user")
        return cls(
            np.array([q.p for q in params], dtype=float),
            np.array([q.d for q in params], dtype=float),
            np.array([q.rho for q in params], dtype=float),
        )

    def __len__(self):
        return len(self.p)


@dataclass
class IndexTable:
    values: np.ndarray
    states: np.ndarray
    population: Population


def index_values(kind: PolicyKind, states, pop: Population) -> np.ndarray:
    """Raw index array for ``states`` (last axis = users)."""
    kind = PolicyKind(kind)
    j = np.asarray(states)
    if kind is PolicyKind.WIP_AOII:
        # whittle_aoii only reads .p/.d/.rho, so array columns broadcast through it
        return np.asarray(whittle_aoii(j, pop), dtype=float)
    if kind is PolicyKind.WIP_AOI:
        return np.asarray(whittle_aoi(j, pop.rho), dtype=float)
    if kind is PolicyKind.WWIP_AOI:
        return pop.p * pop.d * np.asarray(whittle_aoi(j, pop.rho), dtype=float)
    if kind is PolicyKind.GREEDY_AOII:
        return pop.d * pop.p * (j * (j + 1)) / 2.0
    return np.zeros(j.shape, dtype=float)


def compute_indices(kind: PolicyKind, states, params) -> IndexTable:
    """Index table for one population; ``params`` is a sequence of SourceParams or a Population."""
    pop = params if isinstance(params, Population) else Population.from_params(params)
    states = np.asarray(states, dtype=np.int64)
    if states.shape[-1] != len(pop):
        raise ValueError(f"{states.shape[-1]} states for {len(pop)} users")
    if np.any(states < 0):
        raise ValueError("state indices must be nonnegative")
    return IndexTable(index_values(kind, states, pop), states, pop)


def top_m(values, M: int, tie_rule: str = "lowest_id", rng=None, keys=None) -> np.ndarray:
    """Indices of the ``M`` largest values along the last axis, sorted by rank.

    ``lowest_id`` breaks ties toward the smaller user id; ``seeded_random``
    breaks them with a random permutation given by uniform ``keys`` (drawn
    from ``rng`` when not supplied).
    """
    values = np.asarray(values, dtype=float)
    N = values.shape[-1]
    if M < 1:
        raise ValueError("M must be >= 1")
    M = min(M, N)
    if tie_rule == "lowest_id":
        order = np.argsort(-values, axis=-1, kind="stable")
    elif tie_rule == "seeded_random":
        if keys is None:
            if rng is None:
                raise ValueError("seeded_random tie rule needs an rng")
            keys = rng.random(values.shape)
        perm = np.argsort(keys, axis=-1)
        shuffled = np.take_along_axis(values, perm, axis=-1)
        order = np.take_along_axis(perm, np.argsort(-shuffled, axis=-1, kind="stable"), axis=-1)
    else:
        raise ValueError(f"unknown tie rule {tie_rule!r}")
    return order[..., :M]


def select_top_m(table, M: int, tie_rule: str = "lowest_id", rng=None) -> np.ndarray:
    """Sorted user ids that receive a channel this slot."""
    values = table.values if isinstance(table, IndexTable) else table
    return np.sort(top_m(values, M, tie_rule, rng), axis=-1)


def round_robin(N: int, M: int, cursor: int = 0):
    """Next ``M`` users in cyclic order from ``cursor``; returns ``(users, new_cursor)``."""
    if M < 1:
        raise ValueError("M must be >= 1")
    M = min(M, N)
    users = (cursor + np.arange(M)) % N
    return np.sort(users), int((cursor + M) % N)


def random_users(N: int, M: int, rng=None, keys=None) -> np.ndarray:
    """``M`` distinct users drawn uniformly at random (ranked by uniform ``keys`` if given)."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if keys is None:
        keys = rng.random(N)
    return np.sort(np.argsort(keys, axis=-1)[..., : min(M, N)], axis=-1)
