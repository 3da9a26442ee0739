"""Multi-user discrete-time simulation of index scheduling.

Slot order: indices from predicted states, choose ``M`` users, draw
channel and source randomness, update both ladders, then charge the
post-transition empirical penalty.  Replications of one configuration are
run as a batch with leading axis ``R``.

Randomness comes from per-user streams keyed on ``(replication seed, user
id, purpose)``.  With common random numbers every policy consumes the same
channel and source draws; without, the policy kind is mixed into the key.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .closed_forms import stationary_pmf, truncation_index
from .core import SourceParams
from .policies import PolicyKind, Population, index_values

CHANNEL, SOURCE, POLICY = 0, 1, 2
_KIND_CODE = {k: i for i, k in enumerate(PolicyKind)}
CHUNK = 2048


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class SimConfig:
    """One experiment: user classes, channel budget, horizon and seed.

    Give either ``M`` or ``alpha`` (then ``M = round(alpha N)``).  A
    ``warmup`` of None means 10% of the horizon.
    """

    classes: list
    N: int
    M: int | None = None
    alpha: float | None = None
    horizon: int = 100_000
    warmup: int | None = None
    seed: int = 0
    common_random_numbers: bool = True
    tie_rule: str = "lowest_id"

    def __post_init__(self):
        self.classes = [(c if isinstance(c, SourceParams) else SourceParams(*c), float(w))
                        for c, w in self.classes]
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    def problems(self):
        out = []
        if not self.classes:
            out.append("at least one class is required")
        elif not math.isclose(sum(w for _, w in self.classes), 1.0, abs_tol=1e-9):
            out.append(f"class proportions sum to {sum(w for _, w in self.classes)}, not 1")
        if any(w < 0 for _, w in self.classes):
            out.append("class proportions must be nonnegative")
        if self.N < 1:
            out.append(f"N must be >= 1, got {self.N}")
        if (self.M is None) == (self.alpha is None):
            out.append("exactly one of M and alpha must be given")
        elif not 1 <= self.channels <= max(self.N, 1):
            out.append(f"need 1 <= M <= N, got M={self.channels}, N={self.N}")
        if self.horizon < 1:
            out.append(f"horizon must be >= 1, got {self.horizon}")
        if not 0 <= self.warmup_slots < self.horizon:
            out.append(f"need 0 <= warmup < horizon, got warmup={self.warmup_slots}")
        if self.tie_rule not in ("lowest_id", "seeded_random"):
            out.append(f"unknown tie rule {self.tie_rule!r}")
        return out

    @property
    def channels(self) -> int:
        if self.M is not None:
            return int(self.M)
        # round half away from zero so alpha=0.5, N=odd is not banker-rounded
        return int(math.floor(self.alpha * self.N + 0.5))

    @property
    def warmup_slots(self) -> int:
        return self.horizon // 10 if self.warmup is None else int(self.warmup)

    def class_counts(self):
        """Users per class by largest remainder, so counts always sum to N."""
        raw = [w * self.N for _, w in self.classes]
        counts = [math.floor(x) for x in raw]
        order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - counts[i]), i))
        for i in order[: self.N - sum(counts)]:
            counts[i] += 1
        return counts

    def user_classes(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.classes)), self.class_counts())

    def users(self):
        return [self.classes[c][0] for c in self.user_classes()]


@dataclass
class RunResult:
    policy: PolicyKind
    avg_cost: float
    stderr: float
    costs: np.ndarray
    seeds: list
    class_costs: np.ndarray
    trace: dict | None = field(default=None, repr=False)

    @property
    def replications(self):
        return len(self.costs)


def replication_seeds(master_seed: int, replications: int):
    """Per-replication seeds, fixed up front from the master seed."""
    return [int(np.random.SeedSequence([master_seed, r]).generate_state(1, np.uint64)[0])
            for r in range(replications)]


def _stream(seed, *key):
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


def _user_streams(config, kind, seeds, purpose):
    extra = () if config.common_random_numbers else (_KIND_CODE[kind],)
    return [[_stream(s, i, purpose, *extra) for i in range(config.N)] for s in seeds]


def _draw(streams, n):
    # (R, N) generators -> (R, N, n) uniforms
    out = np.empty((len(streams), len(streams[0]), n))
    for r, row in enumerate(streams):
        for i, g in enumerate(row):
            g.random(n, out=out[r, i])
    return out


# selection modes of the compiled slot loop
_BY_INDEX, _BY_INDEX_RANDOM_TIE, _UNIFORM, _CYCLIC = 0, 1, 2, 3


@njit(cache=True)
def _run_chunk(mode, flat, L, chan_ok, jumps, keys, j, k, acc, M, first_scored, cursor,
               tr_pred, tr_emp, tr_sched, tr_deliv):
    R, N, n = chan_ok.shape
    tracing = tr_pred.shape[0] > 0
    neg = np.empty(N)
    act = np.zeros(N, dtype=np.bool_)
    start = cursor
    for r in range(R):
        cursor = start
        for s in range(n):
            act[:] = False
            if mode == _CYCLIC:
                for m in range(M):
                    act[(cursor + m) % N] = True
            elif mode == _UNIFORM:
                order = np.argsort(keys[r, s])
                for m in range(M):
                    act[order[m]] = True
            else:
                for i in range(N):
                    neg[i] = -flat[i * L + j[r, i]]
                if mode == _BY_INDEX:
                    order = np.argsort(neg, kind="mergesort")
                else:
                    perm = np.argsort(keys[r, s])
                    order = perm[np.argsort(neg[perm], kind="mergesort")]
                for m in range(M):
                    act[order[m]] = True
            for i in range(N):
                hit = act[i] and chan_ok[r, i, s]
                if hit:
                    j[r, i] = 0
                    k[r, i] = 0
                else:
                    j[r, i] += 1
                    if jumps[r, i, s]:
                        k[r, i] += 1
                if s >= first_scored:
                    acc[r, i] += k[r, i] * (k[r, i] + 1)
                if tracing:
                    tr_pred[r, s, i] = j[r, i]
                    tr_emp[r, s, i] = k[r, i]
                    tr_sched[r, s, i] = act[i]
                    tr_deliv[r, s, i] = hit
            if mode == _CYCLIC:
                cursor = (cursor + M) % N
    return cursor


def _simulate(config: SimConfig, kind: PolicyKind, seeds, trace=False) -> RunResult:
    kind = PolicyKind(kind)
    users = config.users()
    pop = Population.from_params(users)
    cls = config.user_classes()
    R, N, M = len(seeds), config.N, config.channels
    T, warm = config.horizon, config.warmup_slots

    if kind is PolicyKind.ROUND_ROBIN:
        mode = _CYCLIC
    elif kind is PolicyKind.RANDOM:
        mode = _UNIFORM
    else:
        mode = _BY_INDEX_RANDOM_TIE if config.tie_rule == "seeded_random" else _BY_INDEX
    randomized = mode in (_UNIFORM, _BY_INDEX_RANDOM_TIE)

    chan_streams = _user_streams(config, kind, seeds, CHANNEL)
    src_streams = _user_streams(config, kind, seeds, SOURCE)
    policy_streams = [_stream(s, POLICY, _KIND_CODE[kind]) for s in seeds] if randomized else None

    j = np.zeros((R, N), dtype=np.int64)
    k = np.zeros((R, N), dtype=np.int64)
    acc = np.zeros((R, N), dtype=np.int64)
    cursor = 0
    chunks = []

    # index lookup table: flat[i * L + j] is user i's index at state j
    L, flat = 1, np.zeros(N)
    no_keys = np.zeros((R, 0, N))

    t = 0
    while t < T:
        n = min(CHUNK, T - t)
        if kind.uses_index and j.max() + n >= L:
            # j grows by at most one per slot, so this covers the whole chunk
            L = max(2 * L, int(j.max()) + n + 1)
            flat = np.ascontiguousarray(index_values(kind, np.arange(L)[:, None], pop).T).ravel()
        chan_ok = _draw(chan_streams, n) < pop.rho[:, None]
        jumps = _draw(src_streams, n) < pop.p[:, None]
        # one length-N block of selection/tie keys per slot
        keys = np.stack([g.random((n, N)) for g in policy_streams]) if randomized else no_keys
        shape = (R, n, N) if trace else (0, n, N)
        tr = (np.zeros(shape, np.int64), np.zeros(shape, np.int64),
              np.zeros(shape, np.bool_), np.zeros(shape, np.bool_))
        cursor = _run_chunk(mode, flat, L, chan_ok, jumps, keys, j, k, acc, M, warm - t, cursor, *tr)
        if trace:
            chunks.append(tr + (jumps.transpose(0, 2, 1),))
        t += n

    # e^k = d k (k+1) / 2, with d and 1/2 applied once at the end
    per_user = acc * pop.d / 2.0 / (T - warm)
    costs = per_user.mean(axis=1)
    class_costs = np.stack([per_user[:, cls == c].mean(axis=1) if np.any(cls == c)
                            else np.full(R, np.nan) for c in range(len(config.classes))], axis=1)
    stderr = float(costs.std(ddof=1) / math.sqrt(R)) if R > 1 else 0.0
    record = None
    if trace:
        names = ("pred", "emp", "scheduled", "delivered", "jump")
        # arrays are (R, T, N)
        record = {name: np.concatenate([c[i] for c in chunks], axis=1) for i, name in enumerate(names)}
    return RunResult(kind, float(costs.mean()), stderr, costs, list(seeds), class_costs, record)


def run_episode(config: SimConfig, kind: PolicyKind, seed=None, trace=False) -> RunResult:
    """One replication with the given seed (default: the config seed)."""
    return _simulate(config, kind, [config.seed if seed is None else int(seed)], trace)


def estimate_cost(config: SimConfig, kind: PolicyKind, replications: int) -> RunResult:
    """Mean and standard error of the average empirical AoII over independent replications."""
    if replications < 1:
        raise ValueError("replications must be >= 1")
    return _simulate(config, kind, replication_seeds(config.seed, replications))


def simulate_threshold(params: SourceParams, n: int, T: int, seed=None):
    """Single user scheduled whenever its predicted state is at least ``n``.

    Returns the pre-decision predicted states, the post-transition
    empirical states and the actions, each of length ``T``.
    """
    rng = np.random.default_rng(seed)
    chan = rng.random(T) < params.rho
    jumps = rng.random(T) < params.p
    pred = np.empty(T, dtype=np.int64)
    emp = np.empty(T, dtype=np.int64)
    j = k = 0
    for t in range(T):
        pred[t] = j
        if j >= n and chan[t]:
            j = k = 0
        else:
            j += 1
            k += int(jumps[t])
        emp[t] = k
    return pred, emp, pred >= n


def occupancy_measure(params: SourceParams, n: int, T: int, seed=None) -> np.ndarray:
    """Empirical distribution of the predicted state under threshold ``n``."""
    if T < 10**4:
        raise ValueError("T must be at least 1e4")
    pred, _, _ = simulate_threshold(params, n, T, seed)
    return np.bincount(pred) / T


def empirical_steady_cost(n: int, params: SourceParams) -> float:
    """Steady-state empirical AoII of one user under threshold ``n``.

    Given ``j`` slots since the last delivery the empirical index is
    Binomial(j, p), so ``E[d k (k+1)/2] = d (j^2 p^2 + j p (2 - p)) / 2``,
    averaged over the stationary law of ``j``.
    """
    J = truncation_index(n, params.rho)
    jj = np.arange(J + 1, dtype=float)
    p = params.p
    per_state = params.d * (jj**2 * p**2 + jj * p * (2.0 - p)) / 2.0
    return float(np.dot(stationary_pmf(n, params.rho, J), per_state))
