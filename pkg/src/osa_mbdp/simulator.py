"""Slot-level Monte Carlo simulation of sensing strategies.

Trials are simulated in blocks as numpy arrays.  Block ``k`` draws from
``default_rng([seed, k])``, so results depend only on the seed and block size,
not on execution order.  Every SU in a trial sees the same channel states.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import ConfigError, StructureError
from .model import JointPolicy, PolicyTree
from .radio import FC, FN, U, RadioScenario, genie_rmax, joint_states


@dataclass(frozen=True)
class TreeStrategy:
    policy: JointPolicy
    name: str = "mbdp"


@dataclass(frozen=True)
class MHStrategy:
    name: str = "mh"


@dataclass(frozen=True)
class CoopStrategy:
    name: str = "coop"


@dataclass(frozen=True)
class PartitionStrategy:
    assignment: tuple[int, ...] | None = None  # default: SU i senses channel i
    name: str = "partition"


Strategy = Union[TreeStrategy, MHStrategy, CoopStrategy, PartitionStrategy]


@dataclass(frozen=True)
class SimConfig:
    horizon: int
    trials: int
    seed: int
    strategy: Strategy
    block_size: int = 8192
    check_receiver: bool = True

    def __post_init__(self):
        if self.horizon < 1 or self.trials < 1 or self.block_size < 1:
            raise ConfigError("horizon, trials and block_size must be >= 1")


@dataclass(frozen=True, eq=False)
class ThroughputStats:
    per_su_mean: np.ndarray
    per_su_stderr: np.ndarray
    network_mean: float
    network_stderr: float
    normalized_network: float
    collision_count_mean: float
    r_max: float
    trials: int


def flatten_tree(tree: PolicyTree) -> tuple[np.ndarray, np.ndarray, int]:
    """Node-array form of a tree: ``actions[n]``, ``children[n, o]`` (-1 at leaves), root id."""
    nodes = tree.distinct_nodes()
    pos = {node: k for k, node in enumerate(nodes)}
    width = max((len(n.children) for n in nodes), default=0)
    actions = np.array([n.action for n in nodes], dtype=np.int64)
    children = np.full((len(nodes), max(width, 1)), -1, dtype=np.int64)
    for k, n in enumerate(nodes):
        for o, c in enumerate(n.children):
            children[k, o] = pos[c]
    return actions, children, pos[tree]


def _history_tables(tree: PolicyTree, n_obs: int, max_entries: int = 2_000_000) -> list[np.ndarray] | None:
    """Action lookup by observation history (base-``n_obs`` code), one table per slot."""
    if sum(n_obs**k for k in range(tree.depth)) > max_entries:
        return None
    tables = []
    frontier = [tree]
    for _ in range(tree.depth):
        tables.append(np.array([n.action for n in frontier], dtype=np.int64))
        frontier = [c for n in frontier for c in n.children]
    return tables


def _sample_states(sc: RadioScenario, n: int, rng: np.random.Generator) -> np.ndarray:
    idx = rng.choice(2**sc.n_channels, size=n, p=sc.initial_belief.probs)
    return joint_states(sc.n_channels)[idx].astype(np.int8)


def _evolve(states: np.ndarray, p10: np.ndarray, p01: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(states.shape)
    flip = np.where(states == 1, u < p10, u < p01)
    return np.where(flip, 1 - states, states).astype(np.int8)


def _predict(omega: np.ndarray, p10: np.ndarray, p01: np.ndarray) -> np.ndarray:
    return omega * (1.0 - p10) + (1.0 - omega) * p01


def _simulate_block(sc: RadioScenario, cfg: SimConfig, n: int, rng: np.random.Generator):
    T, M, C = cfg.horizon, sc.num_sus, sc.n_channels
    p10 = np.array([c.p_idle_to_busy for c in sc.channels])
    p01 = np.array([c.p_busy_to_idle for c in sc.channels])
    strat = cfg.strategy
    rows = np.arange(n)[:, None]
    states = _sample_states(sc, n, rng)
    totals = np.zeros((n, M), dtype=np.int64)
    collisions = np.zeros(n, dtype=np.int64)

    if isinstance(strat, TreeStrategy):
        flat = [flatten_tree(t) for t in strat.policy.trees]
        nodes = np.array([[f[2] for f in flat]] * n, dtype=np.int64)
        obs_hist = np.zeros((T, n, M), dtype=np.int64)
        act_hist = np.zeros((T, n, M), dtype=np.int64)
    elif isinstance(strat, (MHStrategy, CoopStrategy)):
        omega = np.broadcast_to(sc.idle_marginals(), (n, M, C)).copy()
    elif isinstance(strat, PartitionStrategy):
        assignment = tuple(range(M)) if strat.assignment is None else strat.assignment
        fixed = np.broadcast_to(np.asarray(assignment, dtype=np.int64), (n, M))

    for t in range(T):
        if isinstance(strat, TreeStrategy):
            sensed = np.stack([flat[i][0][nodes[:, i]] for i in range(M)], axis=1)
            act_hist[t] = sensed
        elif isinstance(strat, MHStrategy):
            weights = omega.copy()
            dead = weights.sum(axis=2) <= 0.0
            weights[dead] = 1.0
            cdf = np.cumsum(weights / weights.sum(axis=2, keepdims=True), axis=2)
            u = rng.random((n, M, 1))
            sensed = np.minimum((u > cdf).sum(axis=2), C - 1)
        elif isinstance(strat, CoopStrategy):
            w1, w2 = omega[:, 0], omega[:, 1]
            keep = w1[:, 0] + w2[:, 1] >= w2[:, 0] + w1[:, 1]
            sensed = np.where(keep[:, None], [0, 1], [1, 0]).astype(np.int64)
        else:
            sensed = fixed

        idle = states[rows, sensed]
        same = (sensed[:, :, None] == sensed[:, None, :]).sum(axis=2)
        obs = np.where(idle == 0, U, np.where(same == 1, FN, FC))
        reward = (obs == FN).astype(np.int64)
        totals += reward
        n_idle = states.sum(axis=1)
        if np.any(reward.sum(axis=1) > n_idle):
            raise AssertionError("slot reward exceeds the number of idle channels")
        for c in range(C):
            on_c = (sensed == c).sum(axis=1)
            collisions += (states[:, c] == 1) & (on_c >= 2)

        if isinstance(strat, TreeStrategy):
            obs_hist[t] = obs
            if t < T - 1:
                for i in range(M):
                    nxt = flat[i][1][nodes[:, i], obs[:, i]]
                    if np.any(nxt < 0):
                        raise StructureError("policy tree has no child for an observed arc")
                    nodes[:, i] = nxt
        elif isinstance(strat, MHStrategy):
            seen = np.where(obs == U, 0.0, 1.0)
            for i in range(M):
                omega[rows[:, 0], i, sensed[:, i]] = seen[:, i]
            omega = _predict(omega, p10, p01)
        elif isinstance(strat, CoopStrategy):
            # beliefs are exchanged, so every SU conditions on every outcome
            seen = np.where(obs == U, 0.0, 1.0)
            for i in range(M):
                omega[rows[:, 0], :, sensed[:, i]] = seen[:, i : i + 1]
            omega = _predict(omega, p10, p01)
        states = _evolve(states, p10, p01, rng)

    if isinstance(strat, TreeStrategy) and cfg.check_receiver:
        _check_receiver(strat.policy, obs_hist, act_hist)
    return totals, collisions


def _check_receiver(policy: JointPolicy, obs_hist: np.ndarray, act_hist: np.ndarray) -> None:
    """A receiver holding the same tree must reproduce the transmitter's actions from its observations."""
    T = obs_hist.shape[0]
    for i, tree in enumerate(policy.trees):
        n_obs = max(len(tree.children), 1)
        tables = _history_tables(tree, n_obs)
        if tables is None:
            continue
        code = np.zeros(obs_hist.shape[1], dtype=np.int64)
        for t in range(T):
            if not np.array_equal(tables[t][code], act_hist[t, :, i]):
                raise AssertionError(f"receiver of SU {i} lost synchronisation at slot {t}")
            code = code * n_obs + obs_hist[t, :, i]


def _validate(sc: RadioScenario, cfg: SimConfig) -> None:
    strat = cfg.strategy
    if isinstance(strat, TreeStrategy):
        if len(strat.policy) != sc.num_sus:
            raise ConfigError(f"policy has {len(strat.policy)} trees for {sc.num_sus} SUs")
        if strat.policy.depth != cfg.horizon:
            raise ConfigError(f"policy depth {strat.policy.depth} != horizon {cfg.horizon}")
        for tree in strat.policy.trees:
            tree.validate(sc.n_channels, 3)
    elif isinstance(strat, CoopStrategy):
        if sc.num_sus != 2 or sc.n_channels != 2:
            raise ConfigError("the cooperative baseline needs two SUs and two channels")
    elif isinstance(strat, PartitionStrategy):
        assignment = tuple(range(sc.num_sus)) if strat.assignment is None else strat.assignment
        if len(assignment) != sc.num_sus or any(not 0 <= c < sc.n_channels for c in assignment):
            raise ConfigError(f"invalid partition assignment {assignment}")
    elif not isinstance(strat, MHStrategy):
        raise ConfigError(f"unknown strategy {strat!r}")


def simulate(sc: RadioScenario, cfg: SimConfig) -> ThroughputStats:
    _validate(sc, cfg)
    parts, hits = [], []
    for k, start in enumerate(range(0, cfg.trials, cfg.block_size)):
        n = min(cfg.block_size, cfg.trials - start)
        totals, collisions = _simulate_block(sc, cfg, n, np.random.default_rng([cfg.seed, k]))
        parts.append(totals)
        hits.append(collisions)
    totals = np.concatenate(parts)
    collisions = np.concatenate(hits)
    n = cfg.trials
    network = totals.sum(axis=1)

    def stderr(x):
        return np.std(x, axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros(np.shape(x)[1:])

    r_max = genie_rmax(sc, cfg.horizon)
    # integer totals make these sums exact
    per_su = totals.sum(axis=0) / n
    network_mean = network.sum() / n
    return ThroughputStats(
        per_su_mean=per_su,
        per_su_stderr=np.asarray(stderr(totals)),
        network_mean=float(network_mean),
        network_stderr=float(stderr(network)),
        normalized_network=float(network_mean / r_max) if r_max > 0 else float("nan"),
        collision_count_mean=float(collisions.sum() / n),
        r_max=r_max,
        trials=n,
    )


@dataclass(frozen=True)
class ComparisonRow:
    strategy: str
    horizon: int
    stats: ThroughputStats


def run_comparison(
    sc: RadioScenario,
    horizons: Iterable[int],
    strategies: dict[str, Callable[[int], Strategy]],
    trials: int,
    seed: int,
) -> list[ComparisonRow]:
    """Simulate every strategy factory at every horizon; one row per (strategy, horizon)."""
    out = []
    for name, make in strategies.items():
        for T in horizons:
            cfg = SimConfig(T, trials, seed, make(T))
            out.append(ComparisonRow(name, T, simulate(sc, cfg)))
    return out
