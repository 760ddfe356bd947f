"""Opportunistic spectrum access as a Dec-POMDP.

Each primary channel is an independent two-state Markov chain (1 = idle,
0 = busy).  A secondary user (SU) picks one channel to sense per slot and
transmits on it iff it is idle; the ACK at the end of the slot tells it
whether another SU collided with it.

Joint states enumerate ``itertools.product((1, 0), repeat=C)``: for two
channels the order is (1,1), (1,0), (0,1), (0,0).  Per-SU actions are channel
indices; per-SU observations are ``U`` (busy), ``FN`` (free, ACK received) and
``FC`` (free, collision).  An observation describes the slot in which the action
was taken, so the kernel factors as ``P(s2 | s) * P(o | s, a)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Belief, DecPomdpModel, as_belief

U, FN, FC = 0, 1, 2
OBS_NAMES = ("U", "FN", "FC")


@dataclass(frozen=True)
class ChannelChain:
    p_busy_to_idle: float
    p_idle_to_busy: float

    def __post_init__(self):
        for name in ("p_busy_to_idle", "p_idle_to_busy"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} is not a probability")

    def matrix(self) -> np.ndarray:
        """2x2 transition matrix with rows/columns ordered (idle, busy)."""
        p01, p10 = self.p_busy_to_idle, self.p_idle_to_busy
        return np.array([[1.0 - p10, p10], [p01, 1.0 - p01]])

    def step_idle(self, omega):
        """Idle probability one slot later, given idle probability ``omega`` now."""
        return omega * (1.0 - self.p_idle_to_busy) + (1.0 - omega) * self.p_busy_to_idle


def steady_state(ch: ChannelChain) -> tuple[float, float]:
    """Stationary (pi_busy, pi_idle) of a channel chain."""
    total = ch.p_busy_to_idle + ch.p_idle_to_busy
    if total <= 0.0:
        raise ValueError("chain with no transitions has no unique stationary distribution")
    pi_idle = ch.p_busy_to_idle / total
    return 1.0 - pi_idle, pi_idle


def joint_states(n_channels: int) -> np.ndarray:
    """(2**C, C) array of channel states in the package's joint-state order."""
    return np.array(list(itertools.product((1, 0), repeat=n_channels)), dtype=np.int8)


def joint_transition(channels: Sequence[ChannelChain]) -> np.ndarray:
    trans = np.ones((1, 1))
    for ch in channels:
        trans = np.kron(trans, ch.matrix())
    return trans


def state_index(state: Sequence[int]) -> int:
    """Joint-state index of a tuple of channel states (1 idle, 0 busy)."""
    idx = 0
    for bit in state:
        idx = 2 * idx + (1 - int(bit))
    return idx


@dataclass(frozen=True, eq=False)
class RadioScenario:
    channels: tuple[ChannelChain, ...]
    num_sus: int
    initial_belief: Belief

    def __post_init__(self):
        channels = tuple(self.channels)
        if not channels:
            raise ValueError("need at least one channel")
        if self.num_sus < 1:
            raise ValueError("need at least one SU")
        b0 = as_belief(self.initial_belief)
        if len(b0) != 2 ** len(channels):
            raise ValueError(f"initial belief has {len(b0)} entries, expected {2 ** len(channels)}")
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "initial_belief", b0)

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @classmethod
    def from_state(cls, channels, num_sus: int, state: Sequence[int]) -> "RadioScenario":
        """Scenario whose first slot has the given, known channel states."""
        b0 = Belief.point_mass(2 ** len(channels), state_index(state))
        return cls(tuple(channels), num_sus, b0)

    @classmethod
    def at_steady_state(cls, channels, num_sus: int) -> "RadioScenario":
        return cls(tuple(channels), num_sus, Belief(steady_state_belief(channels)))

    def idle_marginals(self, belief: Belief | None = None) -> np.ndarray:
        """Per-channel probability of being idle under a joint belief."""
        b = self.initial_belief if belief is None else as_belief(belief)
        return b.probs @ joint_states(self.n_channels)


def steady_state_belief(channels: Sequence[ChannelChain]) -> np.ndarray:
    probs = np.ones(1)
    for ch in channels:
        pi_busy, pi_idle = steady_state(ch)
        probs = np.kron(probs, [pi_idle, pi_busy])
    return probs


def reference_scenario() -> RadioScenario:
    """Two SUs, two asymmetric channels, first slot known to be (idle, busy)."""
    channels = (ChannelChain(0.15, 0.95), ChannelChain(0.95, 0.15))
    return RadioScenario.from_state(channels, 2, (1, 0))


def slot_outcome(state: Sequence[int], sensed: Sequence[int]) -> tuple[list[int], list[int]]:
    """Per-SU observations and rewards for one slot under perfect sensing."""
    counts: dict[int, int] = {}
    for c in sensed:
        counts[c] = counts.get(c, 0) + 1
    obs, rew = [], []
    for c in sensed:
        if not state[c]:
            obs.append(U)
            rew.append(0)
        elif counts[c] == 1:
            obs.append(FN)
            rew.append(1)
        else:
            obs.append(FC)
            rew.append(0)
    return obs, rew


def build_scenario(sc: RadioScenario) -> DecPomdpModel:
    C, M = sc.n_channels, sc.num_sus
    states = joint_states(C)
    trans = joint_transition(sc.channels)
    n_actions, n_obs = (C,) * M, (3,) * M
    S, A, O = len(states), C**M, 3**M
    kernel = np.zeros((S, A, S, O))
    rewards = np.zeros((M, S, A))
    for s, state in enumerate(states):
        for a, sensed in enumerate(itertools.product(range(C), repeat=M)):
            obs, rew = slot_outcome(state, sensed)
            o = int(np.ravel_multi_index(obs, n_obs))
            kernel[s, a, :, o] = trans[s]
            rewards[:, s, a] = rew
    labels = tuple(tuple(int(x) for x in st) for st in states)
    return DecPomdpModel(n_actions, n_obs, kernel, rewards, state_labels=labels)


def genie_rmax(sc: RadioScenario, horizon: int) -> float:
    """Expected reward over ``horizon`` slots of an omniscient collision-free scheduler."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    per_slot = np.minimum(sc.num_sus, joint_states(sc.n_channels).sum(axis=1))
    trans = joint_transition(sc.channels)
    b = sc.initial_belief.probs
    total = 0.0
    for _ in range(horizon):
        total += float(b @ per_slot)
        b = b @ trans
    return total
