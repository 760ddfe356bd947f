"""Comparison strategies: randomized multiuser heuristic and cooperative belief exchange.

Both consume per-channel idle probabilities ``omega``.  These are independent
marginals, so they need not sum to one.
"""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from .radio import FC, FN, U, ChannelChain

log = logging.getLogger(__name__)


def mh_channel_distribution(omega: Sequence[float]) -> np.ndarray:
    """Sensing distribution proportional to each channel's idle probability."""
    omega = np.asarray(omega, dtype=float)
    total = omega.sum()
    if total <= 0.0:
        log.warning("all idle probabilities are zero; falling back to a uniform channel choice")
        return np.full(omega.size, 1.0 / omega.size)
    return omega / total


def coop_joint_action(omega1: Sequence[float], omega2: Sequence[float]) -> tuple[int, int]:
    """Channels sensed by SU1 and SU2 (two SUs, two channels)."""
    if len(omega1) != 2 or len(omega2) != 2:
        raise ValueError("the cooperative rule is defined for two channels")
    if omega1[0] + omega2[1] >= omega2[0] + omega1[1]:
        return 0, 1
    return 1, 0


def _predict(omega: np.ndarray, chains: Sequence[ChannelChain]) -> np.ndarray:
    p10 = np.array([c.p_idle_to_busy for c in chains])
    p01 = np.array([c.p_busy_to_idle for c in chains])
    return omega * (1.0 - p10) + (1.0 - omega) * p01


def belief_filter_update(
    omega: Sequence[float], sensed: int, obs: int, chains: Sequence[ChannelChain]
) -> np.ndarray:
    """Condition on one perfect-sensing outcome, then predict one slot ahead.

    A collision (FC) still reveals that the channel was idle, so it is treated
    exactly like FN.
    """
    omega = np.array(omega, dtype=float)
    if not 0 <= sensed < omega.size:
        raise IndexError(f"channel {sensed} out of range")
    if obs == U:
        omega[sensed] = 0.0
    elif obs in (FN, FC):
        omega[sensed] = 1.0
    else:
        raise ValueError(f"unknown observation {obs}")
    return _predict(omega, chains)


def shared_filter_update(
    omega: Sequence[float], sensed: Sequence[int], obs: Sequence[int], chains: Sequence[ChannelChain]
) -> np.ndarray:
    """Filter update after SUs exchange their sensing outcomes for the slot."""
    omega = np.array(omega, dtype=float)
    for c, o in zip(sensed, obs):
        omega[c] = 0.0 if o == U else 1.0
    return _predict(omega, chains)
