"""Weighted-throughput QoS test and QoS-constrained policy selection.

A vector of per-SU expected rewards ``R`` meets the QoS target with weights
``a`` and slack ``zeta`` when some ``t`` in ``(0, (R_max + M*zeta) / sum(a)]``
satisfies ``|R_i - a_i t| <= zeta`` for every SU.  Each SU constrains ``t`` to
a closed interval, so the test is an exact interval intersection.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Belief, JointPolicy, as_belief
from .solver import CandidatePool, PoolEntry

log = logging.getLogger(__name__)

ROUND_TOL = 1e-12


@dataclass(frozen=True)
class QosSpec:
    weights: tuple[float, ...]
    zeta: float
    r_max: float

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        if not weights or any(w <= 0 for w in weights):
            raise ValueError("QoS weights must be positive")
        if self.zeta < 0:
            raise ValueError("zeta must be nonnegative")
        if self.r_max < 0:
            raise ValueError("r_max must be nonnegative")
        object.__setattr__(self, "weights", weights)

    @property
    def t_bound(self) -> float:
        return (self.r_max + len(self.weights) * self.zeta) / sum(self.weights)


@dataclass(frozen=True)
class QosCheck:
    satisfied: bool
    witness: float | None
    # lower minus upper end of the feasible t-range; <= 0 when satisfied
    gap: float


def qos_satisfied(r: Sequence[float], spec: QosSpec, num_agents: int | None = None) -> QosCheck:
    r = np.asarray(r, dtype=float)
    a = np.asarray(spec.weights)
    m = len(a) if num_agents is None else num_agents
    if r.shape != (m,) or len(a) != m:
        raise ValueError(f"need {m} rewards and weights, got {r.size} and {len(a)}")
    lo = float(np.max((r - spec.zeta) / a))
    hi = float(min(np.min((r + spec.zeta) / a), spec.t_bound))
    if lo > 0.0:
        # absorb rounding in (R_i -+ zeta) / a_i when the intervals just touch
        ok = lo <= hi + ROUND_TOL * max(1.0, abs(hi))
        witness = 0.5 * (lo + hi) if ok else None
    else:
        # t = 0 itself is excluded
        ok = hi > 0.0
        witness = 0.5 * hi if ok else None
    return QosCheck(ok, witness, max(lo, 0.0) - hi)


@dataclass(frozen=True)
class Selection:
    entry: PoolEntry | None
    agent_values: np.ndarray | None
    joint_value: float | None
    check: QosCheck
    n_feasible: int
    # closest infeasible candidate when nothing qualifies
    closest: PoolEntry | None = None

    @property
    def policy(self) -> JointPolicy | None:
        return None if self.entry is None else self.entry.policy

    @property
    def ok(self) -> bool:
        return self.entry is not None


def select_policy(pool: CandidatePool, spec: QosSpec, b0: Belief | np.ndarray) -> Selection:
    """Highest joint-value candidate whose per-SU values meet the QoS target.

    Returns a :class:`Selection` whose ``entry`` is None when no candidate is
    feasible; ``closest`` then names the candidate with the smallest gap.
    """
    if len(pool) == 0:
        raise ValueError("empty candidate pool")
    b0 = as_belief(b0)
    best = None
    closest = None
    n_feasible = 0
    for entry in pool:
        r = entry.agent_values_at(b0)
        chk = qos_satisfied(r, spec)
        if chk.satisfied:
            n_feasible += 1
            v = float(r.sum())
            # pool order is identity order, so strict > keeps the smallest identity on ties
            if best is None or v > best[2] + 1e-9:
                best = (entry, r, v, chk)
        elif closest is None or chk.gap < closest[1].gap:
            closest = (entry, chk, r)
    if best is None:
        log.info("no QoS-feasible candidate; closest identity %d misses by %.4g", closest[0].identity, closest[1].gap)
        return Selection(None, None, None, closest[1], 0, closest[0])
    entry, r, v, chk = best
    return Selection(entry, r, entry.value_at(b0), chk, n_feasible)
