"""Memory-bounded dynamic programming (MBDP) for two-agent finite-horizon Dec-POMDPs.

Policy trees are grown bottom-up.  At every level each agent's retained trees
are expanded by an exhaustive backup, and only ``max_trees`` trees per agent
survive: the best joint pairs at a belief predicted top-down from the initial
belief.  Every final joint policy evaluated in any trial is kept in a
:class:`CandidatePool` so a later stage can choose among near-optimal policies.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import ResourceGuardError, StructureError, UnsupportedModelError
from .model import (
    Belief,
    DecPomdpModel,
    JointPolicy,
    PolicyTree,
    ValueVector,
    _stacked_values,
    as_belief,
    evaluate_at_belief,
    propagate_belief,
    stacked_value_vectors,
)

log = logging.getLogger(__name__)

TIE_TOL = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    horizon: int
    max_trees: int = 3
    trials: int = 30
    seed: int = 0
    belief_jitter: float = 0.0
    random_ties: bool = True
    max_nodes: int = 1_000_000

    def __post_init__(self):
        if self.horizon < 1 or self.max_trees < 1 or self.trials < 1:
            raise ValueError("horizon, max_trees and trials must all be >= 1")
        if not 0.0 <= self.belief_jitter < 1.0:
            raise ValueError("belief_jitter must lie in [0, 1)")
        if self.max_nodes < 1:
            raise ValueError("max_nodes must be >= 1")


@dataclass(frozen=True, eq=False)
class PoolEntry:
    identity: int
    policy: JointPolicy
    joint: ValueVector
    agents: tuple[ValueVector, ...]
    trial: int

    def value_at(self, b) -> float:
        return evaluate_at_belief(self.joint, b)

    def agent_values_at(self, b) -> np.ndarray:
        return np.array([evaluate_at_belief(v, b) for v in self.agents])


@dataclass(eq=False)
class CandidatePool:
    """Distinct final joint policies with their exact value vectors."""

    horizon: int
    entries: list[PoolEntry] = field(default_factory=list)
    best_identity: int | None = None
    _index: dict = field(default_factory=dict, repr=False)

    def add(self, policy: JointPolicy, stack: np.ndarray, trial: int = 0) -> PoolEntry:
        if policy.depth != self.horizon:
            raise StructureError(f"pool holds depth-{self.horizon} policies, got depth {policy.depth}")
        entry = self._index.get(policy)
        if entry is None:
            entry = PoolEntry(
                identity=len(self.entries),
                policy=policy,
                joint=ValueVector(stack[0], policy.depth),
                agents=tuple(ValueVector(row, policy.depth) for row in stack[1:]),
                trial=trial,
            )
            self.entries.append(entry)
            self._index[policy] = entry
        return entry

    def __len__(self):
        return len(self.entries)

    def __iter__(self) -> Iterator[PoolEntry]:
        return iter(self.entries)

    def get(self, identity: int) -> PoolEntry:
        return self.entries[identity]

    def best(self, b) -> PoolEntry:
        if not self.entries:
            raise ValueError("empty candidate pool")
        values = np.array([e.value_at(b) for e in self.entries])
        # smallest identity among (numerical) ties
        return self.entries[int(np.flatnonzero(values >= values.max() - TIE_TOL)[0])]

    @property
    def best_entry(self) -> PoolEntry | None:
        return None if self.best_identity is None else self.entries[self.best_identity]


def _unique(trees: Sequence[PolicyTree]) -> list[PolicyTree]:
    return list(dict.fromkeys(trees))


def exhaustive_backup(
    trees: Sequence[PolicyTree], agent: int, model: DecPomdpModel, max_nodes: int | None = None
) -> list[PolicyTree]:
    """All trees one level deeper: a root action plus any input tree on each observation arc."""
    trees = _unique(trees)
    if not trees:
        raise ValueError("exhaustive backup of an empty tree set")
    if len({t.depth for t in trees}) != 1:
        raise StructureError("backup inputs must share one depth")
    n_act, n_obs = model.n_actions[agent], model.n_obs[agent]
    count = n_act * len(trees) ** n_obs
    if max_nodes is not None and count > max_nodes:
        raise ResourceGuardError(f"backup would create {count} trees (cap {max_nodes})")
    return [
        PolicyTree(a, combo)
        for a in range(n_act)
        for combo in itertools.product(trees, repeat=n_obs)
    ]


def precompute_beliefs(
    b0: Belief | np.ndarray,
    model: DecPomdpModel,
    horizon: int,
    jitter: float = 0.0,
    rng: np.random.Generator | None = None,
) -> list[Belief]:
    """Open-loop belief in force when depth-t subtrees start; element ``t - 1`` is level t."""
    b = as_belief(b0)
    chain = [b]
    for _ in range(horizon - 1):
        chain.append(propagate_belief(chain[-1], model))
    levels = chain[::-1]
    if jitter > 0.0:
        rng = np.random.default_rng() if rng is None else rng
        noisy = []
        for lvl in levels:
            p = (1.0 - jitter) * lvl.probs + jitter * rng.dirichlet(np.ones(model.n_states))
            noisy.append(Belief(p / p.sum()))
        levels = noisy
    return levels


def pair_value_stacks(
    trees_i: Sequence[PolicyTree],
    trees_j: Sequence[PolicyTree],
    model: DecPomdpModel,
    memo: dict | None = None,
) -> np.ndarray:
    """Stacked value vectors for every pair, shape (n_i, n_j, 1 + n_agents, S).

    Children shared between candidate trees are evaluated once; the expansion
    over the candidate cross product is vectorised per joint action.
    """
    if model.n_agents != 2:
        raise UnsupportedModelError("pairwise evaluation needs a two-agent model")
    memo = {} if memo is None else memo
    ni, nj = len(trees_i), len(trees_j)
    depth = trees_i[0].depth
    if any(t.depth != depth for t in itertools.chain(trees_i, trees_j)):
        raise StructureError("all candidate trees must share one depth")
    for t in trees_i:
        t.validate(model.n_actions[0], model.n_obs[0])
    for t in trees_j:
        t.validate(model.n_actions[1], model.n_obs[1])
    act_i = np.array([t.action for t in trees_i])
    act_j = np.array([t.action for t in trees_j])
    stacks = model.reward_stack  # (K, S, A)
    nA_j = model.n_actions[1]
    joint = act_i[:, None] * nA_j + act_j[None, :]
    out = np.moveaxis(stacks[:, :, joint], (0, 1), (2, 3)).copy()  # (ni, nj, K, S)
    if depth == 1:
        return out
    kids_i = _unique([c for t in trees_i for c in t.children])
    kids_j = _unique([c for t in trees_j for c in t.children])
    pos_i = {c: k for k, c in enumerate(kids_i)}
    pos_j = {c: k for k, c in enumerate(kids_j)}
    f_i = np.array([[pos_i[c] for c in t.children] for t in trees_i])
    f_j = np.array([[pos_j[c] for c in t.children] for t in trees_j])
    sub = np.stack([
        np.stack([_stacked_values((ci, cj), model, memo) for cj in kids_j])
        for ci in kids_i
    ])  # (|kids_i|, |kids_j|, K, S)
    comps = model.obs_components
    for ai in np.unique(act_i):
        rows = np.flatnonzero(act_i == ai)
        for aj in np.unique(act_j):
            cols = np.flatnonzero(act_j == aj)
            a = int(ai) * nA_j + int(aj)
            acc = np.zeros((rows.size, cols.size) + out.shape[2:])
            for o in model.obs_support[a]:
                o1, o2 = comps[o]
                g = sub[f_i[rows, o1][:, None], f_j[cols, o2][None, :]]
                acc += g @ model.kernel[:, a, :, o].T
            out[np.ix_(rows, cols)] += acc
    return out


def _select_indices(
    scores_by_belief, n_i: int, n_j: int, max_trees: int, rng: np.random.Generator | None
) -> tuple[list[int], list[int]]:
    free_i = np.ones(n_i, dtype=bool)
    free_j = np.ones(n_j, dtype=bool)
    sel_i: list[int] = []
    sel_j: list[int] = []
    for k in range(max_trees):
        if not free_i.any() and not free_j.any():
            break
        scores = scores_by_belief(k)
        rows = free_i if free_i.any() else ~free_i
        cols = free_j if free_j.any() else ~free_j
        masked = np.where(rows[:, None] & cols[None, :], scores, -np.inf)
        top = masked.max()
        ties = np.argwhere(masked >= top - TIE_TOL * max(1.0, abs(top)))
        i, j = ties[0] if rng is None else ties[rng.integers(len(ties))]
        if free_i[i]:
            sel_i.append(int(i))
            free_i[i] = False
        if free_j[j]:
            sel_j.append(int(j))
            free_j[j] = False
    return sel_i, sel_j


def select_best(
    trees_i: Sequence[PolicyTree],
    trees_j: Sequence[PolicyTree],
    beliefs: Sequence[Belief],
    max_trees: int,
    model: DecPomdpModel,
    rng: np.random.Generator | None = None,
    memo: dict | None = None,
) -> tuple[list[PolicyTree], list[PolicyTree]]:
    """Keep up to ``max_trees`` trees per agent, picked as best pairs at the given beliefs.

    Round ``k`` uses ``beliefs[k % len(beliefs)]``.  A picked tree leaves the
    candidate set; once an agent's candidates run out, its already-selected trees
    may pair with the other agent's remaining ones.  Ties go to the
    lexicographically smallest (i, j) unless ``rng`` is given.
    """
    trees_i, trees_j = _unique(trees_i), _unique(trees_j)
    if not trees_i or not trees_j:
        raise ValueError("select_best needs non-empty candidate sets")
    if not beliefs:
        raise ValueError("select_best needs at least one belief")
    joint_vals = pair_value_stacks(trees_i, trees_j, model, memo)[:, :, 0, :]
    probs = [as_belief(b).probs for b in beliefs]
    sel_i, sel_j = _select_indices(
        lambda k: joint_vals @ probs[k % len(probs)], len(trees_i), len(trees_j), max_trees, rng
    )
    return [trees_i[i] for i in sel_i], [trees_j[j] for j in sel_j]


def mbdp_solve(model: DecPomdpModel, b0: Belief | np.ndarray, cfg: SolverConfig) -> CandidatePool:
    """Run ``cfg.trials`` independent MBDP passes and pool their final joint policies."""
    if model.n_agents != 2:
        raise UnsupportedModelError("the MBDP solver is implemented for two agents")
    b0 = as_belief(b0)
    pool = CandidatePool(cfg.horizon)
    memo: dict = {}
    for trial in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, trial])
        tie_rng = rng if cfg.random_ties else None
        beliefs = precompute_beliefs(b0, model, cfg.horizon, cfg.belief_jitter, rng)
        q_i = [PolicyTree.leaf(a) for a in range(model.n_actions[0])]
        q_j = [PolicyTree.leaf(a) for a in range(model.n_actions[1])]
        for t in range(1, cfg.horizon):
            q_i = exhaustive_backup(q_i, 0, model, cfg.max_nodes)
            q_j = exhaustive_backup(q_j, 1, model, cfg.max_nodes)
            q_i, q_j = select_best(q_i, q_j, [beliefs[t]], cfg.max_trees, model, tie_rng, memo)
        for qi in q_i:
            for qj in q_j:
                delta = JointPolicy((qi, qj))
                pool.add(delta, stacked_value_vectors(delta, model, memo), trial)
    best = pool.best(b0)
    pool.best_identity = best.identity
    log.debug("MBDP T=%d: %d candidates, best value %.6f", cfg.horizon, len(pool), best.value_at(b0))
    return pool
