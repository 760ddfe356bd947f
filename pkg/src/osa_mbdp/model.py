"""Finite-horizon Dec-POMDP primitives: models, beliefs, policy trees and exact evaluation.

Index conventions
-----------------
Joint actions and joint observations are flat indices obtained by row-major
composition of the per-agent indices (``np.ravel_multi_index``): agent 0 is the
most significant digit.  Joint states are whatever the model builder says they
are; the radio domain documents its own ordering.

The kernel is a dense array ``kernel[s, a, s2, o] = P(s2, o | s, a)`` and rewards
are ``R(s, a)``, collected at the state the joint action is taken in.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, StructureError, UnsupportedModelError

PROB_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Belief:
    """Probability distribution over joint states."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise DimensionError(f"belief must be a non-empty vector, got shape {p.shape}")
        if np.any(p < -PROB_TOL) or np.any(p > 1 + PROB_TOL):
            raise ValueError(f"belief entries must lie in [0, 1]: {p}")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"belief must sum to 1 (got {p.sum():.12g})")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __len__(self):
        return self.probs.size

    def __repr__(self):
        return f"Belief({np.array2string(self.probs, precision=4)})"

    @classmethod
    def point_mass(cls, n_states: int, index: int) -> "Belief":
        p = np.zeros(n_states)
        p[index] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls, n_states: int) -> "Belief":
        return cls(np.full(n_states, 1.0 / n_states))


def as_belief(b) -> Belief:
    return b if isinstance(b, Belief) else Belief(b)


@dataclass(frozen=True, eq=False)
class ValueVector:
    """Expected reward-to-go of a joint policy, one entry per joint state."""

    values: np.ndarray
    depth: int

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def evaluate_at_belief(v: ValueVector | np.ndarray, b: Belief | np.ndarray) -> float:
    """Expected value of a value vector under a belief (their dot product)."""
    values = v.values if isinstance(v, ValueVector) else np.asarray(v, dtype=float)
    probs = b.probs if isinstance(b, Belief) else np.asarray(b, dtype=float)
    if values.shape != probs.shape:
        raise DimensionError(f"value vector has {values.size} entries, belief has {probs.size}")
    return float(values @ probs)


class PolicyTree:
    """Immutable policy tree for one agent.

    ``children[o]`` is the subtree followed after observation ``o``.  Depth-1
    trees have no children.  Subtrees are shared freely, so a deep tree is a
    DAG in memory; equality and hashing are structural.
    """

    __slots__ = ("action", "children", "depth", "_hash")

    def __init__(self, action: int, children: Iterable["PolicyTree"] = ()):
        children = tuple(children)
        if children:
            depth = children[0].depth
            if any(c.depth != depth for c in children):
                raise StructureError("children of a policy-tree node must share one depth")
            depth += 1
        else:
            depth = 1
        self.action = int(action)
        self.children = children
        self.depth = depth
        self._hash = hash((self.action, tuple(c._hash for c in children)))

    @classmethod
    def leaf(cls, action: int) -> "PolicyTree":
        return cls(action)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, PolicyTree) or self._hash != other._hash:
            return False
        return self.action == other.action and self.children == other.children

    def __repr__(self):
        return f"PolicyTree(action={self.action}, depth={self.depth})"

    def follow(self, observations: Sequence[int]) -> "PolicyTree":
        node = self
        for o in observations:
            if not node.children:
                raise StructureError("observation history is longer than the tree")
            node = node.children[o]
        return node

    def actions_along(self, observations: Sequence[int]) -> list[int]:
        """Actions taken when the given observations are received in turn."""
        node, out = self, [self.action]
        for o in observations[: self.depth - 1]:
            node = node.children[o]
            out.append(node.action)
        return out

    def distinct_nodes(self) -> list["PolicyTree"]:
        """Structurally distinct nodes, children before parents."""
        seen: dict[PolicyTree, None] = {}
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if node in seen:
                continue
            if expanded:
                seen[node] = None
            else:
                stack.append((node, True))
                stack.extend((c, False) for c in node.children if c not in seen)
        return list(seen)

    def validate(self, n_actions: int, n_obs: int) -> None:
        for node in self.distinct_nodes():
            if not 0 <= node.action < n_actions:
                raise StructureError(f"action {node.action} out of range [0, {n_actions})")
            if node.depth > 1 and len(node.children) != n_obs:
                raise StructureError(
                    f"internal node has {len(node.children)} children, expected {n_obs}"
                )


@dataclass(frozen=True, eq=False)
class JointPolicy:
    """One policy tree per agent, all of the same depth."""

    trees: tuple[PolicyTree, ...]

    def __post_init__(self):
        trees = tuple(self.trees)
        if not trees:
            raise StructureError("a joint policy needs at least one tree")
        if len({t.depth for t in trees}) != 1:
            raise StructureError(f"tree depths differ: {[t.depth for t in trees]}")
        object.__setattr__(self, "trees", trees)

    @property
    def depth(self) -> int:
        return self.trees[0].depth

    @property
    def root_actions(self) -> tuple[int, ...]:
        return tuple(t.action for t in self.trees)

    def __hash__(self):
        return hash(self.trees)

    def __eq__(self, other):
        return isinstance(other, JointPolicy) and self.trees == other.trees

    def __len__(self):
        return len(self.trees)


@dataclass(frozen=True, eq=False)
class DecPomdpModel:
    """Dense finite Dec-POMDP.

    kernel[s, a, s2, o]
        P(s2, o | s, a) with ``a``/``o`` flat joint indices.
    agent_rewards[i, s, a]
        Reward credited to agent ``i``.
    joint_reward[s, a]
        Team reward; defaults to the sum of the agent rewards and must equal it.
    """

    n_actions: tuple[int, ...]
    n_obs: tuple[int, ...]
    kernel: np.ndarray
    agent_rewards: np.ndarray
    joint_reward: np.ndarray | None = None
    state_labels: tuple | None = field(default=None)

    def __post_init__(self):
        n_actions = tuple(int(x) for x in self.n_actions)
        n_obs = tuple(int(x) for x in self.n_obs)
        if len(n_actions) != len(n_obs) or not n_actions:
            raise DimensionError("need matching, non-empty per-agent action and observation counts")
        kernel = np.asarray(self.kernel, dtype=float)
        A, O = int(np.prod(n_actions)), int(np.prod(n_obs))
        if kernel.ndim != 4 or kernel.shape[0] != kernel.shape[2] or kernel.shape[1] != A or kernel.shape[3] != O:
            raise DimensionError(f"kernel shape {kernel.shape} inconsistent with |A|={A}, |O|={O}")
        S = kernel.shape[0]
        if np.any(kernel < 0):
            raise ValueError("kernel has negative entries")
        sums = kernel.sum(axis=(2, 3))
        if np.max(np.abs(sums - 1.0)) > PROB_TOL:
            raise ValueError("kernel rows must sum to 1 for every (s, a)")
        rewards = np.asarray(self.agent_rewards, dtype=float)
        if rewards.shape != (len(n_actions), S, A):
            raise DimensionError(f"agent_rewards shape {rewards.shape}, expected {(len(n_actions), S, A)}")
        joint = rewards.sum(axis=0) if self.joint_reward is None else np.asarray(self.joint_reward, dtype=float)
        if joint.shape != (S, A):
            raise DimensionError(f"joint_reward shape {joint.shape}, expected {(S, A)}")
        if np.max(np.abs(joint - rewards.sum(axis=0))) > PROB_TOL:
            raise ValueError("joint reward must equal the sum of agent rewards")
        for arr in (kernel, rewards, joint):
            arr.setflags(write=False)
        object.__setattr__(self, "n_actions", n_actions)
        object.__setattr__(self, "n_obs", n_obs)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "agent_rewards", rewards)
        object.__setattr__(self, "joint_reward", joint)

    @property
    def n_agents(self) -> int:
        return len(self.n_actions)

    @property
    def n_states(self) -> int:
        return self.kernel.shape[0]

    @property
    def n_joint_actions(self) -> int:
        return self.kernel.shape[1]

    @property
    def n_joint_obs(self) -> int:
        return self.kernel.shape[3]

    def joint_action(self, actions: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(actions), self.n_actions))

    def joint_obs(self, observations: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(observations), self.n_obs))

    @cached_property
    def obs_components(self) -> np.ndarray:
        """(|O|, n_agents) table of per-agent observation indices."""
        return np.stack(np.unravel_index(np.arange(self.n_joint_obs), self.n_obs), axis=1)

    @cached_property
    def action_components(self) -> np.ndarray:
        return np.stack(np.unravel_index(np.arange(self.n_joint_actions), self.n_actions), axis=1)

    @cached_property
    def obs_support(self) -> tuple[np.ndarray, ...]:
        """For each joint action, the joint observations that can occur at all."""
        reach = self.kernel.sum(axis=(0, 2)) > 0
        return tuple(np.flatnonzero(reach[a]) for a in range(self.n_joint_actions))

    @cached_property
    def reward_stack(self) -> np.ndarray:
        """(1 + n_agents, S, A): joint reward followed by each agent's reward."""
        return np.concatenate([self.joint_reward[None], self.agent_rewards], axis=0)

    @cached_property
    def state_transition(self) -> np.ndarray | None:
        """P(s2 | s) when it does not depend on the joint action, else None."""
        marg = self.kernel.sum(axis=3)
        if np.max(np.abs(marg - marg[:, :1, :])) > PROB_TOL:
            return None
        return marg[:, 0, :]

    def check_policy(self, delta: JointPolicy) -> None:
        if len(delta) != self.n_agents:
            raise StructureError(f"joint policy has {len(delta)} trees for {self.n_agents} agents")
        for tree, na, no in zip(delta.trees, self.n_actions, self.n_obs):
            tree.validate(na, no)


def _stacked_values(trees: tuple[PolicyTree, ...], model: DecPomdpModel, memo: dict) -> np.ndarray:
    cached = memo.get(trees)
    if cached is not None:
        return cached
    a = model.joint_action([t.action for t in trees])
    v = model.reward_stack[:, :, a].copy()
    if trees[0].depth > 1:
        for o in model.obs_support[a]:
            comps = model.obs_components[o]
            try:
                child = tuple(t.children[c] for t, c in zip(trees, comps))
            except IndexError:
                raise StructureError("policy tree is missing a child for a reachable observation") from None
            v += _stacked_values(child, model, memo) @ model.kernel[:, a, :, o].T
    memo[trees] = v
    return v


def stacked_value_vectors(delta: JointPolicy, model: DecPomdpModel, memo: dict | None = None) -> np.ndarray:
    """Joint value vector (row 0) and per-agent value vectors (rows 1..n) in one pass.

    ``memo`` may be shared across calls with the same model to reuse subtree values.
    """
    model.check_policy(delta)
    return _stacked_values(delta.trees, model, {} if memo is None else memo)


def joint_value_vector(delta: JointPolicy, model: DecPomdpModel) -> ValueVector:
    """Exact value vector of ``delta`` by backward recursion over joint subtrees."""
    return ValueVector(stacked_value_vectors(delta, model)[0], delta.depth)


def per_agent_value_vectors(delta: JointPolicy, model: DecPomdpModel) -> list[ValueVector]:
    stack = stacked_value_vectors(delta, model)
    return [ValueVector(row, delta.depth) for row in stack[1:]]


def propagate_belief(b: Belief | np.ndarray, model: DecPomdpModel) -> Belief:
    """One open-loop prediction step; needs action-independent state dynamics."""
    trans = model.state_transition
    if trans is None:
        raise UnsupportedModelError("state dynamics depend on the joint action; open-loop prediction undefined")
    b = as_belief(b)
    if len(b) != model.n_states:
        raise DimensionError(f"belief has {len(b)} entries, model has {model.n_states} states")
    nxt = b.probs @ trans
    nxt = np.clip(nxt, 0.0, None)
    return Belief(nxt / nxt.sum())
