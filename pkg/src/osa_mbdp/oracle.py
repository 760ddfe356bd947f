"""Exact optima for short horizons, used to check MBDP.

Up to depth 2 every joint policy is evaluated.  At depth 3 the first agent's
trees are enumerated and the second agent's best response to each is solved
exactly, batched over all of the first agent's trees at once.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedModelError
from .model import Belief, DecPomdpModel, JointPolicy, PolicyTree, as_belief, evaluate_at_belief, joint_value_vector

MAX_ORACLE_HORIZON = 3


def all_trees(n_actions: int, n_obs: int, depth: int) -> list[PolicyTree]:
    """Every policy tree of the given depth, in a fixed order."""
    trees = [PolicyTree.leaf(a) for a in range(n_actions)]
    for _ in range(depth - 1):
        trees = [PolicyTree(a, combo) for a in range(n_actions) for combo in itertools.product(trees, repeat=n_obs)]
    return trees


@dataclass(frozen=True)
class OracleResult:
    horizon: int
    optimum: float
    n_enumerated: int
    # the optimal joint policy for depth <= 2, the first agent's optimal tree at depth 3
    policy: JointPolicy | None = None
    first_tree: PolicyTree | None = None


def _history_actions(tree: PolicyTree, level: int) -> list[int]:
    frontier = [tree]
    for _ in range(level):
        frontier = [c for n in frontier for c in n.children]
    return [n.action for n in frontier]


def best_response_values(trees_1: list[PolicyTree], model: DecPomdpModel, b0) -> np.ndarray:
    """Value of the second agent's exact best response to each of the first agent's trees."""
    depth = trees_1[0].depth
    nq, S = len(trees_1), model.n_states
    nA2, nO1, nO2 = model.n_actions[1], model.n_obs[0], model.n_obs[1]
    acts = [np.array([_history_actions(t, lvl) for t in trees_1]) for lvl in range(depth)]
    R = model.joint_reward
    K = model.kernel

    def recurse(w: np.ndarray, level: int) -> np.ndarray:
        # w[q, s, h1]: probability of (current state, first agent's history) jointly
        # with the second agent's own observation history so far
        a1 = acts[level]
        best = None
        for a2 in range(nA2):
            a = a1 * nA2 + a2  # (nq, H1)
            total = np.einsum("qsh,sqh->q", w, R[:, a])
            if level < depth - 1:
                for o2 in range(nO2):
                    o = np.arange(nO1) * nO2 + o2
                    kg = K[:, a][..., o]  # (S, nq, H1, S', nO1)
                    nxt = np.einsum("qsh,sqhto->qtho", w, kg).reshape(nq, S, -1)
                    total = total + recurse(nxt, level + 1)
            best = total if best is None else np.maximum(best, total)
        return best

    w0 = np.broadcast_to(as_belief(b0).probs[None, :, None], (nq, S, 1)).copy()
    return recurse(w0, 0)


def brute_force_optimum(model: DecPomdpModel, b0: Belief | np.ndarray, horizon: int) -> OracleResult:
    if model.n_agents != 2:
        raise UnsupportedModelError("the oracle handles two agents")
    if horizon > MAX_ORACLE_HORIZON:
        raise ValueError(
            f"exhaustive search is limited to horizon <= {MAX_ORACLE_HORIZON}; "
            "the number of joint policies grows doubly exponentially with depth"
        )
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    b0 = as_belief(b0)
    trees_1 = all_trees(model.n_actions[0], model.n_obs[0], horizon)
    if horizon <= 2:
        trees_2 = all_trees(model.n_actions[1], model.n_obs[1], horizon)
        best, best_policy = -np.inf, None
        for q1 in trees_1:
            for q2 in trees_2:
                delta = JointPolicy((q1, q2))
                v = evaluate_at_belief(joint_value_vector(delta, model), b0)
                if v > best + 1e-12:
                    best, best_policy = v, delta
        return OracleResult(horizon, float(best), len(trees_1) * len(trees_2), policy=best_policy)
    values = best_response_values(trees_1, model, b0)
    k = int(np.argmax(values))
    n2 = len(all_trees(model.n_actions[1], model.n_obs[1], horizon))
    return OracleResult(horizon, float(values[k]), len(trees_1) * n2, first_tree=trees_1[k])
