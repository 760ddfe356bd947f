import itertools

import numpy as np
import pytest

from osa_mbdp.model import DecPomdpModel, JointPolicy, PolicyTree
from osa_mbdp.radio import build_scenario, reference_scenario

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ref_scenario():
    return reference_scenario()


@pytest.fixture(scope="session")
def ref_model(ref_scenario):
    return build_scenario(ref_scenario)


def random_model(rng, n_agents=2, max_states=4, max_actions=3, max_obs=3, action_dependent=True):
    n_actions = tuple(int(x) for x in rng.integers(1, max_actions + 1, n_agents))
    n_obs = tuple(int(x) for x in rng.integers(1, max_obs + 1, n_agents))
    S = int(rng.integers(1, max_states + 1))
    A, O = int(np.prod(n_actions)), int(np.prod(n_obs))
    if action_dependent:
        kernel = rng.dirichlet(np.ones(S * O), size=(S, A)).reshape(S, A, S, O)
    else:
        trans = rng.dirichlet(np.ones(S), size=S)
        obs = rng.dirichlet(np.ones(O), size=(S, A))
        kernel = trans[:, None, :, None] * obs[:, :, None, :]
    rewards = rng.normal(size=(n_agents, S, A))
    return DecPomdpModel(n_actions, n_obs, kernel, rewards)


def random_tree(rng, n_actions, n_obs, depth):
    if depth == 1:
        return PolicyTree.leaf(int(rng.integers(n_actions)))
    kids = [random_tree(rng, n_actions, n_obs, depth - 1) for _ in range(n_obs)]
    return PolicyTree(int(rng.integers(n_actions)), kids)


def random_joint_policy(rng, model, depth):
    return JointPolicy(tuple(
        random_tree(rng, na, no, depth) for na, no in zip(model.n_actions, model.n_obs)
    ))


def trajectory_values(delta, model):
    """Forward enumeration of every state/observation trajectory (independent of the backward recursion).

    Returns (1 + n_agents, S): joint value followed by per-agent values, per start state.
    """
    S = model.n_states
    out = np.zeros((1 + model.n_agents, S))

    def walk(s0, s, nodes, prob):
        a = model.joint_action([n.action for n in nodes])
        out[0, s0] += prob * model.joint_reward[s, a]
        out[1:, s0] += prob * model.agent_rewards[:, s, a]
        if nodes[0].depth == 1:
            return
        for s2, o in itertools.product(range(S), range(model.n_joint_obs)):
            p = model.kernel[s, a, s2, o]
            if p > 0:
                obs = np.unravel_index(o, model.n_obs)
                walk(s0, s2, [n.children[k] for n, k in zip(nodes, obs)], prob * p)

    for s0 in range(S):
        walk(s0, s0, list(delta.trees), 1.0)
    return out
