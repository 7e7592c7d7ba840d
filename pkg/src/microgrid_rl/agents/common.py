"""Return and target arithmetic, exploration schedule, policies and rollout
evaluation shared by all learners."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .. import nn
from ..env import N_ACTIONS, Microgrid, StepInfo, daily_cost


def n_step_advantage(rewards: Sequence[float], bootstrap: float, v_s: float, gamma: float) -> float:
    """Discounted n-step return plus discounted bootstrap, minus the baseline."""
    if len(rewards) == 0:
        raise ValueError("need at least one reward")
    ret = bootstrap
    for r in reversed(rewards):
        ret = r + gamma * ret
    return ret - v_s


def critic_loss(transitions, values, gamma: float) -> float:
    """Sum of squared TD errors. ``values`` holds one (v(S), v(S')) pair per
    transition; terminal transitions ignore v(S')."""
    values = np.asarray(values, dtype=float).reshape(-1, 2)
    if len(values) != len(transitions):
        raise ValueError("transitions and values must be aligned")
    total = 0.0
    for t, (v_s, v_next) in zip(transitions, values):
        bootstrap = 0.0 if t.terminal else v_next
        delta = t.reward + gamma * bootstrap - v_s
        total += delta * delta
    return total


def dqn_target(transition, target_params: nn.ParameterSet, gamma: float) -> float:
    if transition.terminal:
        return float(transition.reward)
    q_next = nn.q_values(target_params, transition.next_obs)
    return float(transition.reward + gamma * np.max(q_next))


def double_dqn_target(transition, online_params: nn.ParameterSet, target_params: nn.ParameterSet,
                      gamma: float) -> float:
    """Online network picks the next action, target network scores it."""
    if transition.terminal:
        return float(transition.reward)
    best = int(np.argmax(nn.q_values(online_params, transition.next_obs)))
    return float(transition.reward + gamma * nn.q_values(target_params, transition.next_obs)[best])


def batch_dqn_targets(rewards, next_obs, terminal, gamma, target_params, online_params=None):
    q_t = nn.q_values(target_params, next_obs)
    if online_params is None:
        nxt = q_t.max(axis=1)
    else:
        best = np.argmax(nn.q_values(online_params, next_obs), axis=1)
        nxt = q_t[np.arange(len(best)), best]
    return rewards + gamma * np.where(terminal, 0.0, nxt)


@dataclass(frozen=True)
class EpsilonSchedule:
    """Linear decay of the uniform-mixing weight from ``start`` to ``floor``."""

    start: float = 1.0
    decay: float = 0.00005
    floor: float = 0.05

    def __call__(self, step: int) -> float:
        return max(self.start - self.decay * step, self.floor)


def mixed_policy(policy: np.ndarray, eps: float) -> np.ndarray:
    return (1.0 - eps) * policy + eps / len(policy)


def sample(rng: np.random.Generator, probs: np.ndarray) -> int:
    # inverse CDF; cheaper than rng.choice for one draw
    c = np.cumsum(probs)
    return int(min(np.searchsorted(c, rng.random() * c[-1], side="right"), len(probs) - 1))


# policies map an observation to an action index
Policy = Callable[[np.ndarray], int]


def greedy_policy(params: nn.ParameterSet, q_network: bool = False) -> Policy:
    def act(obs):
        if q_network:
            return int(np.argmax(nn.q_values(params, obs)))
        return int(np.argmax(nn.forward(params, obs)[0]))
    return act


def random_policy(seed: int = 0) -> Policy:
    rng = np.random.default_rng(seed)
    return lambda obs: int(rng.integers(N_ACTIONS))


def fixed_policy(action: int) -> Policy:
    return lambda obs: action


@dataclass(frozen=True)
class EpisodeStats:
    episode: int
    reward: float
    daily_cost: float
    entropy: float
    epsilon: float
    eval_reward: float = float("nan")  # greedy score on held-out days, if monitored


def play_day(grid: Microgrid, day: int, policy: Policy, seed=None) -> list[StepInfo]:
    state = grid.reset(day, seed)
    infos = []
    while True:
        out = grid.step(state, policy(grid.encode_observation(state)))
        infos.append(out.info)
        state = out.next_state
        if out.terminal:
            return infos


def evaluate(grid: Microgrid, policy: Policy, days: Sequence[int], seed=None):
    """Per-day (reward, daily cost) for ``policy`` over ``days``."""
    rewards, costs = [], []
    for d in days:
        infos = play_day(grid, d, policy, seed)
        rewards.append(sum(i.revenue - i.cost for i in infos))
        costs.append(daily_cost(infos))
    return np.array(rewards), np.array(costs)
